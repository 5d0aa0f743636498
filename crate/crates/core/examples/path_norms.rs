use stein_queues::paths::{holder_norm, interpolate_affine, sobolev_norm, sup_distance, NormOrder, Path};
use stein_queues::quad::Tolerance;

fn main() -> stein_queues::Result<()> {
    let f = Path::step(0.0, &[0.15, 0.4, 0.42, 0.8], &[1.0, 0.0, -1.0, 0.5], 1.0)?;
    let tol = Tolerance::default();
    for n in [4, 16, 64] {
        let pi = interpolate_affine(&f, n, 1.0)?;
        println!(
            "n = {n:3}: sup gap {:.4}, Hölder(0.5) of π_n f {:.3}, W(0.2, 2) gap {:.4}",
            sup_distance(&f, &pi)?,
            holder_norm(&pi, 0.5)?,
            sobolev_norm(&pi.sub(&f)?, NormOrder::new(0.2, 2.0)?, tol)?
        );
    }
    // jumps make the norm infinite once η ≥ 1/p
    println!("{:?}", sobolev_norm(&f, NormOrder::new(0.6, 2.0)?, tol).err());
    Ok(())
}
