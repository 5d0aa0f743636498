use stein_queues::bounds::{
    brownian_interpolation_gap, chebyshev_tau_bound, chebyshev_tau_probability, lambert_w0, max_poisson_bound,
    max_poisson_mc,
};
use stein_queues::paths::NormOrder;
use stein_queues::StreamFactory;

fn main() -> stein_queues::Result<()> {
    println!("W(1) = {:.10}", lambert_w0(1.0)?);
    let streams = StreamFactory::new(9);
    for n in [100, 5000, 100_000] {
        let b = max_poisson_bound(n, 1.0)?;
        let mc = max_poisson_mc(n, 1.0, 2000, &streams);
        println!(
            "n = {n:6}: E max ≈ {:.3} ± {:.3}, bound {:.3}, asymptotic {:?}",
            mc.mean, mc.se, b.w_form, b.asymptotic
        );
    }
    let p = chebyshev_tau_probability(1.0, 10, 1.0, 100_000, &streams)?;
    println!("P(N ≥ 2λnT) ≈ {:.5} <= {:.3}", p.estimate, chebyshev_tau_bound(1.0, 10, 1.0)?);
    let order = NormOrder::new(0.1, 2.0)?;
    for n in [16, 64] {
        let g = brownian_interpolation_gap(order, n, 16 * n, 200, &streams)?;
        println!("E‖π_n B - B‖ at n = {n}: {:.4} ± {:.4}", g.mean, g.se);
    }
    Ok(())
}
