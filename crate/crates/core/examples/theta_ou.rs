use stein_queues::paths::{sup_distance, Path};
use stein_queues::stats::Moments;
use stein_queues::theta::{ou_variance, sample_ou_limit, theta_forward, theta_inverse};
use stein_queues::StreamFactory;

fn main() -> stein_queues::Result<()> {
    let f = Path::step(0.5, &[0.3, 0.6], &[1.5, -0.2], 1.0)?;
    let image = theta_forward(&f, 2.0)?;
    let back = theta_inverse(image.initial, &image.residual, 2.0)?;
    println!("round trip error {:e}", sup_distance(&f, &back)?);

    let (lambda, mu) = (1.0, 2.0);
    let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    let ends = StreamFactory::new(5).replicate(20_000, |_, rng| sample_ou_limit(lambda, mu, &grid, rng).map(|p| p.eval(1.0)));
    let ends: Vec<f64> = ends.into_iter().collect::<stein_queues::Result<_>>()?;
    let m = Moments::from_slice(&ends);
    println!("Var X(1): sample {:.4} ± {:.4}, exact {:.4}", m.variance(), m.se_variance(), ou_variance(lambda, mu, 1.0));
    Ok(())
}
