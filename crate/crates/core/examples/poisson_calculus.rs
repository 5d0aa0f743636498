//! Sample a marked Poisson process and check the integration by parts formula
//! against a capped-count functional.

use stein_queues::ppp::{
    campbell_mecke_check, divergence, sample_marked_ppp, CappedCount, ControlMeasure, Kernel,
};
use stein_queues::StreamFactory;

fn main() -> stein_queues::Result<()> {
    let measure = ControlMeasure::mm1(1.0, 2.0, 10, 1.0)?;
    let mut rng = StreamFactory::new(1).stream(0);
    let config = sample_marked_ppp(&measure, &mut rng);
    println!("{} atoms, {} arrivals", config.len(), config.count_mark(1.0));

    let u = Kernel::SignedStrip { start: 0.2, end: 0.7, scale: 1.0 };
    println!("divergence of the strip kernel: {:.4}", divergence(&u, &config, &measure)?);

    let cm = campbell_mecke_check(&CappedCount(25), &u, &measure, 20_000, &StreamFactory::new(2))?;
    println!(
        "E[F δu] = {:.4} ± {:.4}, E[∫ DF u dν] = {:.4} ± {:.4}",
        cm.lhs.mean, cm.lhs.se, cm.rhs.mean, cm.rhs.se
    );
    Ok(())
}
