//! Simulate both queues once and print a few summaries of the rescaled paths.

use stein_queues::queues::{simulate_mm1, simulate_mminfty_events, simulate_mminfty_trapeze, QueueParams};
use stein_queues::StreamFactory;

fn main() -> stein_queues::Result<()> {
    let streams = StreamFactory::new(11);
    let mm1 = QueueParams::new(1.0, 2.0, 1000, 1.0, 1.0)?;
    mm1.check_mm1_regime()?;
    let b = simulate_mm1(&mm1, &mut streams.stream(0))?;
    println!(
        "M/M/1: {} up, {} down, L̄(T) = {:.4}, fluid(T) = {:.4}, Z(T) = {:.4}",
        b.up_jumps,
        b.down_jumps,
        b.scaled.eval(1.0),
        b.fluid.eval(1.0),
        b.z.eval(1.0)
    );

    let inf = QueueParams::new(5.0, 1.0, 200, 1.0, 0.0)?;
    let t = simulate_mminfty_trapeze(&inf, &mut streams.stream(1))?;
    let e = simulate_mminfty_events(&inf, &mut streams.stream(2))?;
    println!("M/M/∞ trapeze: L̄(T) = {:.4}, event driven: {:.4}", t.scaled.eval(1.0), e.scaled.eval(1.0));
    if let Some(y) = &t.y {
        println!("Y(T) = {:.4}", y.eval(1.0));
    }
    Ok(())
}
