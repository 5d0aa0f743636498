use stein_queues::paths::sup_distance;
use stein_queues::ppp::{MarkedPoint, PointConfiguration};
use stein_queues::queues::{
    fluid_mm1, fluid_mminfty, gamma_fn, hitting_time_zero_stats, simulate_mm1, simulate_mm1_from,
    simulate_mminfty_events, simulate_mminfty_from, simulate_mminfty_trapeze, Normalization, QueueParams,
};
use stein_queues::stats::{chi_square_gof, Moments};
use stein_queues::{Error, StreamFactory};
use statrs::distribution::{Discrete, Poisson};

#[test]
fn pure_birth_when_no_departures() {
    let p = QueueParams::new(1.0, 2.0, 10, 1.0, 0.5).unwrap();
    let arrivals: Vec<MarkedPoint> = [0.1, 0.4, 0.45, 0.9].iter().map(|&t| MarkedPoint { time: t, mark: 1.0 }).collect();
    let b = simulate_mm1_from(&p, &PointConfiguration::new(arrivals, 1.0).unwrap(), Normalization::SqrtSum).unwrap();
    assert_eq!(b.count.eval(1.0), 5.0 + 4.0);
}

#[test]
fn mm1_fluid_mean() {
    let p = QueueParams::new(1.0, 2.0, 10_000, 0.5, 1.0).unwrap();
    let ends = StreamFactory::new(20).replicate(1000, |_, rng| simulate_mm1(&p, rng).unwrap().scaled.eval(0.5));
    let m = Moments::from_slice(&ends);
    assert!((m.mean - 0.5).abs() <= 3.0 * m.se_mean(), "{} ± {}", m.mean, m.se_mean());
}

#[test]
fn mm1_pathwise_identities() {
    let p = QueueParams::new(1.0, 2.0, 50, 0.4, 1.0).unwrap();
    let factor = (p.lambda + p.mu).sqrt() / (p.n as f64).sqrt();
    for r in 0..20 {
        let b = simulate_mm1(&p, &mut StreamFactory::new(21).stream(r)).unwrap();
        for (t, size) in b.count.jumps(0.0) {
            assert_eq!(size.abs(), 1.0);
            let lhs = b.z.eval(t) * factor + b.fluid.eval(t);
            assert!((lhs - b.scaled.eval(t)).abs() < 1e-12);
        }
        // before the queue empties there is no reflection
        let free = b.up_jumps as f64 - b.down_jumps as f64 + p.initial_count() as f64;
        if b.tau_zero > p.horizon {
            assert_eq!(free, b.count.eval(p.horizon));
        }
    }
}

#[test]
fn both_normalizations_are_available() {
    let p = QueueParams::new(1.0, 3.0, 16, 0.2, 1.0).unwrap();
    assert!((Normalization::SqrtSum.factor(&p) - 2.0).abs() < 1e-15);
    assert!((Normalization::Sum.factor(&p) - 1.0).abs() < 1e-15);
}

#[test]
fn fluid_limits() {
    let flat = QueueParams::new(1.0, 1.0, 1, 2.0, 0.7).unwrap();
    assert!(sup_distance(&fluid_mm1(&flat).unwrap(), &stein_queues::Path::constant(0.7, 2.0).unwrap()).unwrap() < 1e-15);
    let p = QueueParams::new(1.0, 2.0, 1, 3.0, 1.0).unwrap();
    let f = fluid_mm1(&p).unwrap();
    assert!((f.eval(0.25) - 0.75).abs() < 1e-15);
    assert_eq!(f.eval(2.0), 0.0);
    let q = QueueParams::new(1.0, 1.0, 1, 1.0, 0.0).unwrap();
    assert!((fluid_mminfty(&q).unwrap().eval(1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
}

#[test]
fn gamma_values() {
    assert_eq!(gamma_fn(0.0, 1.0, 1.0), 0.0);
    assert!((gamma_fn(0.5, 1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
    let (l, m, t, h) = (1.3, 0.7, 0.8, 1e-6);
    let slope = (gamma_fn(t + h, l, m) - gamma_fn(t, l, m)) / h;
    assert!((slope - l * (2.0 - (-m * t).exp())).abs() < 1e-6);
}

#[test]
fn mminfty_empty_and_regime() {
    let p = QueueParams::new(1.0, 1.0, 25, 1.0, 0.0).unwrap();
    let b = simulate_mminfty_from(&p, &PointConfiguration::empty(1.0)).unwrap();
    assert_eq!(b.count.eval(0.7), 0.0);
    assert!((b.z.eval(0.7) + 5.0 * fluid_mminfty(&p).unwrap().eval(0.7)).abs() < 1e-14);
    let bad = QueueParams::new(1.0, 1.0, 25, 1.0, 0.5).unwrap();
    let mut rng = StreamFactory::new(1).stream(0);
    assert!(matches!(simulate_mminfty_trapeze(&bad, &mut rng), Err(Error::Regime(_))));
}

#[test]
fn mminfty_fluid_mean_and_poisson_counts() {
    let p = QueueParams::new(1.0, 1.0, 1000, 1.0, 0.0).unwrap();
    let bundles = StreamFactory::new(22).replicate(2000, |_, rng| {
        let b = simulate_mminfty_trapeze(&p, rng).unwrap();
        (b.scaled.eval(1.0 - 1e-12), b.count.eval(0.5) as u64)
    });
    let m = Moments::from_slice(&bundles.iter().map(|b| b.0).collect::<Vec<_>>());
    assert!((m.mean - (1.0 - (-1f64).exp())).abs() <= 3.0 * m.se_mean());
    let law = Poisson::new(1000.0 * (1.0 - (-0.5f64).exp())).unwrap();
    let counts: Vec<u64> = bundles.iter().map(|b| b.1).collect();
    assert!(chi_square_gof(&counts, |k| law.pmf(k), 5.0).unwrap().p_value > 0.001);
}

#[test]
fn mminfty_event_simulator_reaches_stationary_mean() {
    let p = QueueParams::new(2.0, 4.0, 50, 4.0, 0.0).unwrap();
    let ends = StreamFactory::new(23).replicate(4000, |_, rng| simulate_mminfty_events(&p, rng).unwrap().count.eval(3.999));
    let m = Moments::from_slice(&ends);
    // n ρ (1 - e^{-μt}) is within 1e-6 of n ρ at t = 4
    assert!((m.mean - 25.0).abs() <= 3.0 * m.se_mean());
}

#[test]
fn y_integrates_the_step_exactly() {
    let p = QueueParams::new(1.0, 2.0, 4, 1.0, 0.0).unwrap();
    let atoms = vec![MarkedPoint { time: 0.2, mark: 0.3 }, MarkedPoint { time: 0.6, mark: 5.0 }];
    let b = simulate_mminfty_from(&p, &PointConfiguration::new(atoms, 1.0).unwrap()).unwrap();
    // L̄ = 1/4 on [0.2, 0.5) and [0.6, 1]; ∫L̄ = 0.3/4 + 0.4/4 at t = 1
    let y = b.y.unwrap();
    let expected = 2.0 * (0.25 + 2.0 * 0.7 / 4.0 - 1.0);
    assert!((y.eval(1.0 - 1e-15) - expected).abs() < 1e-12);
}

#[test]
fn hitting_time_diagnostics() {
    let t0 = QueueParams {
        lambda: 1.0,
        mu: 2.0,
        n: 10,
        horizon: 0.0,
        x0: 1.0,
    };
    assert_eq!(hitting_time_zero_stats(&t0, 100, &StreamFactory::new(1)).unwrap().estimate, 0.0);
    let small = hitting_time_zero_stats(&QueueParams::new(1.0, 2.0, 4, 0.5, 1.0).unwrap(), 10_000, &StreamFactory::new(24)).unwrap();
    let large = hitting_time_zero_stats(&QueueParams::new(1.0, 2.0, 16, 0.5, 1.0).unwrap(), 10_000, &StreamFactory::new(25)).unwrap();
    assert!(large.estimate < small.estimate, "{} vs {}", large.estimate, small.estimate);
    let wrong = QueueParams::new(2.0, 1.0, 4, 0.5, 1.0).unwrap();
    assert!(matches!(hitting_time_zero_stats(&wrong, 10, &StreamFactory::new(1)), Err(Error::Regime(_))));
}

#[test]
fn bundle_json_has_metadata() {
    let p = QueueParams::new(1.0, 2.0, 8, 0.3, 1.0).unwrap();
    let b = simulate_mm1(&p, &mut StreamFactory::new(26).stream(0)).unwrap();
    let j = serde_json::to_value(b.to_json(stein_queues::queues::Model::MM1, p, 26)).unwrap();
    assert_eq!(j["model"], "MM1");
    assert_eq!(j["seed"], 26);
    assert!(j["count"]["type"] == "step");
}
