use rand::Rng;
use stein_queues::paths::{sup_distance, Path};
use stein_queues::quad::{integrate, Tolerance};
use stein_queues::queues::gamma_fn;
use stein_queues::stats::{covariance, Moments};
use stein_queues::theta::{
    sample_bm, sample_ou_limit, sample_ou_paired, sample_time_changed_bm, theta_forward, theta_inverse,
};
use stein_queues::{Error, RandomStream, StreamFactory};

fn random_step(rng: &mut RandomStream) -> Path {
    let k = rng.random_range(1..15usize);
    let mut times: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..0.99)).collect();
    times.sort_by(f64::total_cmp);
    let values: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
    Path::step(rng.normal(), &times, &values, 1.0).unwrap()
}

fn random_pl(rng: &mut RandomStream) -> Path {
    let knots: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let mut values: Vec<f64> = knots.iter().map(|_| rng.normal()).collect();
    values[0] = 0.0;
    Path::piecewise_linear(&knots, &values).unwrap()
}

#[test]
fn forward_simple_cases() {
    let zero = theta_forward(&Path::constant(0.0, 1.0).unwrap(), 2.0).unwrap();
    assert_eq!(zero.initial, 0.0);
    assert_eq!(sup_distance(&zero.residual, &Path::constant(0.0, 1.0).unwrap()).unwrap(), 0.0);
    let c = theta_forward(&Path::constant(1.5, 2.0).unwrap(), 0.4).unwrap();
    for t in [0.0, 0.3, 1.7] {
        assert!((c.residual.eval(t) - 1.5 * 0.4 * t).abs() < 1e-14);
    }
}

#[test]
fn forward_is_linear() {
    let mut rng = StreamFactory::new(30).stream(0);
    for _ in 0..20 {
        let (f, g) = (random_step(&mut rng), random_step(&mut rng));
        let (a, b, tau) = (rng.normal(), rng.normal(), rng.random_range(0.1..3.0));
        let combo = theta_forward(&Path::lincomb(a, &f, b, &g).unwrap(), tau).unwrap();
        let (tf, tg) = (theta_forward(&f, tau).unwrap(), theta_forward(&g, tau).unwrap());
        assert!((combo.initial - (a * tf.initial + b * tg.initial)).abs() < 1e-12);
        let sum = Path::lincomb(a, &tf.residual, b, &tg.residual).unwrap();
        assert!(sup_distance(&combo.residual, &sum).unwrap() < 1e-12);
    }
}

#[test]
fn inverse_of_zero() {
    let f = theta_inverse(2.0, &Path::constant(0.0, 3.0).unwrap(), 0.5).unwrap();
    for t in [0.0, 1.0, 2.9] {
        assert!((f.eval(t) - 2.0 * (-0.5 * t).exp()).abs() < 1e-14);
    }
    let bad = Path::constant(1.0, 1.0).unwrap();
    assert!(matches!(theta_inverse(0.0, &bad, 1.0), Err(Error::Domain(_))));
}

#[test]
fn round_trips() {
    let mut rng = StreamFactory::new(31).stream(0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = random_step(&mut rng);
        let tau = rng.random_range(0.1..4.0);
        let im = theta_forward(&f, tau).unwrap();
        assert_eq!(im.residual.eval(0.0), 0.0);
        worst = worst.max(sup_distance(&f, &theta_inverse(im.initial, &im.residual, tau).unwrap()).unwrap());
    }
    assert!(worst < 1e-10, "{worst}");
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let eta = random_pl(&mut rng);
        let tau = rng.random_range(0.1..4.0);
        let back = theta_forward(&theta_inverse(0.0, &eta, tau).unwrap(), tau).unwrap();
        assert!(back.initial.abs() < 1e-12);
        worst = worst.max(sup_distance(&back.residual, &eta).unwrap());
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn inverse_is_lipschitz() {
    let mut rng = StreamFactory::new(32).stream(0);
    let mut k: f64 = 0.0;
    for _ in 0..50 {
        let (a, b) = (random_pl(&mut rng), random_pl(&mut rng));
        let tau = rng.random_range(0.1..3.0);
        let d_in = sup_distance(&a, &b).unwrap();
        let d_out = sup_distance(&theta_inverse(0.0, &a, tau).unwrap(), &theta_inverse(0.0, &b, tau).unwrap()).unwrap();
        k = k.max(d_out / d_in);
    }
    // ‖Θ⁻¹η‖ ≤ (2 - e^{-τT})‖η‖
    assert!(k <= 2.0, "fitted Lipschitz constant {k}");
}

#[test]
fn time_changed_bm_moments() {
    let (lambda, mu) = (1.0, 2.0);
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let paths = StreamFactory::new(33).replicate(100_000, |_, rng| {
        let p = sample_time_changed_bm(lambda, mu, &grid, rng).unwrap();
        (p.eval(0.5), p.eval(1.0) - p.eval(0.5))
    });
    let mid: Vec<f64> = paths.iter().map(|p| p.0).collect();
    let m = Moments::from_slice(&mid);
    assert!((m.variance() - gamma_fn(0.5, lambda, mu)).abs() <= 3.0 * m.se_variance());
    let late: Vec<f64> = paths.iter().map(|p| p.1).collect();
    let corr = covariance(&mid, &late) / (m.variance() * Moments::from_slice(&late).variance()).sqrt();
    assert!(corr.abs() <= 3.0 / (100_000f64).sqrt());
    let mut rng = StreamFactory::new(1).stream(0);
    assert!(matches!(sample_time_changed_bm(1.0, 1.0, &[0.0, 0.5, 0.4], &mut rng), Err(Error::Parameter(_))));
    let b = sample_bm(&[0.0, 1.0], &mut rng).unwrap();
    assert_eq!(b.eval(0.0), 0.0);
}

#[test]
fn ou_variance_matches_ito_isometry() {
    let (lambda, mu, t) = (1.0, 1.5, 1.0);
    let oracle = integrate(
        |s: f64| (-2.0 * mu * (t - s)).exp() * lambda * (2.0 - (-mu * s).exp()),
        0.0,
        t,
        Tolerance::default(),
    )
    .unwrap()
    .value;
    let grid = [0.0, 0.3, 0.7, 1.0];
    let ends = StreamFactory::new(34).replicate(100_000, |_, rng| sample_ou_limit(lambda, mu, &grid, rng).unwrap().eval(1.0));
    let m = Moments::from_slice(&ends);
    assert!((m.variance() - oracle).abs() <= 3.0 * m.se_variance(), "{} vs {oracle}", m.variance());
    let mut rng = StreamFactory::new(2).stream(0);
    let far = sample_ou_limit(1.0, 200.0, &[0.0, 0.5, 1.0], &mut rng).unwrap();
    assert!(far.eval(1.0).is_finite());
}

#[test]
fn paired_driver_is_recovered_by_theta() {
    let (lambda, mu) = (1.0, 2.0);
    let gap = |m: usize, seed: u64| {
        let grid: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        let errs = StreamFactory::new(seed).replicate(400, |_, rng| {
            let s = sample_ou_paired(lambda, mu, &grid, rng).unwrap();
            sup_distance(&theta_forward(&s.ou, mu).unwrap().residual, &s.driver).unwrap()
        });
        Moments::from_slice(&errs).mean
    };
    let (coarse, fine) = (gap(100, 35), gap(200, 36));
    assert!(fine < coarse, "{fine} vs {coarse}");
}
