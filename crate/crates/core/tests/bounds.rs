use rand::Rng;
use stein_queues::bounds::{
    brownian_interpolation_gap, chebyshev_tau_bound, chebyshev_tau_probability, fit_max_poisson_constant,
    interpolation_gap, interpolation_gap_bound, jumps_per_cell, lambert_w0, max_poisson_bound, max_poisson_mc,
    JumpBoundParams,
};
use stein_queues::paths::{NormOrder, Path};
use stein_queues::{Error, StreamFactory};

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (f(hi) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn lambert_inverts_w_exp_w() {
    for k in 0..=48 {
        let x = 10f64.powf(-6.0 + 12.0 * k as f64 / 48.0);
        let w = lambert_w0(x).unwrap();
        assert!((w * w.exp() - x).abs() <= 1e-12 * x, "x = {x}");
    }
    let oracle = bisect(|w| w * w.exp() - 1.0, 0.0, 1.0);
    assert!((lambert_w0(1.0).unwrap() - oracle).abs() < 1e-14);
    assert!((oracle - 0.5671432904).abs() < 1e-10);
    assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(lambert_w0(-0.4), Err(Error::Domain(_))));
    let w = lambert_w0(-0.3).unwrap();
    assert!((w * w.exp() + 0.3).abs() < 1e-13);
}

/// `ν + inf_u (log n + ν(e^u - u - 1))/u` by successively refined 64-point grids.
fn grid_minimum(n: usize, nu: f64) -> f64 {
    let g = |u: f64| ((n as f64).ln() + nu * (u.exp() - u - 1.0)) / u;
    let (mut lo, mut hi) = (1e-3, 20.0);
    let mut best = f64::INFINITY;
    for _ in 0..40 {
        let step = (hi - lo) / 63.0;
        let (k, v) = (0..64)
            .map(|k| (k, g(lo + k as f64 * step)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        best = best.min(v);
        let c = lo + k as f64 * step;
        (lo, hi) = ((c - step).max(1e-6), c + step);
    }
    nu + best
}

#[test]
fn max_poisson_w_form_is_the_infimum() {
    let b = max_poisson_bound(5000, 1.0).unwrap();
    let a = (5000f64 / std::f64::consts::E).ln();
    assert!((b.w_form - a / lambert_w0(a / std::f64::consts::E).unwrap()).abs() < 1e-12);
    for &(n, nu) in &[(5000, 1.0), (100, 0.5), (1_000_000, 2.0), (50, 3.0)] {
        let b = max_poisson_bound(n, nu).unwrap();
        let oracle = grid_minimum(n, nu);
        assert!((b.w_form - oracle).abs() <= 1e-9 * oracle, "n = {n}: {} vs {oracle}", b.w_form);
    }
    let ns = [10, 100, 1000, 10_000, 100_000, 1_000_000];
    let forms: Vec<f64> = ns.iter().map(|&n| max_poisson_bound(n, 1.0).unwrap().w_form).collect();
    assert!(forms.windows(2).all(|w| w[0] <= w[1]));
    assert!(matches!(max_poisson_bound(2, 1.0), Err(Error::Regime(_))));
    assert!(matches!(max_poisson_bound(1, 1.0), Err(Error::Parameter(_))));
    let c = fit_max_poisson_constant(&ns, 1.0).unwrap();
    for &n in &ns {
        let ln = (n as f64).ln();
        assert!(max_poisson_bound(n, 1.0).unwrap().w_form <= c * ln / ln.ln() * (1.0 + 1e-12));
    }
}

#[test]
fn max_poisson_asymptotic_regime() {
    let small = max_poisson_bound(1000, 1.0).unwrap();
    assert!(!small.asymptotic_valid && !small.asymptotic_reliable());
    let n = (((1f64 + 1.0).exp() + 1.0).exp() * 1.01) as usize;
    let big = max_poisson_bound(n, 1.0).unwrap();
    assert!(big.asymptotic_valid);
    let d = big.asymptotic_denominator.unwrap();
    assert_eq!(big.asymptotic_reliable(), d >= 0.5);
    assert!(big.asymptotic.unwrap() > 0.0);
}

#[test]
fn max_poisson_monte_carlo_below_bound() {
    let est = max_poisson_mc(5000, 1.0, 20_000, &StreamFactory::new(40));
    let b = max_poisson_bound(5000, 1.0).unwrap();
    assert!(est.mean + 3.0 * est.se <= b.w_form, "{} vs {}", est.mean, b.w_form);
}

#[test]
fn jump_bound_values() {
    let p = JumpBoundParams {
        jump: 1,
        alpha: 1.0,
        n: 100,
        horizon: 1.0,
    };
    let ln = 100f64.ln();
    assert!((interpolation_gap_bound(&p).unwrap() - 2.0 * ln / ln.ln()).abs() < 1e-14);
    // J = 1 at n = e^e would give exactly 2e; check the limit from both sides
    let ee = std::f64::consts::E.exp();
    let below = interpolation_gap_bound(&JumpBoundParams { n: ee.floor() as usize, ..p }).unwrap();
    let above = interpolation_gap_bound(&JumpBoundParams { n: ee.ceil() as usize, ..p }).unwrap();
    let two_e = 2.0 * std::f64::consts::E;
    assert!(below >= two_e && above >= two_e && (below - two_e) < 0.01 && (above - two_e) < 0.01);
    let three = interpolation_gap_bound(&JumpBoundParams { jump: 3, ..p }).unwrap();
    assert!((three - 3.0 * interpolation_gap_bound(&p).unwrap()).abs() < 1e-13);
    for n in [1, 2] {
        assert!(matches!(interpolation_gap_bound(&JumpBoundParams { n, ..p }), Err(Error::Domain(_))));
    }
}

#[test]
fn cell_gap_is_dominated_by_jump_counts() {
    let mut rng = StreamFactory::new(41).stream(0);
    for _ in 0..200 {
        let k = rng.random_range(1..40usize);
        let mut times: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut v = 0.0;
        let values: Vec<f64> = times
            .iter()
            .map(|_| {
                v += if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                v
            })
            .collect();
        let f = Path::step(0.0, &times, &values, 1.0).unwrap();
        let n = rng.random_range(1..20usize);
        let counts = jumps_per_cell(&f, n);
        assert_eq!(counts.iter().sum::<usize>(), times.len());
        let worst = *counts.iter().max().unwrap() as f64;
        assert!(interpolation_gap(&f, n).unwrap() <= worst + 1e-12);
    }
}

#[test]
fn chebyshev() {
    assert!((chebyshev_tau_bound(1.0, 100, 1.0).unwrap() - 0.01).abs() < 1e-16);
    assert!((chebyshev_tau_bound(1.0, 200, 1.0).unwrap() - 0.005).abs() < 1e-16);
    assert!(chebyshev_tau_bound(0.0, 10, 1.0).is_err());
    for n in [1, 4, 100] {
        let p = chebyshev_tau_probability(1.0, n, 1.0, 100_000, &StreamFactory::new(42)).unwrap();
        assert!(p.estimate <= chebyshev_tau_bound(1.0, n, 1.0).unwrap());
        assert!(p.lower <= p.estimate && p.estimate <= p.upper);
    }
}

#[test]
fn brownian_gap_rate() {
    let order = NormOrder::new(0.05, 2.0).unwrap();
    let streams = StreamFactory::new(43);
    let est: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| brownian_interpolation_gap(order, n, 16 * n, 200, &streams).unwrap().mean)
        .collect();
    let target = 2f64.powf(-(0.5 - order.eta));
    for w in est.windows(2) {
        let r = w[1] / w[0];
        assert!((r / target - 1.0).abs() <= 0.25, "ratio {r} vs {target}");
    }
    // the far field adds a log(n) factor that fades slowly; check the slope at large n
    let large: Vec<f64> = [256, 2048]
        .iter()
        .map(|&n| brownian_interpolation_gap(order, n, 16 * n, 60, &streams).unwrap().mean)
        .collect();
    let slope = (large[1] / large[0]).ln() / 8f64.ln();
    assert!((-0.6..=-0.4).contains(&slope), "slope {slope}");
    assert!(matches!(
        brownian_interpolation_gap(order, 16, 100, 10, &streams),
        Err(Error::Precondition(_))
    ));
    assert!(brownian_interpolation_gap(NormOrder::new(0.6, 2.0).unwrap(), 4, 64, 10, &streams).is_err());
}
