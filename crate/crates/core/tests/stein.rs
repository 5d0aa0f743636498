use stein_queues::quad::{integrate_to_infinity, integrate_with_breaks, Tolerance};
use stein_queues::stein::{
    appendix_b_terms, build_family, diagonal_cubes, diagonal_terms, gram_matrix, off_diagonal_terms, stein_bound,
    stein_bound_with, triple_abs_sum, AppendixTerms, BoundReport, FamilyVariant, Method,
};
use stein_queues::ppp::Kernel;
use stein_queues::Error;

fn mminfty(lambda: f64, mu: f64, n: usize) -> stein_queues::stein::OrthogonalFamily {
    build_family(FamilyVariant::MMInfty { lambda, mu, horizon: 1.0 }, n).unwrap()
}

fn gamma(t: f64, lambda: f64, mu: f64) -> f64 {
    lambda * (2.0 * t - (1.0 - (-mu * t).exp()) / mu)
}

fn in_service(t: f64, x: f64, z: f64) -> f64 {
    if x <= t && t <= x + z {
        1.0
    } else {
        0.0
    }
}

fn overlap(i: usize, n: usize, x: f64, z: f64) -> f64 {
    let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
    (b.min(x + z) - a.max(x)).max(0.0)
}

/// `∫ f(x, z) λn dx μe^{-μz} dz` over `[0, 1] × [0, ∞)`.
fn service_integral(f: impl Fn(f64, f64) -> f64, lambda: f64, mu: f64, n: usize) -> f64 {
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let tol = Tolerance::new(1e-13, 1e-12);
    let outer = |x: f64| {
        let zb: Vec<f64> = grid.iter().map(|g| g - x).filter(|z| *z > 0.0).collect();
        let g = |z: f64| f(x, z) * mu * (-mu * z).exp();
        let top = 1.0 - x;
        integrate_with_breaks(g, 0.0, top, &zb, tol).unwrap().value + integrate_to_infinity(g, top, tol).unwrap().value
    };
    lambda * n as f64 * integrate_with_breaks(outer, 0.0, 1.0, &grid, tol).unwrap().value
}

#[test]
fn mm1_gram_is_identity() {
    for &(lambda, mu, n, horizon) in &[(1.0, 1.0, 1, 1.0), (0.5, 2.0, 7, 3.0), (2.0, 0.3, 16, 0.5)] {
        let f = build_family(FamilyVariant::MM1 { lambda, mu, horizon }, n).unwrap();
        let g = gram_matrix(&f, Method::ClosedForm).unwrap();
        let exact = gram_matrix(&f, Method::Exact).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(g[i][j], if i == j { 1.0 } else { 0.0 });
                assert!((exact[i][j] - g[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn off_diagonal_cancellation() {
    let t = off_diagonal_terms(1.0, 1.0, 2, 0, 1).unwrap();
    assert_eq!(t.i1 + t.i3, 0.0);
    assert_eq!(t.i2 + t.i4, 0.0);
    assert_eq!(t.sum(), 0.0);
    let f = mminfty(1.0, 1.0, 2);
    assert!(matches!(appendix_b_terms(0, 1, &f).unwrap(), AppendixTerms::Off(_)));
    assert!(matches!(appendix_b_terms(1, 0, &f), Err(Error::Parameter(_))));
    assert!(matches!(off_diagonal_terms(1.0, 1.0, 4, 2, 2), Err(Error::Parameter(_))));
}

#[test]
fn off_diagonal_terms_match_defining_integrals() {
    let (lambda, mu, n, i, j) = (1.0, 2.0, 8, 1, 4);
    let t = off_diagonal_terms(lambda, mu, n, i, j).unwrap();
    let nf = n as f64;
    let da = |k: usize, x: f64, z: f64| in_service((k + 1) as f64 / nf, x, z) - in_service(k as f64 / nf, x, z);
    let oracle = [
        service_integral(|x, z| da(i, x, z) * da(j, x, z), lambda, mu, n),
        service_integral(|x, z| mu * overlap(i, n, x, z) * da(j, x, z), lambda, mu, n),
        service_integral(|x, z| mu * overlap(j, n, x, z) * da(i, x, z), lambda, mu, n),
        service_integral(|x, z| mu * mu * overlap(i, n, x, z) * overlap(j, n, x, z), lambda, mu, n),
    ];
    for (got, want) in [t.i1, t.i2, t.i3, t.i4].iter().zip(oracle) {
        assert!((got - want).abs() <= 1e-6 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn diagonal_terms_sum_to_increment() {
    let d = diagonal_terms(1.0, 1.0, 4, 2).unwrap();
    let target = 2.0 + 4.0 * ((-0.75f64).exp() - (-0.5f64).exp());
    assert!((d.sum() - target).abs() < 1e-12);
    let g = gram_matrix(&mminfty(1.0, 1.0, 2), Method::ClosedForm).unwrap();
    assert!((g[0][0] - 1.21306).abs() < 1e-5);
    for n in [1, 3, 8, 17, 64] {
        for &(lambda, mu) in &[(1.0, 1.0), (0.4, 5.0)] {
            let g = gram_matrix(&mminfty(lambda, mu, n), Method::ClosedForm).unwrap();
            for (i, row) in g.iter().enumerate() {
                let nf = n as f64;
                let want = nf * (gamma((i + 1) as f64 / nf, lambda, mu) - gamma(i as f64 / nf, lambda, mu));
                assert!((row[i] - want).abs() < 1e-12 * want.max(1.0));
            }
        }
    }
}

#[test]
fn closed_form_agrees_with_integration() {
    for &(n, mu) in &[(1, 1.0), (5, 3.0), (16, 1.0), (32, 0.5)] {
        let f = mminfty(1.3, mu, n);
        let closed = gram_matrix(&f, Method::ClosedForm).unwrap();
        let exact = gram_matrix(&f, Method::Exact).unwrap();
        for i in 0..n {
            assert!((closed[i][i] - exact[i][i]).abs() <= 1e-6 * closed[i][i]);
            for j in 0..n {
                assert_eq!(closed[i][j], closed[j][i]);
                if i != j {
                    assert_eq!(closed[i][j], 0.0);
                    assert!(exact[i][j].abs() < 1e-8, "{i} {j} {}", exact[i][j]);
                }
            }
        }
    }
    let f = mminfty(1.0, 2.0, 4);
    let closed = gram_matrix(&f, Method::ClosedForm).unwrap();
    let quad = gram_matrix(&f, Method::Quadrature).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((closed[i][j] - quad[i][j]).abs() <= 1e-6 * closed[i][j].abs().max(1e-2));
        }
    }
}

#[test]
fn mm1_triple_sum() {
    let f = build_family(FamilyVariant::MM1 { lambda: 1.0, mu: 3.0, horizon: 1.0 }, 4).unwrap();
    assert!((triple_abs_sum(&f, Method::ClosedForm).unwrap() - 2.0).abs() < 1e-12);
    assert!((triple_abs_sum(&f, Method::Exact).unwrap() - 2.0).abs() < 1e-12);
    let per_n: Vec<f64> = [2, 8, 32]
        .iter()
        .map(|&n| {
            let f = build_family(FamilyVariant::MM1 { lambda: 0.7, mu: 1.1, horizon: 2.5 }, n).unwrap();
            triple_abs_sum(&f, Method::ClosedForm).unwrap() / n as f64
        })
        .collect();
    assert!(per_n.iter().all(|v| (v - per_n[0]).abs() < 1e-14));
}

#[test]
fn mminfty_triple_sum() {
    let mut per_n = Vec::new();
    for n in [8, 16, 32, 64] {
        let f = mminfty(1.0, 1.0, n);
        let t = triple_abs_sum(&f, Method::ClosedForm).unwrap();
        assert!(t >= diagonal_cubes(&f).unwrap());
        per_n.push(t / n as f64);
    }
    let (lo, hi) = per_n.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi / lo <= 1.5, "{per_n:?}");
    for &(n, mu) in &[(3, 1.0), (6, 20.0)] {
        let f = mminfty(1.0, mu, n);
        let a = triple_abs_sum(&f, Method::ClosedForm).unwrap();
        let b = triple_abs_sum(&f, Method::Exact).unwrap();
        assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
    }
}

#[test]
fn bound_shape() {
    let (lambda, mu, n) = (1.0, 3.0, 16);
    let f = build_family(FamilyVariant::MM1 { lambda, mu, horizon: 1.0 }, n).unwrap();
    let r = stein_bound(&f, 0.2).unwrap();
    let limit = 0.5 / ((n as f64).sqrt() * (lambda + mu).sqrt());
    assert!((r.bound_at(1e-12) - limit).abs() < 1e-12);
    assert_eq!(r.bound, r.bound_at(0.2));
    let etas = [0.01, 0.1, 0.25, 0.49];
    assert!(etas.windows(2).all(|w| r.bound_at(w[0]) < r.bound_at(w[1])));
    assert!(r.xi_sq.iter().all(|x| (x - 1.0 / n as f64).abs() < 1e-15));
    for eta in [0.0, 0.5, -0.1] {
        assert!(matches!(stein_bound(&f, eta), Err(Error::Parameter(_))));
    }
    let s: String = serde_json::to_string(&r).unwrap();
    let back: BoundReport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
}

#[test]
fn mminfty_bound_scales_like_root_n() {
    let eta = 0.1;
    let c: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let r = stein_bound(&mminfty(1.0, 1.0, n), eta).unwrap();
            r.bound * (n as f64).powf(0.5 - eta)
        })
        .collect();
    let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi / lo <= 1.5, "{c:?}");
}

#[test]
fn non_orthogonal_family_is_rejected() {
    let mut f = build_family(FamilyVariant::MM1 { lambda: 1.0, mu: 1.0, horizon: 1.0 }, 3).unwrap();
    f.kernels[2] = Kernel::SignedStrip {
        start: 0.0,
        end: 0.5,
        scale: 1.0,
    };
    match stein_bound_with(&f, 0.1, Method::Exact) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("0 and 2"), "{msg}"),
        other => panic!("{other:?}"),
    }
    let bad = build_family(FamilyVariant::MMInfty { lambda: 1.0, mu: 1.0, horizon: 2.0 }, 4);
    assert!(matches!(bad, Err(Error::Unsupported(_))));
    assert!(matches!(build_family(FamilyVariant::MM1 { lambda: 1.0, mu: 1.0, horizon: 1.0 }, 0), Err(Error::Parameter(_))));
}
