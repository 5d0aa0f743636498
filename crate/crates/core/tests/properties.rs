use proptest::prelude::*;
use stein_queues::paths::{interpolate_affine, sobolev_norm, sup_distance, NormOrder, Path};
use stein_queues::quad::Tolerance;
use stein_queues::stein::{build_family, gram_matrix, FamilyVariant, Method};
use stein_queues::theta::{theta_forward, theta_inverse};

fn step_path() -> impl Strategy<Value = Path> {
    (
        -3.0..3.0f64,
        prop::collection::btree_set(1u32..999, 0..12),
        prop::collection::vec(-3.0..3.0f64, 12),
    )
        .prop_map(|(init, times, values)| {
            let jumps: Vec<f64> = times.iter().map(|t| *t as f64 / 1000.0).collect();
            Path::step(init, &jumps, &values[..jumps.len()], 1.0).unwrap()
        })
}

fn pl_path(knots: usize) -> impl Strategy<Value = Path> {
    prop::collection::vec(-3.0..3.0f64, knots + 1).prop_map(move |v| {
        let k: Vec<f64> = (0..=knots).map(|i| i as f64 / knots as f64).collect();
        Path::piecewise_linear(&k, &v).unwrap()
    })
}

fn at_knots(f: &Path, n: usize) -> Vec<f64> {
    (0..=n).map(|i| f.eval(i as f64 / n as f64)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_is_linear(f in step_path(), g in step_path(), a in -2.0..2.0f64, b in -2.0..2.0f64, n in 1usize..40) {
        let combo = interpolate_affine(&Path::lincomb(a, &f, b, &g).unwrap(), n, 1.0).unwrap();
        let (pf, pg) = (interpolate_affine(&f, n, 1.0).unwrap(), interpolate_affine(&g, n, 1.0).unwrap());
        for ((c, x), y) in at_knots(&combo, n).iter().zip(at_knots(&pf, n)).zip(at_knots(&pg, n)) {
            prop_assert!((c - (a * x + b * y)).abs() <= 1e-14 * (1.0 + c.abs()) * 8.0);
        }
    }

    #[test]
    fn interpolation_is_idempotent(f in step_path(), n in 1usize..40) {
        let once = interpolate_affine(&f, n, 1.0).unwrap();
        let twice = interpolate_affine(&once, n, 1.0).unwrap();
        prop_assert!(sup_distance(&once, &twice).unwrap() <= 1e-14);
    }

    #[test]
    fn sup_distance_is_a_metric(f in step_path(), g in step_path(), h in pl_path(7)) {
        let d = |a: &Path, b: &Path| sup_distance(a, b).unwrap();
        prop_assert_eq!(d(&f, &g), d(&g, &f));
        prop_assert_eq!(d(&f, &f), 0.0);
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
    }

    #[test]
    fn theta_is_linear_and_invertible(f in step_path(), g in step_path(), a in -2.0..2.0f64, tau in 0.05..4.0f64) {
        let combo = theta_forward(&Path::lincomb(a, &f, 1.0, &g).unwrap(), tau).unwrap();
        let (tf, tg) = (theta_forward(&f, tau).unwrap(), theta_forward(&g, tau).unwrap());
        prop_assert!((combo.initial - (a * tf.initial + tg.initial)).abs() <= 1e-12);
        let sum = Path::lincomb(a, &tf.residual, 1.0, &tg.residual).unwrap();
        prop_assert!(sup_distance(&combo.residual, &sum).unwrap() <= 1e-12);
        let back = theta_inverse(tf.initial, &tf.residual, tau).unwrap();
        prop_assert!(sup_distance(&back, &f).unwrap() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sobolev_norm_is_reversal_symmetric(v in prop::collection::vec(-3.0..3.0f64, 7), eta in 0.05..0.9f64, p in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let k: Vec<f64> = (0..7).map(|i| i as f64 / 6.0).collect();
        let rev: Vec<f64> = v.iter().rev().copied().collect();
        let order = NormOrder::new(eta, p).unwrap();
        let tol = Tolerance::new(1e-10, 1e-10);
        let a = sobolev_norm(&Path::piecewise_linear(&k, &v).unwrap(), order, tol).unwrap();
        let b = sobolev_norm(&Path::piecewise_linear(&k, &rev).unwrap(), order, tol).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a.max(1e-3), "{} vs {}", a, b);
    }

    #[test]
    fn embedding_order_is_respected(f in step_path(), e1 in 0.05..0.95f64, e2 in 0.05..0.95f64, p1 in 1.0..4.0f64, p2 in 1.0..4.0f64) {
        let (lo, hi) = if e1 <= e2 { ((e1, p1), (e2, p2)) } else { ((e2, p2), (e1, p1)) };
        prop_assume!(hi.0 - 1.0 / hi.1 >= lo.0 - 1.0 / lo.1);
        let tol = Tolerance::new(1e-6, 1e-6);
        let finite = |(eta, p): (f64, f64)| sobolev_norm(&f, NormOrder::new(eta, p).unwrap(), tol).is_ok();
        if finite(hi) {
            prop_assert!(finite(lo));
        }
    }

    #[test]
    fn gram_is_symmetric(n in 1usize..7, lambda in 0.2..3.0f64, mu in 0.2..5.0f64, infinite in any::<bool>()) {
        let variant = if infinite {
            FamilyVariant::MMInfty { lambda, mu, horizon: 1.0 }
        } else {
            FamilyVariant::MM1 { lambda, mu, horizon: 1.0 }
        };
        let family = build_family(variant, n).unwrap();
        for method in [Method::ClosedForm, Method::Exact] {
            let g = gram_matrix(&family, method).unwrap();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g[i][j], g[j][i]);
                }
            }
        }
    }
}
