//! The acceptance criteria, one function each, at their pinned sizes and tolerances.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::experiment::{rate_fit, run_experiment, theorem_curve, ExperimentConfig, RateShape};
use crate::bounds::{
    brownian_interpolation_gap, chebyshev_tau_bound, chebyshev_tau_probability, interpolation_gap,
    interpolation_gap_bound, max_poisson_bound, max_poisson_mc, JumpBoundParams,
};
use crate::error::{Error, Result};
use crate::paths::{sup_distance, NormOrder, Path};
use crate::ppp::{
    campbell_mecke_check, sample_marked_ppp, CappedCount, ConstantFunctional, ControlMeasure, DivergenceFunctional,
    Kernel, McEstimate,
};
use crate::quad::Tolerance;
use crate::queues::{gamma_fn, simulate_mm1, simulate_mminfty_events, simulate_mminfty_trapeze, Model, QueueParams};
use crate::rng::StreamFactory;
use crate::stats::{ks_two_sample, Moments};
use crate::stein::{
    build_family, diagonal_terms, gram_matrix, off_diagonal_terms, service_quadrature, stein_bound, triple_abs_sum,
    FamilyVariant, Method,
};
use crate::theta::{theta_forward, theta_inverse};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn timed(id: u8, name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> Result<CriterionResult> {
    let start = Instant::now();
    let (passed, detail) = body()?;
    Ok(CriterionResult {
        id,
        name: name.into(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

const SEED: u64 = 20_240_917;

fn streams(tag: &str) -> StreamFactory {
    StreamFactory::new(SEED).child(tag)
}

pub fn mm1_gram_identity() -> Result<CriterionResult> {
    timed(1, "MM1 Gram identity", || {
        let mut worst: f64 = 0.0;
        for n in [4, 16, 64] {
            for (lambda, mu) in [(1.0, 2.0), (1.0, 3.0), (2.0, 5.0)] {
                for horizon in [1.0, 0.4] {
                    let f = build_family(FamilyVariant::MM1 { lambda, mu, horizon }, n)?;
                    let g = gram_matrix(&f, Method::ClosedForm)?;
                    for (i, row) in g.iter().enumerate() {
                        for (j, v) in row.iter().enumerate() {
                            worst = worst.max((v - f64::from(u8::from(i == j))).abs());
                        }
                    }
                }
            }
        }
        Ok((worst <= 1e-13, format!("max |G - I| = {worst:e}")))
    })
}

pub fn mminfty_orthogonality() -> Result<CriterionResult> {
    timed(2, "MM∞ orthogonality", || {
        let (mut closed, mut quad, mut diag): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for mu in [1.0, 2.0] {
            for n in [2, 4, 8, 16, 32] {
                let f = build_family(FamilyVariant::MMInfty { lambda: 1.0, mu, horizon: 1.0 }, n)?;
                let g = gram_matrix(&f, Method::ClosedForm)?;
                let q = gram_matrix(&f, Method::Quadrature)?;
                for i in 0..n {
                    let nf = n as f64;
                    let target = nf * (gamma_fn((i + 1) as f64 / nf, 1.0, mu) - gamma_fn(i as f64 / nf, 1.0, mu));
                    diag = diag.max((g[i][i] - target).abs() / target);
                    for j in i + 1..n {
                        closed = closed.max(g[i][j].abs());
                        quad = quad.max(q[i][j].abs());
                    }
                }
            }
        }
        Ok((
            closed <= 1e-13 && quad < 1e-8 && diag <= 1e-12,
            format!("closed off-diagonal {closed:e}, quadrature off-diagonal {quad:e}, diagonal rel {diag:e}"),
        ))
    })
}

/// The ten closed-form terms and their defining integrals evaluated by 2-D quadrature.
pub fn appendix_b_pairs(lambda: f64, mu: f64, n: usize, i: usize, j: usize) -> Result<Vec<(&'static str, f64, f64)>> {
    let nf = n as f64;
    let alpha = move |k: usize| move |x: f64, z: f64| f64::from(u8::from(x <= k as f64 / nf && k as f64 / nf <= x + z));
    let beta = move |k: usize| {
        move |x: f64, z: f64| ((x + z).min((k + 1) as f64 / nf) - x.max(k as f64 / nf)).max(0.0)
    };
    let breaks: Vec<f64> = (0..=n).map(|k| k as f64 / nf).collect();
    let tol = Tolerance::new(1e-13, 1e-11);
    let q = |f: &(dyn Fn(f64, f64) -> f64 + Sync)| service_quadrature(f, &breaks, lambda, mu, n, 1.0, tol);
    let off = off_diagonal_terms(lambda, mu, n, i, j)?;
    let d = diagonal_terms(lambda, mu, n, i)?;
    let (ai, ai1, aj, aj1, bi, bj) = (alpha(i), alpha(i + 1), alpha(j), alpha(j + 1), beta(i), beta(j));
    Ok(vec![
        ("I1", off.i1, q(&|x, z| (ai1(x, z) - ai(x, z)) * (aj1(x, z) - aj(x, z)))?),
        ("I2", off.i2, mu * q(&|x, z| bi(x, z) * (aj1(x, z) - aj(x, z)))?),
        ("I3", off.i3, mu * q(&|x, z| bj(x, z) * (ai1(x, z) - ai(x, z)))?),
        ("I4", off.i4, mu * mu * q(&|x, z| bi(x, z) * bj(x, z))?),
        ("J1", d.j[0], q(&|x, z| ai1(x, z))?),
        ("J2", d.j[1], q(&|x, z| ai(x, z))?),
        ("J3", d.j[2], -2.0 * q(&|x, z| ai1(x, z) * ai(x, z))?),
        ("J4", d.j[3], 2.0 * mu * q(&|x, z| bi(x, z) * ai1(x, z))?),
        ("J5", d.j[4], -2.0 * mu * q(&|x, z| bi(x, z) * ai(x, z))?),
        ("J6", d.j[5], mu * mu * q(&|x, z| bi(x, z).powi(2))?),
    ])
}

pub fn appendix_b() -> Result<CriterionResult> {
    timed(3, "Closed-form Gram terms", || {
        let mut rng = streams("appendix").stream(0);
        let mut worst: f64 = 0.0;
        let mut at = String::new();
        for _ in 0..20 {
            let n = rng.random_range(2..=16usize);
            let i = rng.random_range(0..n - 1);
            let j = rng.random_range(i + 1..n);
            let lambda = rng.random_range(0.5..2.0);
            let mu = rng.random_range(0.5..4.0);
            for (name, closed, oracle) in appendix_b_pairs(lambda, mu, n, i, j)? {
                let rel = (closed - oracle).abs() / oracle.abs().max(1e-300);
                if rel > worst {
                    worst = rel;
                    let idx = if name.starts_with('I') { format!("i={i}, j={j}") } else { format!("i={i}") };
                    at = format!("{name} at ({idx}, λ={lambda:.3}, μ={mu:.3}, n={n})");
                }
            }
        }
        Ok((worst <= 1e-6, format!("max relative error {worst:e} ({at})")))
    })
}

pub fn triple_sums() -> Result<CriterionResult> {
    timed(4, "Triple absolute sums", || {
        let mut worst: f64 = 0.0;
        for (lambda, mu, horizon, n) in [(1.0, 3.0, 1.0, 4), (1.0, 2.0, 0.4, 16), (2.0, 5.0, 2.0, 64)] {
            let f = build_family(FamilyVariant::MM1 { lambda, mu, horizon }, n)?;
            let exact = triple_abs_sum(&f, Method::Exact)?;
            let closed = n as f64 / (horizon * (lambda + mu)).sqrt();
            worst = worst.max((exact - closed).abs() / closed);
        }
        let mut ratios = Vec::new();
        for n in [8, 16, 32, 64] {
            let f = build_family(FamilyVariant::MMInfty { lambda: 1.0, mu: 1.0, horizon: 1.0 }, n)?;
            ratios.push(triple_abs_sum(&f, Method::ClosedForm)? / n as f64);
        }
        let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((
            worst <= 1e-12 && spread <= 1.5,
            format!("MM1 relative error {worst:e}; MM∞ tripleSum/n = {ratios:.4?}, max/min {spread:.4}"),
        ))
    })
}

/// `E‖L - π_n L‖_∞` for the unscaled M/M/1 count, per `n`.
pub fn interpolation_gap_estimates(ns: &[usize], replications: usize) -> Result<Vec<(usize, McEstimate)>> {
    let mut out = Vec::new();
    for &n in ns {
        let p = QueueParams::new(1.0, 2.0, n, 0.4, 1.0)?;
        let gaps: Vec<f64> = streams(&format!("gap n={n}"))
            .replicate(replications, |_, rng| interpolation_gap(&simulate_mm1(&p, rng)?.count, n))
            .into_iter()
            .collect::<Result<_>>()?;
        out.push((n, McEstimate::from(&Moments::from_slice(&gaps))));
    }
    Ok(out)
}

pub fn interpolation_gap_check() -> Result<(CriterionResult, Vec<(usize, McEstimate)>)> {
    let mut data = Vec::new();
    let r = timed(5, "Interpolation-gap bound", || {
        data = interpolation_gap_estimates(&[100, 1000, 10_000], 1000)?;
        let mut ok = true;
        let mut detail = Vec::new();
        for (n, e) in &data {
            let bound = interpolation_gap_bound(&JumpBoundParams {
                jump: 1,
                alpha: 2.0,
                n: *n,
                horizon: 0.4,
            })?;
            ok &= e.mean + 3.0 * e.se <= bound;
            detail.push(format!("n={n}: {:.3}+3·{:.3} vs {bound:.3}", e.mean, e.se));
        }
        Ok((ok, detail.join("; ")))
    })?;
    Ok((r, data))
}

pub fn max_poisson() -> Result<CriterionResult> {
    timed(6, "Max-of-Poisson bound", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for n in [1000, 5000] {
            let e = max_poisson_mc(n, 1.0, 20_000, &streams(&format!("maxpoisson n={n}")));
            let b = max_poisson_bound(n, 1.0)?.w_form;
            ok &= e.mean + 3.0 * e.se <= b;
            detail.push(format!("n={n}: {:.4}+3·{:.4} vs {b:.4}", e.mean, e.se));
        }
        Ok((ok, detail.join("; ")))
    })
}

pub fn campbell_mecke() -> Result<CriterionResult> {
    timed(7, "Campbell–Mecke identity", || {
        let m = 100_000;
        let mm1 = ControlMeasure::mm1(1.0, 2.0, 5, 1.0)?;
        let line = ControlMeasure::line(4.0, 1.0)?;
        let strip = Kernel::SignedStrip {
            start: 0.3,
            end: 0.9,
            scale: 1.0,
        };
        let v = Kernel::TimeIndicator {
            start: 0.0,
            end: 0.6,
            scale: 1.0,
        };
        let indicator = Kernel::TimeIndicator {
            start: 0.2,
            end: 0.7,
            scale: 1.0,
        };
        let checks = [
            ("F=1", campbell_mecke_check(&ConstantFunctional(1.0), &strip, &mm1, m, &streams("cm1"))?),
            (
                "F=δv",
                campbell_mecke_check(&DivergenceFunctional::new(v, &mm1)?, &strip, &mm1, m, &streams("cm2"))?,
            ),
            ("F=min(N,5)", campbell_mecke_check(&CappedCount(5), &indicator, &line, m, &streams("cm3"))?),
        ];
        let mut ok = true;
        let mut detail = Vec::new();
        for (name, c) in checks {
            ok &= c.gap() <= 3.0 * c.combined_se();
            detail.push(format!("{name}: |{:.4} - {:.4}| vs 3·{:.4}", c.lhs.mean, c.rhs.mean, c.combined_se()));
        }
        Ok((ok, detail.join("; ")))
    })
}

pub fn divergence_isometry() -> Result<CriterionResult> {
    timed(8, "Divergence isometry", || {
        let m = 100_000;
        let cases = [
            (
                "M/M/1 marks",
                ControlMeasure::mm1(1.0, 2.0, 5, 1.0)?,
                Kernel::SignedStrip {
                    start: 0.2,
                    end: 0.7,
                    scale: 0.8,
                },
            ),
            (
                "service marks",
                ControlMeasure::service(1.0, 2.0, 5, 1.0)?,
                Kernel::Combination(vec![
                    (1.0, Kernel::Trapeze { at: 0.5 }),
                    (-1.0, Kernel::Trapeze { at: 0.25 }),
                    (2.0, Kernel::TrapezeStrip { start: 0.25, end: 0.5 }),
                ]),
            ),
        ];
        let mut ok = true;
        let mut detail = Vec::new();
        for (name, measure, u) in cases {
            let mean_u = measure.integral(&u)?;
            let target = measure.inner_product(&u, &u)?;
            let draws = streams(name).replicate(m, |_, rng| {
                let config = sample_marked_ppp(&measure, rng);
                crate::ppp::divergence_with_mean(&u, &config, mean_u)
            });
            let mo = Moments::from_slice(&draws);
            let mean_ok = mo.mean.abs() <= 3.0 * mo.se_mean();
            let var_ok = (mo.variance() - target).abs() <= 3.0 * mo.se_variance();
            ok &= mean_ok && var_ok;
            detail.push(format!(
                "{name}: mean {:.4}±{:.4}, variance {:.4}±{:.4} vs {target:.4}",
                mo.mean,
                mo.se_mean(),
                mo.variance(),
                mo.se_variance()
            ));
        }
        Ok((ok, detail.join("; ")))
    })
}

pub fn theta_round_trip() -> Result<CriterionResult> {
    timed(9, "Θ round trip", || {
        let mut rng = streams("theta").stream(0);
        let mut inverse: f64 = 0.0;
        for _ in 0..100 {
            let k = rng.random_range(1..20usize);
            let mut times: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.99)).collect();
            times.sort_by(f64::total_cmp);
            let values: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
            let f = Path::step(rng.normal(), &times, &values, 2.0)?;
            let tau = rng.random_range(0.1..3.0);
            let img = theta_forward(&f, tau)?;
            let back = theta_inverse(img.initial, &img.residual, tau)?;
            inverse = inverse.max(sup_distance(&f, &back)?);
        }
        let p = QueueParams::new(1.0, 2.0, 50, 1.0, 0.0)?;
        let errors: Vec<f64> = streams("theta bundles")
            .replicate(100, |_, rng| -> Result<f64> {
                let b = simulate_mminfty_trapeze(&p, rng)?;
                let y = b.y.as_ref().ok_or_else(|| Error::Precondition("missing Y".into()))?;
                sup_distance(y, &theta_forward(&b.z, p.mu)?.residual)
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let forward = errors.iter().copied().fold(0.0, f64::max);
        Ok((
            inverse < 1e-10 && forward <= 1e-12,
            format!("round trip {inverse:e}; Y vs Θ(Z).residual {forward:e}"),
        ))
    })
}

pub fn simulator_duality() -> Result<CriterionResult> {
    timed(10, "Simulator duality", || {
        let p = QueueParams::new(1.0, 1.0, 100, 1.0, 0.0)?;
        let features = |b: &crate::queues::TrajectoryBundle| -> Result<[f64; 5]> {
            let c = &b.count;
            let max = c.pieces().iter().map(|q| q.poly[0]).fold(0.0, f64::max);
            Ok([c.eval(0.5), c.eval(1.0 - 1e-12), c.integral()?, max, b.up_jumps as f64])
        };
        let a: Vec<[f64; 5]> = streams("trapeze")
            .replicate(10_000, |_, rng| simulate_mminfty_trapeze(&p, rng).and_then(|b| features(&b)))
            .into_iter()
            .collect::<Result<_>>()?;
        let b: Vec<[f64; 5]> = streams("events")
            .replicate(10_000, |_, rng| simulate_mminfty_events(&p, rng).and_then(|b| features(&b)))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut ok = true;
        let mut ps = Vec::new();
        for k in 0..5 {
            let xa: Vec<f64> = a.iter().map(|r| r[k]).collect();
            let xb: Vec<f64> = b.iter().map(|r| r[k]).collect();
            let t = ks_two_sample(&xa, &xb)?;
            ok &= t.p_value > 0.001;
            ps.push(t.p_value);
        }
        Ok((ok, format!("KS p-values {ps:.4?}")))
    })
}

pub fn chebyshev() -> Result<CriterionResult> {
    timed(11, "Chebyshev stopping bound", || {
        let mut ok = true;
        let mut detail = Vec::new();
        for n in [100, 1000] {
            let bound = chebyshev_tau_bound(1.0, n, 1.0)?;
            let prop = chebyshev_tau_probability(1.0, n, 1.0, 100_000, &streams(&format!("chebyshev n={n}")))?;
            ok &= prop.upper <= bound;
            detail.push(format!("n={n}: {:.2e} (upper {:.2e}) vs {bound:.2e}", prop.estimate, prop.upper));
        }
        Ok((ok, detail.join("; ")))
    })
}

pub fn brownian_rate() -> Result<(CriterionResult, Vec<(usize, McEstimate)>)> {
    let mut data = Vec::new();
    let r = timed(12, "Brownian interpolation rate", || {
        let order = NormOrder::new(0.1, 2.0)?;
        for n in [16, 64, 256] {
            data.push((n, brownian_interpolation_gap(order, n, 64 * n, 200, &streams(&format!("bm n={n}")))?));
        }
        let points: Vec<(usize, f64)> = data.iter().map(|(n, e)| (*n, e.mean)).collect();
        let fit = rate_fit(&points, RateShape::PowerLaw)?;
        Ok((
            (-0.6..=-0.3).contains(&fit.exponent),
            format!(
                "slope {:.4} (estimates {:?})",
                fit.exponent,
                data.iter().map(|(_, e)| format!("{:.4}", e.mean)).collect::<Vec<_>>()
            ),
        ))
    })?;
    Ok((r, data))
}

/// The configuration of the end-to-end check.
pub fn end_to_end_config() -> ExperimentConfig {
    ExperimentConfig {
        model: Model::MM1,
        lambda: 1.0,
        mu: 2.0,
        x0: 1.0,
        horizon: 0.4,
        n_grid: vec![256],
        replications: 10_000,
        panel: "standard".into(),
        eta: 0.1,
        p: 2.0,
        seed: SEED,
        output: None,
        theorem_regime: true,
        brownian_replications: Some(50),
    }
}

/// Regularity terms at `n`: the jump-path gap fitted on `c log n / log log n`
/// and rescaled to `Z`, plus the Brownian gap fitted as a power law.
pub fn fitted_regularity(n: usize, gaps: &[(usize, McEstimate)], brownian: &[(usize, McEstimate)]) -> Result<f64> {
    let shape = |n: usize| (n as f64).ln() / (n as f64).ln().ln();
    let c = gaps
        .iter()
        .map(|(m, e)| (e.mean + 3.0 * e.se) / shape(*m))
        .fold(0.0, f64::max);
    let jump = c * shape(n) / (n as f64 * 3.0).sqrt();
    let points: Vec<(usize, f64)> = brownian.iter().map(|(m, e)| (*m, e.mean)).collect();
    let fit = rate_fit(&points, RateShape::PowerLaw)?;
    Ok(jump + fit.c * (n as f64).powf(fit.exponent))
}

pub fn end_to_end(gaps: &[(usize, McEstimate)], brownian: &[(usize, McEstimate)]) -> Result<CriterionResult> {
    timed(13, "End-to-end directional check", || {
        let config = end_to_end_config();
        let first = run_experiment(&config)?;
        let second = run_experiment(&config)?;
        let identical = first.to_json()? == second.to_json()? && first.to_csv()? == second.to_csv()?;
        let row = &first.rows[0];
        let regularity = fitted_regularity(row.n, gaps, brownian)?;
        let lhs = row.term2.distance + 3.0 * row.term2.se;
        let rhs = row.stein_bound + regularity;
        Ok((
            identical && lhs <= rhs,
            format!(
                "d {:.4} + 3·{:.4} = {lhs:.4} vs Stein {:.4} + regularity {regularity:.4}; reports identical: {identical}; curve {:.4}",
                row.term2.distance,
                row.term2.se,
                row.stein_bound,
                theorem_curve(row.n)
            ),
        ))
    })
}

/// Criteria grouped by verification suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gram,
    AppendixB,
    Bounds,
    Theta,
    Ppp,
}

impl Suite {
    pub fn run(self) -> Result<Vec<CriterionResult>> {
        Ok(match self {
            Suite::Gram => vec![mm1_gram_identity()?, mminfty_orthogonality()?, triple_sums()?],
            Suite::AppendixB => vec![appendix_b()?],
            Suite::Bounds => vec![
                interpolation_gap_check()?.0,
                max_poisson()?,
                chebyshev()?,
                brownian_rate()?.0,
            ],
            Suite::Theta => vec![theta_round_trip()?, simulator_duality()?],
            Suite::Ppp => vec![campbell_mecke()?, divergence_isometry()?],
        })
    }
}

/// Stein bound for the default M/M/1 check, for reporting.
pub fn mm1_stein_bound(n: usize, eta: f64) -> Result<f64> {
    let f = build_family(FamilyVariant::MM1 { lambda: 1.0, mu: 2.0, horizon: 0.4 }, n)?;
    Ok(stein_bound(&f, eta)?.bound)
}
