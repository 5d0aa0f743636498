use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::Path;
use crate::quad::GaussLegendre;
use crate::rng::{RandomStream, StreamFactory};
use crate::stats::Moments;

/// Probability densities on `[0, 1]`, so that `f ↦ ∫ w(t/T) f(t) dt/T` is
/// 1-Lipschitz for the uniform norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weight {
    Uniform,
    Increasing,
    Decreasing,
    Hump,
    LateQuadratic,
    EarlyQuadratic,
}

impl Weight {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Weight::Uniform => 1.0,
            Weight::Increasing => 2.0 * s,
            Weight::Decreasing => 2.0 * (1.0 - s),
            Weight::Hump => 6.0 * s * (1.0 - s),
            Weight::LateQuadratic => 3.0 * s * s,
            Weight::EarlyQuadratic => 3.0 * (1.0 - s) * (1.0 - s),
        }
    }
}

/// Bounded, 1-Lipschitz path functionals (for the uniform norm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestFunctional {
    /// `tanh(∫ w(t/T) f(t) dt / T)`.
    WeightedAverage(Weight),
    /// `tanh(β⁻¹ log(J⁻¹ Σ_j e^{β s f(t_j)}))` over `J` equispaced times in `[0, fraction·T]`.
    SmoothMax { sign: f64, fraction: f64, points: usize, beta: f64 },
    /// `tanh(f(fraction·T))`.
    Evaluation { fraction: f64 },
}

impl TestFunctional {
    pub fn eval(&self, f: &Path) -> f64 {
        let horizon = f.horizon();
        match *self {
            TestFunctional::WeightedAverage(w) => {
                let gl = GaussLegendre::cached(4);
                let mut total = 0.0;
                for (k, piece) in f.pieces().iter().enumerate() {
                    let (a, b) = (piece.start, f.piece_end(k));
                    if b > a {
                        total += gl.integrate(a, b, |t| w.eval(t / horizon) * piece.at(t - a));
                    }
                }
                (total / horizon).tanh()
            }
            TestFunctional::SmoothMax {
                sign,
                fraction,
                points,
                beta,
            } => {
                let end = fraction * horizon;
                let xs: Vec<f64> = (0..points)
                    .map(|j| sign * f.eval(end * j as f64 / (points - 1) as f64))
                    .collect();
                let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = top + xs.iter().map(|x| (beta * (x - top)).exp()).sum::<f64>().ln() / beta;
                (lse - (points as f64).ln() / beta).tanh()
            }
            TestFunctional::Evaluation { fraction } => f.eval(fraction * horizon).tanh(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionalPanel {
    pub members: Vec<TestFunctional>,
}

impl TestFunctionalPanel {
    /// Six weighted averages, three smoothed maxima, three evaluations.
    pub fn standard() -> Self {
        use Weight::*;
        let mut members: Vec<TestFunctional> = [Uniform, Increasing, Decreasing, Hump, LateQuadratic, EarlyQuadratic]
            .into_iter()
            .map(TestFunctional::WeightedAverage)
            .collect();
        for (sign, fraction) in [(1.0, 1.0), (-1.0, 1.0), (1.0, 0.5)] {
            members.push(TestFunctional::SmoothMax {
                sign,
                fraction,
                points: 16,
                beta: 10.0,
            });
        }
        for fraction in [0.25, 0.5, 0.75] {
            members.push(TestFunctional::Evaluation { fraction });
        }
        Self { members }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "standard" => Ok(Self::standard()),
            other => Err(Error::Config(format!("unknown panel {other:?}"))),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn eval(&self, f: &Path) -> Vec<f64> {
        self.members.iter().map(|m| m.eval(f)).collect()
    }
}

/// `max_k |E F_k(A) - E F_k(B)|` over a panel, with the standard error of the
/// difference at the maximising member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanelDistance {
    pub distance: f64,
    pub se: f64,
    pub argmax: usize,
    pub differences: Vec<f64>,
}

/// Distance from panel evaluations, one row per replication on each side.
pub fn panel_distance_from_values(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<PanelDistance> {
    let k = a.first().map(Vec::len).unwrap_or(0);
    if k == 0 || b.is_empty() {
        return Err(Error::Config("empty panel or sample".into()));
    }
    if a.iter().chain(b).any(|row| row.len() != k) {
        return Err(Error::Shape("panel rows differ in length".into()));
    }
    let column = |rows: &[Vec<f64>], j: usize| Moments::from_slice(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
    let mut differences = Vec::with_capacity(k);
    let mut ses = Vec::with_capacity(k);
    for j in 0..k {
        let (ma, mb) = (column(a, j), column(b, j));
        differences.push(ma.mean - mb.mean);
        ses.push((ma.se_mean().powi(2) + mb.se_mean().powi(2)).sqrt());
    }
    let argmax = (0..k)
        .max_by(|&i, &j| differences[i].abs().total_cmp(&differences[j].abs()))
        .unwrap_or(0);
    Ok(PanelDistance {
        distance: differences[argmax].abs(),
        se: ses[argmax],
        argmax,
        differences,
    })
}

/// Panel values of `replications` paths drawn by `sampler`.
pub fn panel_values<S>(sampler: S, panel: &TestFunctionalPanel, replications: usize, streams: &StreamFactory) -> Result<Vec<Vec<f64>>>
where
    S: Fn(usize, &mut RandomStream) -> Result<Path> + Sync + Send,
{
    streams
        .replicate(replications, |r, rng| {
            sampler(r, rng).map(|p| panel.eval(&p)).map_err(|e| Error::Replication {
                n: 0,
                replication: r,
                seed: streams.seed(),
                source: Box::new(e),
            })
        })
        .into_iter()
        .collect()
}

pub fn estimate_panel_distance<A, B>(
    sampler_a: A,
    sampler_b: B,
    panel: &TestFunctionalPanel,
    replications: usize,
    streams_a: &StreamFactory,
    streams_b: &StreamFactory,
) -> Result<PanelDistance>
where
    A: Fn(usize, &mut RandomStream) -> Result<Path> + Sync + Send,
    B: Fn(usize, &mut RandomStream) -> Result<Path> + Sync + Send,
{
    if panel.is_empty() {
        return Err(Error::Config("the panel is empty".into()));
    }
    let a = panel_values(sampler_a, panel, replications, streams_a)?;
    let b = panel_values(sampler_b, panel, replications, streams_b)?;
    panel_distance_from_values(&a, &b)
}
