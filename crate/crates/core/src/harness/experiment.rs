use std::path::{Path as FsPath, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::panel::{panel_distance_from_values, PanelDistance, TestFunctionalPanel};
use crate::bounds::brownian_interpolation_gap;
use crate::error::{Error, Result};
use crate::paths::{interpolate_affine, sup_distance, NormOrder, Path};
use crate::ppp::McEstimate;
use crate::queues::{simulate_mm1, simulate_mminfty_trapeze, Model, QueueParams};
use crate::rng::{RandomStream, StreamFactory};
use crate::stats::{linear_fit, Moments};
use crate::stein::{build_family, stein_bound, FamilyVariant};

fn default_panel() -> String {
    "standard".into()
}

fn default_true() -> bool {
    true
}

fn default_eta() -> f64 {
    0.1
}

fn default_p() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub x0: f64,
    pub horizon: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_panel")]
    pub panel: String,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Require `λ < μ` and `T <= x₀/(μ - λ)` for the M/M/1 queue.
    #[serde(default = "default_true")]
    pub theorem_regime: bool,
    /// Replications for the Brownian interpolation term (capped by `replications`).
    #[serde(default)]
    pub brownian_replications: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid.contains(&0) {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.replications < 2 {
            return Err(Error::Config("need at least two replications".into()));
        }
        NormOrder::new(self.eta, self.p)?;
        if !(self.eta < 0.5) {
            return Err(Error::Config(format!("η must lie in (0, 1/2), got {}", self.eta)));
        }
        TestFunctionalPanel::by_name(&self.panel)?;
        for &n in &self.n_grid {
            let p = QueueParams::new(self.lambda, self.mu, n, self.horizon, self.x0)?;
            if self.model == Model::MM1 && self.theorem_regime {
                p.check_mm1_regime()?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    /// `E‖Z_n - π_n Z_n‖_∞`.
    pub term1: McEstimate,
    /// Panel distance between the interpolated process and its Gaussian comparator.
    pub term2: PanelDistance,
    /// `E‖π_n B - B‖_{η,p}` for a standard Brownian motion.
    pub term3: Option<McEstimate>,
    pub stein_bound: f64,
    pub total: f64,
    /// `d̂ + 3 SE <= Stein bound + term1 + term3`.
    pub directional: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateShape {
    /// `d = c n^e`.
    PowerLaw,
    /// `d = c n^e log n / log log n`.
    Theorem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub shape: RateShape,
    pub exponent: f64,
    pub c: f64,
    pub residuals: Vec<f64>,
    pub non_decaying: bool,
}

/// Least squares of `log d` on `log n`, with the offset `log(log n / log log n)`
/// held fixed for the theorem shape.
pub fn rate_fit(points: &[(usize, f64)], shape: RateShape) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!("need at least three points, got {}", points.len())));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, d) in points {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Fit(format!("estimate at n = {n} is not positive: {d}")));
        }
        let ln = (n as f64).ln();
        let offset = match shape {
            RateShape::PowerLaw => 0.0,
            RateShape::Theorem => {
                if ln.ln() <= 0.0 {
                    return Err(Error::Fit(format!("log log n must be positive, got n = {n}")));
                }
                (ln / ln.ln()).ln()
            }
        };
        xs.push(ln);
        ys.push(d.ln() - offset);
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(RateFit {
        shape,
        exponent: fit.slope,
        c: fit.intercept.exp(),
        residuals: fit.residuals,
        non_decaying: fit.slope > -0.05,
    })
}

/// `log n / (log log n · √n)`.
pub fn theorem_curve(n: usize) -> f64 {
    let ln = (n as f64).ln();
    ln / (ln.ln() * (n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub route: String,
    pub rows: Vec<ReportRow>,
    /// Smallest `c` with `total <= c log n / (log log n √n)` on the grid.
    pub envelope_constant: f64,
    pub fit: Option<RateFit>,
    pub verdicts: Vec<Verdict>,
    pub hash: String,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "term", "estimate", "se"])?;
        for r in &self.rows {
            let mut rec = |term: &str, est: f64, se: f64| w.write_record([r.n.to_string(), term.into(), est.to_string(), se.to_string()]);
            rec("term1", r.term1.mean, r.term1.se)?;
            rec("term2", r.term2.distance, r.term2.se)?;
            if let Some(t) = r.term3 {
                rec("term3", t.mean, t.se)?;
            }
            rec("stein_bound", r.stein_bound, 0.0)?;
            rec("total", r.total, 0.0)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn seal(&mut self) -> Result<()> {
        self.hash.clear();
        let body = serde_json::to_vec(self)?;
        self.hash = hex::encode(Sha256::digest(&body));
        Ok(())
    }

    /// Writes `<output>` (JSON) and `<output>.csv`.
    pub fn write(&self, output: &FsPath) -> Result<()> {
        std::fs::write(output, self.to_json()?)?;
        let mut csv_path = output.as_os_str().to_owned();
        csv_path.push(".csv");
        std::fs::write(PathBuf::from(csv_path), self.to_csv()?)?;
        Ok(())
    }
}

/// Reads `(n, estimate)` pairs from a two-column CSV, or the `total` rows of a report CSV.
pub fn read_points(path: &FsPath) -> Result<Vec<(usize, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (n_col, est_col, term_col) = match (col("n"), col("estimate"), col("term")) {
        (Some(n), Some(e), t) => (n, e, t),
        _ => (0, 1, None),
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if let Some(t) = term_col {
            if rec.get(t).map(str::trim) != Some("total") {
                continue;
            }
        }
        let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let n = field(n_col).parse::<usize>().map_err(|e| Error::Fit(format!("bad n {:?}: {e}", field(n_col))))?;
        let d = field(est_col).parse::<f64>().map_err(|e| Error::Fit(format!("bad estimate {:?}: {e}", field(est_col))))?;
        out.push((n, d));
    }
    Ok(out)
}

/// `π_n` of a Gaussian path with independent increments of the given variances.
fn gaussian_interpolation(variances: &[f64], horizon: f64, rng: &mut RandomStream) -> Result<Path> {
    let mut values = Vec::with_capacity(variances.len() + 1);
    let mut level = 0.0;
    values.push(level);
    for v in variances {
        level += v.sqrt() * rng.normal();
        values.push(level);
    }
    Path::grid(&values, horizon)
}

fn wrap(n: usize, replication: usize, seed: u64) -> impl Fn(Error) -> Error {
    move |e| Error::Replication {
        n,
        replication,
        seed,
        source: Box::new(e),
    }
}

fn run_row(config: &ExperimentConfig, n: usize, panel: &TestFunctionalPanel) -> Result<ReportRow> {
    let root = StreamFactory::new(config.seed).child(&format!("n={n}"));
    let (params, variant) = match config.model {
        Model::MM1 => (
            QueueParams::new(config.lambda, config.mu, n, config.horizon, config.x0)?,
            FamilyVariant::MM1 {
                lambda: config.lambda,
                mu: config.mu,
                horizon: config.horizon,
            },
        ),
        Model::MMInfty => {
            // on [0, T] with rates (λ, μ) the queue is the unit-horizon queue with rates (λT, μT)
            let (l, m) = (config.lambda * config.horizon, config.mu * config.horizon);
            (
                QueueParams::new(l, m, n, 1.0, 0.0)?,
                FamilyVariant::MMInfty {
                    lambda: l,
                    mu: m,
                    horizon: 1.0,
                },
            )
        }
    };
    let family = build_family(variant, n)?;
    let report = stein_bound(&family, config.eta)?;
    let horizon = params.horizon;
    let seed = config.seed;

    let queue = root.child("queue");
    let sampled: Vec<Result<(Vec<f64>, f64)>> = queue.replicate(config.replications, |r, rng| {
        let mut go = || -> Result<(Vec<f64>, f64)> {
            let (route, gap_of) = match config.model {
                Model::MM1 => {
                    let b = simulate_mm1(&params, rng)?;
                    (b.z.clone(), b.z)
                }
                Model::MMInfty => {
                    let b = simulate_mminfty_trapeze(&params, rng)?;
                    (b.y.expect("infinite-server bundles carry Y"), b.z)
                }
            };
            let gap = sup_distance(&gap_of, &interpolate_affine(&gap_of, n, horizon)?)?;
            Ok((panel.eval(&interpolate_affine(&route, n, horizon)?), gap))
        };
        go().map_err(wrap(n, r, seed))
    });
    let mut a = Vec::with_capacity(config.replications);
    let mut gaps = Moments::default();
    for s in sampled {
        let (values, gap) = s?;
        a.push(values);
        gaps.push(gap);
    }

    let gauss = root.child("gaussian");
    let b: Vec<Vec<f64>> = gauss
        .replicate(config.replications, |r, rng| {
            gaussian_interpolation(&report.xi_sq, horizon, rng)
                .map(|p| panel.eval(&p))
                .map_err(wrap(n, r, seed))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let term2 = panel_distance_from_values(&a, &b)?;

    let term3 = if config.p == 2.0 {
        let m = config.brownian_replications.unwrap_or(200).min(config.replications);
        Some(brownian_interpolation_gap(
            NormOrder::new(config.eta, config.p)?,
            n,
            16 * n,
            m,
            &root.child("brownian"),
        )?)
    } else {
        warn!("term 3 is only evaluated for p = 2");
        None
    };
    let term1 = McEstimate::from(&gaps);
    let regularity = term1.mean + term3.map_or(0.0, |t| t.mean);
    Ok(ReportRow {
        n,
        term1,
        stein_bound: report.bound,
        total: term1.mean + term2.distance + term3.map_or(0.0, |t| t.mean),
        directional: term2.distance + 3.0 * term2.se <= report.bound + regularity,
        term2,
        term3,
    })
}

/// Runs the three-term decomposition for each `n` of the grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let panel = TestFunctionalPanel::by_name(&config.panel)?;
    let route = match config.model {
        Model::MM1 => "Z-route: π_n Z_n against π_n B".to_string(),
        Model::MMInfty => {
            let mut s = "Y-route through Θ: π_n Y_n against B_ξ with ξ_k² = γ((k+1)/n) - γ(k/n)".to_string();
            if config.horizon != 1.0 {
                s.push_str(&format!("; time rescaled to [0, 1] with rates (λT, μT), T = {}", config.horizon));
            }
            if config.x0 != 0.0 {
                warn!("the infinite-server queue starts empty; x₀ = {} ignored", config.x0);
            }
            s
        }
    };
    info!("{route}");
    let mut rows = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        info!("n = {n}");
        rows.push(run_row(config, n, &panel)?);
    }
    let envelope_constant = rows
        .iter()
        .map(|r| if r.n >= 3 { r.total / theorem_curve(r.n) } else { f64::NAN })
        .fold(0.0, f64::max);
    let fit = if rows.len() >= 3 {
        let points: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.total)).collect();
        rate_fit(&points, RateShape::Theorem).ok()
    } else {
        None
    };
    let mut verdicts: Vec<Verdict> = rows
        .iter()
        .map(|r| Verdict {
            name: format!("directional n={}", r.n),
            passed: r.directional,
            detail: format!(
                "d + 3se = {:.6} vs bound {:.6} + regularity {:.6}",
                r.term2.distance + 3.0 * r.term2.se,
                r.stein_bound,
                r.term1.mean + r.term3.map_or(0.0, |t| t.mean)
            ),
        })
        .collect();
    if let Some(f) = &fit {
        // diagnostic only
        verdicts.push(Verdict {
            name: "rate fit (diagnostic)".into(),
            passed: true,
            detail: format!(
                "exponent {:.4}, c {:.4}{}",
                f.exponent,
                f.c,
                if f.non_decaying { ", non-decaying" } else { "" }
            ),
        });
    }
    let mut report = RateReport {
        config: config.clone(),
        route,
        rows,
        envelope_constant,
        fit,
        verdicts,
        hash: String::new(),
    };
    report.seal()?;
    Ok(report)
}
