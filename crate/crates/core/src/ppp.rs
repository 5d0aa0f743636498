//! Marked Poisson point processes, deterministic kernels and the divergence.
//!
//! Three control measures are supported on `[0, T]`:
//!
//! * a homogeneous line `rate · ds` (marks are ignored and set to 0),
//! * the M/M/1 measure `n(λ+μ) ds ⊗ (λ/(λ+μ) ε₊₁ + μ/(λ+μ) ε₋₁)`,
//! * the service measure `λn dx ⊗ μ e^{-μz} dz` of the infinite-server queue.
//!
//! Kernels declare their time breakpoints. Integrals against a measure are
//! computed cell by cell with Gauss–Legendre rules between breakpoints, which is
//! exact to rounding for the polynomial-times-exponential integrands that
//! appear; the tail of the service measure is integrated in closed form.

use std::fmt;
use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad::GaussLegendre;
use crate::rng::{RandomStream, StreamFactory};
use crate::stats::Moments;

const RULE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub time: f64,
    pub mark: f64,
}

/// A finite marked configuration on `[0, T]`, sorted by time.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfiguration {
    points: Vec<MarkedPoint>,
    horizon: f64,
    ties: usize,
}

impl PointConfiguration {
    /// Sorts the points by time (stable, so ties keep insertion order).
    pub fn new(mut points: Vec<MarkedPoint>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(param(format!("horizon must be positive, got {horizon}")));
        }
        if let Some(p) = points.iter().find(|p| !(p.time >= 0.0 && p.time <= horizon)) {
            return Err(param(format!("atom time {} outside [0, {horizon}]", p.time)));
        }
        points.sort_by(|a, b| a.time.total_cmp(&b.time));
        let ties = points.windows(2).filter(|w| w[0].time == w[1].time).count();
        if ties > 0 {
            debug!("configuration has {ties} tied atom times");
        }
        Ok(Self { points, horizon, ties })
    }

    pub fn empty(horizon: f64) -> Self {
        Self {
            points: Vec::new(),
            horizon,
            ties: 0,
        }
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of pairs of atoms sharing a time.
    pub fn ties(&self) -> usize {
        self.ties
    }

    /// The configuration with one more atom.
    pub fn with_point(&self, p: MarkedPoint) -> Self {
        let k = self.points.partition_point(|q| q.time <= p.time);
        let mut points = self.points.clone();
        points.insert(k, p);
        let tie = usize::from(k > 0 && points[k - 1].time == p.time);
        Self {
            points,
            horizon: self.horizon,
            ties: self.ties + tie,
        }
    }

    pub fn count_mark(&self, mark: f64) -> usize {
        self.points.iter().filter(|p| p.mark == mark).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MeasureKind {
    HomogeneousLine { rate: f64 },
    MM1Marks { lambda: f64, mu: f64, n: usize },
    ServiceMarks { lambda: f64, mu: f64, n: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlMeasure {
    pub kind: MeasureKind,
    pub horizon: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(param(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

impl ControlMeasure {
    pub fn new(kind: MeasureKind, horizon: f64) -> Result<Self> {
        positive("horizon", horizon)?;
        match kind {
            MeasureKind::HomogeneousLine { rate } => positive("rate", rate)?,
            MeasureKind::MM1Marks { lambda, mu, n } | MeasureKind::ServiceMarks { lambda, mu, n } => {
                positive("λ", lambda)?;
                positive("μ", mu)?;
                if n == 0 {
                    return Err(param("n must be at least 1"));
                }
            }
        }
        Ok(Self { kind, horizon })
    }

    pub fn line(rate: f64, horizon: f64) -> Result<Self> {
        Self::new(MeasureKind::HomogeneousLine { rate }, horizon)
    }

    pub fn mm1(lambda: f64, mu: f64, n: usize, horizon: f64) -> Result<Self> {
        Self::new(MeasureKind::MM1Marks { lambda, mu, n }, horizon)
    }

    pub fn service(lambda: f64, mu: f64, n: usize, horizon: f64) -> Result<Self> {
        Self::new(MeasureKind::ServiceMarks { lambda, mu, n }, horizon)
    }

    /// Total mass of `[0, T] × marks`.
    pub fn total_mass(&self) -> f64 {
        let t = self.horizon;
        match self.kind {
            MeasureKind::HomogeneousLine { rate } => rate * t,
            MeasureKind::MM1Marks { lambda, mu, n } => n as f64 * (lambda + mu) * t,
            MeasureKind::ServiceMarks { lambda, n, .. } => n as f64 * lambda * t,
        }
    }

    /// `∫ f(time, mark) dν` for an `f` that is smooth between consecutive
    /// `breaks` in time and, for the service measure, in exit time `x + z`,
    /// and independent of the exit time beyond the last break.
    pub fn integrate(&self, f: &dyn Fn(f64, f64) -> f64, breaks: &[f64]) -> f64 {
        let t = self.horizon;
        let gl = GaussLegendre::cached(RULE);
        let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| b.is_finite() && *b > 0.0).collect();
        cuts.push(0.0);
        cuts.push(t);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        match self.kind {
            MeasureKind::HomogeneousLine { rate } => {
                rate * cells_upto(&cuts, t).map(|(a, b)| gl.integrate(a, b, |s| f(s, 0.0))).sum::<f64>()
            }
            MeasureKind::MM1Marks { lambda, mu, n } => {
                let n = n as f64;
                cells_upto(&cuts, t)
                    .map(|(a, b)| gl.integrate(a, b, |s| n * lambda * f(s, 1.0) + n * mu * f(s, -1.0)))
                    .sum()
            }
            MeasureKind::ServiceMarks { lambda, mu, n } => {
                // refine so that every cell has μ·width <= 1
                let mut fine = Vec::with_capacity(cuts.len());
                for w in cuts.windows(2) {
                    let pieces = ((w[1] - w[0]) * mu).ceil().max(1.0) as usize;
                    for k in 0..pieces {
                        fine.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
                    }
                }
                fine.push(*cuts.last().expect("non-empty"));
                service_integral(f, &fine, t, lambda, mu, n as f64, gl)
            }
        }
    }

    /// `∫ u dν`.
    pub fn integral(&self, u: &Kernel) -> Result<f64> {
        let breaks = u.breakpoints().ok_or(Error::UnsupportedKernel)?;
        Ok(self.integrate(&|s, m| u.eval(s, m), &breaks))
    }

    /// `∫ u v dν`.
    pub fn inner_product(&self, u: &Kernel, v: &Kernel) -> Result<f64> {
        let mut breaks = u.breakpoints().ok_or(Error::UnsupportedKernel)?;
        breaks.extend(v.breakpoints().ok_or(Error::UnsupportedKernel)?);
        Ok(self.integrate(&|s, m| u.eval(s, m) * v.eval(s, m), &breaks))
    }

    pub fn sample(&self, rng: &mut RandomStream) -> PointConfiguration {
        sample_marked_ppp(self, rng)
    }
}

fn cells_upto(cuts: &[f64], t: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    cuts.windows(2).filter(move |w| w[1] <= t).map(|w| (w[0], w[1]))
}

/// Integral against `λn μ e^{-μ(e-x)} dx de` over `0 <= x <= T`, `e >= x`,
/// with `f` written in `(x, z = e - x)`.
fn service_integral(
    f: &dyn Fn(f64, f64) -> f64,
    cuts: &[f64],
    t: f64,
    lambda: f64,
    mu: f64,
    n: f64,
    gl: &GaussLegendre,
) -> f64 {
    let last = *cuts.last().expect("non-empty");
    let dens = |x: f64, e: f64| mu * (-mu * (e - x)).exp();
    let mut total = 0.0;
    for (xi, xw) in cuts.windows(2).enumerate() {
        let (a, b) = (xw[0], xw[1]);
        if b > t {
            break;
        }
        // triangle a <= x <= e <= b
        total += gl.integrate(a, b, |x| gl.integrate(x, b, |e| f(x, e - x) * dens(x, e)));
        for ew in cuts[xi + 1..].windows(2) {
            let (c, d) = (ew[0], ew[1]);
            total += gl.integrate(a, b, |x| gl.integrate(c, d, |e| f(x, e - x) * dens(x, e)));
        }
        // exit times beyond the last break: f is constant in e there
        total += gl.integrate(a, b, |x| f(x, last + 1.0 - x) * (-mu * (last - x)).exp());
    }
    lambda * n * total
}

/// A deterministic integrand on `[0, T] × marks`.
#[derive(Clone)]
pub enum Kernel {
    /// `scale · 1[start <= time < end]`.
    TimeIndicator { start: f64, end: f64, scale: f64 },
    /// `scale · mark · 1[start <= time < end]`.
    SignedStrip { start: f64, end: f64, scale: f64 },
    /// `1[x <= at <= x + z]`: the atom `(x, z)` is in service at time `at`.
    Trapeze { at: f64 },
    /// `|[start, end] ∩ [x, x + z]|`: time spent in service during `[start, end]`.
    TrapezeStrip { start: f64, end: f64 },
    /// `Σ c_k u_k`.
    Combination(Vec<(f64, Kernel)>),
    /// A user kernel; without breakpoints it cannot be integrated exactly.
    Custom {
        eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        breakpoints: Option<Vec<f64>>,
    },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::TimeIndicator { start, end, scale } => write!(f, "TimeIndicator({start}, {end}, {scale})"),
            Kernel::SignedStrip { start, end, scale } => write!(f, "SignedStrip({start}, {end}, {scale})"),
            Kernel::Trapeze { at } => write!(f, "Trapeze({at})"),
            Kernel::TrapezeStrip { start, end } => write!(f, "TrapezeStrip({start}, {end})"),
            Kernel::Combination(terms) => f.debug_list().entries(terms).finish(),
            Kernel::Custom { breakpoints, .. } => write!(f, "Custom(breakpoints = {breakpoints:?})"),
        }
    }
}

impl Kernel {
    pub fn eval(&self, time: f64, mark: f64) -> f64 {
        match self {
            Kernel::TimeIndicator { start, end, scale } => {
                if *start <= time && time < *end {
                    *scale
                } else {
                    0.0
                }
            }
            Kernel::SignedStrip { start, end, scale } => {
                if *start <= time && time < *end {
                    scale * mark
                } else {
                    0.0
                }
            }
            Kernel::Trapeze { at } => f64::from(u8::from(time <= *at && *at <= time + mark)),
            Kernel::TrapezeStrip { start, end } => (end.min(time + mark) - start.max(time)).max(0.0),
            Kernel::Combination(terms) => terms.iter().map(|(c, k)| c * k.eval(time, mark)).sum(),
            Kernel::Custom { eval, .. } => eval(time, mark),
        }
    }

    /// Time breakpoints, or `None` when the kernel declares no structure.
    pub fn breakpoints(&self) -> Option<Vec<f64>> {
        match self {
            Kernel::TimeIndicator { start, end, .. }
            | Kernel::SignedStrip { start, end, .. }
            | Kernel::TrapezeStrip { start, end } => Some(vec![*start, *end]),
            Kernel::Trapeze { at } => Some(vec![*at]),
            Kernel::Combination(terms) => {
                let mut out = Vec::new();
                for (_, k) in terms {
                    out.extend(k.breakpoints()?);
                }
                Some(out)
            }
            Kernel::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }
}

/// Homogeneous Poisson process of the given rate on `[0, horizon]`.
pub fn sample_poisson_line(rate: f64, horizon: f64, rng: &mut RandomStream) -> Result<PointConfiguration> {
    positive("rate", rate)?;
    positive("horizon", horizon)?;
    let count = rng.poisson(rate * horizon);
    let points = (0..count)
        .map(|_| MarkedPoint {
            time: rng.uniform() * horizon,
            mark: 0.0,
        })
        .collect();
    PointConfiguration::new(points, horizon)
}

/// Poisson process with the given control measure.
pub fn sample_marked_ppp(measure: &ControlMeasure, rng: &mut RandomStream) -> PointConfiguration {
    let t = measure.horizon;
    let count = rng.poisson(measure.total_mass());
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let time = rng.uniform() * t;
        let mark = match measure.kind {
            MeasureKind::HomogeneousLine { .. } => 0.0,
            MeasureKind::MM1Marks { lambda, mu, .. } => {
                if rng.bernoulli(lambda / (lambda + mu)) {
                    1.0
                } else {
                    -1.0
                }
            }
            MeasureKind::ServiceMarks { mu, .. } => rng.exponential(mu),
        };
        points.push(MarkedPoint { time, mark });
    }
    PointConfiguration::new(points, t).expect("times drawn inside the horizon")
}

/// `δ_ν u = Σ_{x ∈ config} u(x) - ∫ u dν` for a deterministic kernel.
pub fn divergence(u: &Kernel, config: &PointConfiguration, measure: &ControlMeasure) -> Result<f64> {
    let mean = measure.integral(u)?;
    Ok(divergence_with_mean(u, config, mean))
}

/// Divergence when `∫ u dν` is already known.
pub fn divergence_with_mean(u: &Kernel, config: &PointConfiguration, mean: f64) -> f64 {
    config.points().iter().map(|p| u.eval(p.time, p.mark)).sum::<f64>() - mean
}

/// A real functional of configurations.
pub trait ConfigurationFunctional: Sync {
    fn eval(&self, config: &PointConfiguration) -> f64;

    /// Time breakpoints of `x ↦ F(config + ε_x) - F(config)`.
    fn breakpoints(&self, _config: &PointConfiguration) -> Vec<f64> {
        Vec::new()
    }
}

/// `F ≡ c`.
pub struct ConstantFunctional(pub f64);

impl ConfigurationFunctional for ConstantFunctional {
    fn eval(&self, _config: &PointConfiguration) -> f64 {
        self.0
    }
}

/// `F = min(#config, cap)`.
pub struct CappedCount(pub usize);

impl ConfigurationFunctional for CappedCount {
    fn eval(&self, config: &PointConfiguration) -> f64 {
        config.len().min(self.0) as f64
    }
}

/// `F = δ_ν v`.
pub struct DivergenceFunctional {
    pub kernel: Kernel,
    mean: f64,
}

impl DivergenceFunctional {
    pub fn new(kernel: Kernel, measure: &ControlMeasure) -> Result<Self> {
        let mean = measure.integral(&kernel)?;
        Ok(Self { kernel, mean })
    }
}

impl ConfigurationFunctional for DivergenceFunctional {
    fn eval(&self, config: &PointConfiguration) -> f64 {
        divergence_with_mean(&self.kernel, config, self.mean)
    }

    fn breakpoints(&self, _config: &PointConfiguration) -> Vec<f64> {
        self.kernel.breakpoints().unwrap_or_default()
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl From<&Moments> for McEstimate {
    fn from(m: &Moments) -> Self {
        Self {
            mean: m.mean,
            se: m.se_mean(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampbellMecke {
    /// Estimate of `E[F δ_ν u]`.
    pub lhs: McEstimate,
    /// Estimate of `E[∫ D_x F u(x) dν(x)]`.
    pub rhs: McEstimate,
}

impl CampbellMecke {
    pub fn combined_se(&self) -> f64 {
        self.lhs.se.hypot(self.rhs.se)
    }

    pub fn gap(&self) -> f64 {
        (self.lhs.mean - self.rhs.mean).abs()
    }
}

const OVERFLOW_GUARD: f64 = 1e12;

/// Monte Carlo estimates of both sides of `E[F δ_ν u] = E[∫ D_x F u dν]`.
pub fn campbell_mecke_check(
    functional: &dyn ConfigurationFunctional,
    u: &Kernel,
    measure: &ControlMeasure,
    replications: usize,
    streams: &StreamFactory,
) -> Result<CampbellMecke> {
    let mean_u = measure.integral(u)?;
    let ub = u.breakpoints().ok_or(Error::UnsupportedKernel)?;
    let draws = streams.replicate(replications, |_, rng| -> Result<(f64, f64)> {
        let config = sample_marked_ppp(measure, rng);
        let f0 = functional.eval(&config);
        if !f0.is_finite() || f0.abs() > OVERFLOW_GUARD {
            return Err(Error::Functional(format!("functional value {f0} exceeds the overflow guard")));
        }
        let lhs = f0 * divergence_with_mean(u, &config, mean_u);
        let mut breaks = ub.clone();
        breaks.extend(functional.breakpoints(&config));
        let dx = |time: f64, mark: f64| {
            let plus = config.with_point(MarkedPoint { time, mark });
            (functional.eval(&plus) - f0) * u.eval(time, mark)
        };
        let rhs = measure.integrate(&dx, &breaks);
        if !rhs.is_finite() {
            return Err(Error::Functional("non-finite difference integral".into()));
        }
        Ok((lhs, rhs))
    });
    let mut l = Moments::default();
    let mut r = Moments::default();
    for d in draws {
        let (a, b) = d?;
        l.push(a);
        r.push(b);
    }
    Ok(CampbellMecke {
        lhs: (&l).into(),
        rhs: (&r).into(),
    })
}
