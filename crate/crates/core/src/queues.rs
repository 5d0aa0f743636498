//! Exact simulation of the M/M/1 and M/M/∞ queues and their rescalings.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::paths::{Path, PathJson, Piece};
use crate::ppp::{sample_marked_ppp, ControlMeasure, PointConfiguration};
use crate::rng::{RandomStream, StreamFactory};
use crate::stats::{wilson, Proportion};

/// Parameters shared by both queues: arrival rate `λ`, service rate `μ`,
/// scaling `n`, horizon `T` and initial fluid level `x₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub lambda: f64,
    pub mu: f64,
    pub n: usize,
    pub horizon: f64,
    pub x0: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, mu: f64, n: usize, horizon: f64, x0: f64) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            n,
            horizon,
            x0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("λ", self.lambda), ("μ", self.mu), ("T", self.horizon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.n == 0 {
            return Err(param("n must be at least 1"));
        }
        if !(self.x0 >= 0.0 && self.x0.is_finite()) {
            return Err(param(format!("x₀ must be nonnegative, got {}", self.x0)));
        }
        Ok(())
    }

    /// `λ < μ` and `T <= x₀/(μ - λ)`: the fluid stays positive on `[0, T]`.
    pub fn check_mm1_regime(&self) -> Result<()> {
        if !(self.lambda < self.mu) {
            return Err(Error::Regime(format!("need λ < μ, got λ = {}, μ = {}", self.lambda, self.mu)));
        }
        let limit = self.x0 / (self.mu - self.lambda);
        if self.horizon > limit {
            return Err(Error::Regime(format!("need T <= x₀/(μ - λ) = {limit}, got T = {}", self.horizon)));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    /// Initial number of customers, `round(n x₀)`.
    pub fn initial_count(&self) -> u64 {
        (self.n as f64 * self.x0).round() as u64
    }
}

/// Scaling of the M/M/1 fluctuation process `Z = c (L̄ - fluid)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `c = √n / √(λ+μ)`, unit variance rate before the queue empties.
    #[default]
    SqrtSum,
    /// `c = √n / (λ+μ)`.
    Sum,
}

impl Normalization {
    pub fn factor(&self, p: &QueueParams) -> f64 {
        let s = p.lambda + p.mu;
        match self {
            Normalization::SqrtSum => (p.n as f64).sqrt() / s.sqrt(),
            Normalization::Sum => (p.n as f64).sqrt() / s,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBundle {
    /// Unscaled number of customers.
    pub count: Path,
    /// `L̄ = count / n`.
    pub scaled: Path,
    pub fluid: Path,
    pub z: Path,
    /// M/M/∞ only: `Y(t) = Z(t) - Z(0) + μ ∫_0^t Z`.
    pub y: Option<Path>,
    /// First time the unscaled count is 0 (M/M/1 only; `+∞` if never on `[0, T]`).
    pub tau_zero: f64,
    pub up_jumps: usize,
    pub down_jumps: usize,
}

impl TrajectoryBundle {
    pub fn jump_count(&self) -> usize {
        self.up_jumps + self.down_jumps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    #[serde(rename = "MM1")]
    MM1,
    #[serde(rename = "MMInfty")]
    MMInfty,
}

/// JSON form of a bundle: the path schema plus metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BundleJson {
    pub model: Model,
    pub params: QueueParams,
    pub seed: u64,
    pub count: PathJson,
    pub fluid: PathJson,
    pub z: PathJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<PathJson>,
    pub tau_zero: Option<f64>,
}

impl TrajectoryBundle {
    pub fn to_json(&self, model: Model, params: QueueParams, seed: u64) -> BundleJson {
        BundleJson {
            model,
            params,
            seed,
            count: self.count.to_json(),
            fluid: self.fluid.to_json(),
            z: self.z.to_json(),
            y: self.y.as_ref().map(Path::to_json),
            tau_zero: self.tau_zero.is_finite().then_some(self.tau_zero),
        }
    }
}

/// `(x₀ + (λ - μ) t)⁺` on `[0, T]`.
pub fn fluid_mm1(p: &QueueParams) -> Result<Path> {
    p.validate()?;
    let slope = p.lambda - p.mu;
    let t = p.horizon;
    if slope < 0.0 {
        let hit = p.x0 / -slope;
        if hit < t {
            if hit == 0.0 {
                return Path::constant(0.0, t);
            }
            return Path::piecewise_linear(&[0.0, hit, t], &[p.x0, 0.0, 0.0]);
        }
    }
    Path::piecewise_linear(&[0.0, t], &[p.x0, p.x0 + slope * t])
}

/// `ρ (1 - e^{-μt})`, the fluid limit of the M/M/∞ queue started empty.
pub fn fluid_mminfty(p: &QueueParams) -> Result<Path> {
    p.validate()?;
    let rho = p.rho();
    let mut piece = Piece::constant(0.0, rho);
    piece.exp_coef = -rho;
    piece.exp_rate = p.mu;
    Path::from_pieces(vec![piece], p.horizon)
}

/// `γ(t) = 2λt - (λ/μ)(1 - e^{-μt})`.
pub fn gamma_fn(t: f64, lambda: f64, mu: f64) -> f64 {
    2.0 * lambda * t - lambda / mu * (-(-mu * t).exp_m1())
}

fn count_path(initial: u64, events: &[(f64, i8)], horizon: f64) -> Result<(Path, usize, usize)> {
    let mut level = initial as f64;
    let mut times = Vec::with_capacity(events.len());
    let mut values = Vec::with_capacity(events.len());
    let (mut up, mut down) = (0, 0);
    for &(t, d) in events {
        level += f64::from(d);
        if d > 0 {
            up += 1;
        } else {
            down += 1;
        }
        times.push(t);
        values.push(level);
    }
    Ok((Path::step(initial as f64, &times, &values, horizon)?, up, down))
}

/// The M/M/1 queue driven by a configuration of the M/M/1 control measure:
/// atoms with mark `+1` are arrivals, atoms with mark `-1` are potential
/// departures, effective only when the queue is non-empty.
pub fn simulate_mm1_from(p: &QueueParams, drivers: &PointConfiguration, norm: Normalization) -> Result<TrajectoryBundle> {
    p.validate()?;
    let mut level = p.initial_count();
    let mut tau_zero = if level == 0 { 0.0 } else { f64::INFINITY };
    let mut events = Vec::with_capacity(drivers.len());
    for atom in drivers.points() {
        if atom.time <= 0.0 || atom.time >= p.horizon {
            continue;
        }
        if atom.mark > 0.0 {
            level += 1;
            events.push((atom.time, 1));
        } else if level > 0 {
            level -= 1;
            events.push((atom.time, -1));
            if level == 0 && tau_zero.is_infinite() {
                tau_zero = atom.time;
            }
        }
    }
    let (count, up_jumps, down_jumps) = count_path(p.initial_count(), &events, p.horizon)?;
    let scaled = count.scale(1.0 / p.n as f64);
    let fluid = fluid_mm1(p)?;
    let z = scaled.sub(&fluid)?.scale(norm.factor(p));
    Ok(TrajectoryBundle {
        count,
        scaled,
        fluid,
        z,
        y: None,
        tau_zero,
        up_jumps,
        down_jumps,
    })
}

pub fn mm1_measure(p: &QueueParams) -> Result<ControlMeasure> {
    ControlMeasure::mm1(p.lambda, p.mu, p.n, p.horizon)
}

/// Exact M/M/1 simulation with the `√n/√(λ+μ)` scaling.
pub fn simulate_mm1(p: &QueueParams, rng: &mut RandomStream) -> Result<TrajectoryBundle> {
    simulate_mm1_with(p, Normalization::SqrtSum, rng)
}

pub fn simulate_mm1_with(p: &QueueParams, norm: Normalization, rng: &mut RandomStream) -> Result<TrajectoryBundle> {
    let drivers = sample_marked_ppp(&mm1_measure(p)?, rng);
    simulate_mm1_from(p, &drivers, norm)
}

fn require_empty_start(p: &QueueParams) -> Result<()> {
    p.validate()?;
    if p.x0 != 0.0 {
        return Err(Error::Regime(format!("the infinite-server queue starts empty, got x₀ = {}", p.x0)));
    }
    Ok(())
}

fn mminfty_bundle(p: &QueueParams, events: &mut [(f64, i8)]) -> Result<TrajectoryBundle> {
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (count, up_jumps, down_jumps) = count_path(0, events, p.horizon)?;
    let n = p.n as f64;
    let scaled = count.scale(1.0 / n);
    let fluid = fluid_mminfty(p)?;
    let z = scaled.sub(&fluid)?.scale(n.sqrt());
    // Y = √n (L̄ + μ ∫L̄ - λ t), the fluid terms cancelling exactly
    let drift = Path::piecewise_linear(&[0.0, p.horizon], &[0.0, -p.lambda * p.horizon])?;
    let integrated = scaled.antiderivative()?;
    let y = Path::lincomb(1.0, &scaled, p.mu, &integrated)?;
    let y = Path::lincomb(n.sqrt(), &y, n.sqrt(), &drift)?;
    Ok(TrajectoryBundle {
        count,
        scaled,
        fluid,
        z,
        y: Some(y),
        tau_zero: f64::INFINITY,
        up_jumps,
        down_jumps,
    })
}

pub fn service_measure(p: &QueueParams) -> Result<ControlMeasure> {
    ControlMeasure::service(p.lambda, p.mu, p.n, p.horizon)
}

/// The M/M/∞ queue from a configuration of the service measure: atom `(x, z)`
/// is a customer arriving at `x` and leaving at `x + z`.
pub fn simulate_mminfty_from(p: &QueueParams, drivers: &PointConfiguration) -> Result<TrajectoryBundle> {
    require_empty_start(p)?;
    let mut events = Vec::with_capacity(2 * drivers.len());
    for atom in drivers.points() {
        if atom.time <= 0.0 || atom.time >= p.horizon {
            continue;
        }
        events.push((atom.time, 1));
        let exit = atom.time + atom.mark;
        if exit < p.horizon {
            events.push((exit, -1));
        }
    }
    mminfty_bundle(p, &mut events)
}

/// M/M/∞ simulation through the marked Poisson representation.
pub fn simulate_mminfty_trapeze(p: &QueueParams, rng: &mut RandomStream) -> Result<TrajectoryBundle> {
    require_empty_start(p)?;
    let drivers = sample_marked_ppp(&service_measure(p)?, rng);
    simulate_mminfty_from(p, &drivers)
}

/// M/M/∞ simulation by competing exponential clocks.
pub fn simulate_mminfty_events(p: &QueueParams, rng: &mut RandomStream) -> Result<TrajectoryBundle> {
    require_empty_start(p)?;
    let arrival = p.n as f64 * p.lambda;
    let mut t = 0.0;
    let mut busy = 0u64;
    let mut events = Vec::new();
    loop {
        let rate = arrival + busy as f64 * p.mu;
        t += rng.exponential(rate);
        if t >= p.horizon {
            break;
        }
        if rng.uniform() * rate < arrival {
            busy += 1;
            events.push((t, 1));
        } else {
            busy -= 1;
            events.push((t, -1));
        }
    }
    mminfty_bundle(p, &mut events)
}

/// Monte Carlo estimate of `P(τ₀ <= T)` with a 95% Wilson interval.
pub fn hitting_time_zero_stats(p: &QueueParams, replications: usize, streams: &StreamFactory) -> Result<Proportion> {
    if p.horizon == 0.0 {
        return Ok(wilson(0, replications, 1.96));
    }
    p.validate()?;
    if !(p.lambda < p.mu) || !(p.horizon < p.x0 / (p.mu - p.lambda)) {
        return Err(Error::Regime("need λ < μ and T < x₀/(μ - λ)".into()));
    }
    let hits = streams.replicate(replications, |_, rng| -> Result<bool> {
        Ok(simulate_mm1(p, rng)?.tau_zero <= p.horizon)
    });
    let mut count = 0;
    for h in hits {
        count += usize::from(h?);
    }
    Ok(wilson(count, replications, 1.96))
}
