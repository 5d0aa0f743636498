//! Auxiliary quantitative bounds: the interpolation gap of jump paths, the
//! Lambert-W bound on the maximum of Poisson variables, the Chebyshev bound on
//! the stopping time of the infinite-server queue, and the interpolation gap
//! of Brownian motion in Sobolev norm.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::paths::{interpolate_affine, sup_distance, NormOrder, Path};
use crate::ppp::McEstimate;
use crate::quad::Tolerance;
use crate::rng::StreamFactory;
use crate::stats::{wilson, Moments, Proportion};

/// Principal branch of the Lambert function, `W(x) e^{W(x)} = x` for `x ≥ -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if x.is_nan() || x < branch {
        return Err(Error::Domain(format!("W₀ is defined on [-1/e, ∞), got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x - branch < 1e-300 {
        return Ok(-1.0);
    }
    let mut w = if x < -0.25 {
        let p = (2.0 * (1.0 + std::f64::consts::E * x)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        // Padé-type start, accurate near the origin
        x * (1.0 + 4.0 / 3.0 * x) / (1.0 + 7.0 / 3.0 * x + 5.0 / 6.0 * x * x)
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// The bound on `E[max_{i ≤ n} X_i]` for Poisson(ν) variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPoissonBound {
    pub n: usize,
    pub nu: f64,
    /// `ν + inf_u (log n + ν(e^u - u - 1))/u`, in closed form through `W₀`.
    pub w_form: f64,
    /// `(log n - ν) / (log b - log log b)` with `b = (log n - ν)/(νe)`, when `b > e`.
    pub asymptotic: Option<f64>,
    pub asymptotic_denominator: Option<f64>,
    /// `n ≥ exp(e^{ν+1} + ν)`.
    pub asymptotic_valid: bool,
}

impl MaxPoissonBound {
    /// Small denominators make the asymptotic form meaningless.
    pub fn asymptotic_reliable(&self) -> bool {
        self.asymptotic_valid && self.asymptotic_denominator.is_some_and(|d| d >= 0.5)
    }
}

pub fn max_poisson_bound(n: usize, nu: f64) -> Result<MaxPoissonBound> {
    if n < 2 {
        return Err(param(format!("need n >= 2, got {n}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(param(format!("ν must be positive, got {nu}")));
    }
    let num = (n as f64).ln() - nu;
    if num <= 0.0 {
        return Err(Error::Regime(format!("log(n/e^ν) = {num} is not positive")));
    }
    // The minimiser solves (u-1)e^{u-1} = b, and the minimum plus ν is ν e^u.
    let b = num / (nu * std::f64::consts::E);
    let w_form = num / lambert_w0(b)?;
    let (asymptotic, asymptotic_denominator) = if b > std::f64::consts::E {
        let d = b.ln() - b.ln().ln();
        (Some(num / d), Some(d))
    } else {
        (None, None)
    };
    let threshold = (nu + 1.0).exp() + nu;
    Ok(MaxPoissonBound {
        n,
        nu,
        w_form,
        asymptotic,
        asymptotic_denominator,
        asymptotic_valid: (n as f64).ln() >= threshold,
    })
}

/// Smallest `c` with `w_form(n) ≤ c log n / log log n` over the given sizes.
pub fn fit_max_poisson_constant(ns: &[usize], nu: f64) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &n in ns {
        let ln = (n as f64).ln();
        if ln.ln() <= 0.0 {
            return Err(Error::Domain(format!("log log n must be positive, got n = {n}")));
        }
        c = c.max(max_poisson_bound(n, nu)?.w_form * ln.ln() / ln);
    }
    Ok(c)
}

/// Monte Carlo `E[max_{i ≤ n} X_i]` for iid Poisson(ν).
pub fn max_poisson_mc(n: usize, nu: f64, replications: usize, streams: &StreamFactory) -> McEstimate {
    let maxima = streams.replicate(replications, |_, rng| (0..n).map(|_| rng.poisson(nu)).max().unwrap_or(0) as f64);
    McEstimate::from(&Moments::from_slice(&maxima))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpBoundParams {
    /// Maximal jump amplitude.
    pub jump: u32,
    /// Intensity scale of the jump process.
    pub alpha: f64,
    pub n: usize,
    pub horizon: f64,
}

/// `2J log n / log log n`.
pub fn interpolation_gap_bound(p: &JumpBoundParams) -> Result<f64> {
    let ln = (p.n as f64).ln();
    if p.n < 3 || ln.ln() <= 0.0 {
        return Err(Error::Domain(format!("need log log n > 0, got n = {}", p.n)));
    }
    if p.jump == 0 {
        return Err(param("jump amplitude must be at least 1"));
    }
    Ok(2.0 * p.jump as f64 * ln / ln.ln())
}

/// `‖f - π_n f‖_∞` on the mesh `iT/n`.
pub fn interpolation_gap(f: &Path, n: usize) -> Result<f64> {
    sup_distance(f, &interpolate_affine(f, n, f.horizon())?)
}

/// Number of jumps of `f` in each mesh cell `[iT/n, (i+1)T/n)`.
pub fn jumps_per_cell(f: &Path, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let h = f.horizon() / n as f64;
    for (t, _) in f.jumps(0.0) {
        out[((t / h) as usize).min(n - 1)] += 1;
    }
    out
}

/// `Var N_{nλ}(T) / (λnT)² = 1/(λnT)`.
pub fn chebyshev_tau_bound(lambda: f64, n: usize, horizon: f64) -> Result<f64> {
    let mean = lambda * n as f64 * horizon;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(param("λ, n and T must be positive"));
    }
    Ok(1.0 / mean)
}

/// Monte Carlo `P(N_{nλ}(T) ≥ 2λnT)`.
pub fn chebyshev_tau_probability(
    lambda: f64,
    n: usize,
    horizon: f64,
    replications: usize,
    streams: &StreamFactory,
) -> Result<Proportion> {
    let mean = lambda * n as f64 * horizon;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(param("λ, n and T must be positive"));
    }
    let hits = streams.replicate(replications, |_, rng| rng.poisson(mean) as f64 >= 2.0 * mean);
    Ok(wilson(hits.iter().filter(|h| **h).count(), replications, 3.0))
}

/// Monte Carlo `E‖π_n B - B‖_{η,p}` for a standard Brownian motion on `[0, 1]`,
/// sampled on a uniform grid of `refinement` cells (a multiple of `n`, at least `16n`).
pub fn brownian_interpolation_gap(
    order: NormOrder,
    n: usize,
    refinement: usize,
    replications: usize,
    streams: &StreamFactory,
) -> Result<McEstimate> {
    if order.eta >= 0.5 {
        return Err(param(format!("η must be below 1/2, got {}", order.eta)));
    }
    if n == 0 || refinement < 16 * n || !refinement.is_multiple_of(n) {
        return Err(Error::Precondition(format!(
            "refinement {refinement} must be a multiple of n = {n} and at least 16n"
        )));
    }
    let r = refinement / n;
    let sd = (1.0 / refinement as f64).sqrt();
    let tol = Tolerance::new(1e-8, 1e-8);
    let norms = streams.replicate(replications, |_, rng| {
        let mut b = vec![0.0; refinement + 1];
        for k in 1..=refinement {
            b[k] = b[k - 1] + sd * rng.normal();
        }
        let gap: Vec<f64> = (0..=refinement)
            .map(|k| {
                let (c, o) = (k / r, k % r);
                if o == 0 {
                    return 0.0;
                }
                let w = o as f64 / r as f64;
                b[k] - ((1.0 - w) * b[c * r] + w * b[(c + 1) * r])
            })
            .collect();
        Path::grid(&gap, 1.0).and_then(|g| crate::paths::sobolev_norm(&g, order, tol))
    });
    let norms: Vec<f64> = norms.into_iter().collect::<Result<_>>()?;
    Ok(McEstimate::from(&Moments::from_slice(&norms)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(lambert_w0(-0.5).is_err());
        assert!((lambert_w0(-(-1f64).exp()).unwrap() + 1.0).abs() < 1e-6);
    }

    #[test]
    fn max_poisson_regime() {
        assert!(matches!(max_poisson_bound(2, 1.0), Err(Error::Regime(_))));
        let b = max_poisson_bound(5000, 1.0).unwrap();
        assert!(b.w_form > 6.0 && b.w_form < 8.0);
    }

    #[test]
    fn gap_bound_at_e_to_e() {
        let n = std::f64::consts::E.powf(std::f64::consts::E).ceil() as usize;
        assert!(interpolation_gap_bound(&JumpBoundParams { jump: 1, alpha: 1.0, n: 2, horizon: 1.0 }).is_err());
        assert!(interpolation_gap_bound(&JumpBoundParams { jump: 1, alpha: 1.0, n, horizon: 1.0 }).unwrap() > 0.0);
    }

    #[test]
    fn chebyshev_value() {
        assert!((chebyshev_tau_bound(1.0, 100, 1.0).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn interpolation_gap_of_single_jump() {
        let f = Path::step(0.0, &[0.3], &[1.0], 1.0).unwrap();
        // π_1 f runs from 0 to 1, so the gap is max(0.3, 0.7)
        assert!((interpolation_gap(&f, 1).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(jumps_per_cell(&f, 4), vec![0, 1, 0, 0]);
    }
}
