//! The Θ transform `f ↦ (f(0), f - f(0) + τ ∫_0^· f)`, its inverse, and exact
//! Gaussian samplers for the Ornstein–Uhlenbeck limit and `B∘γ`.

use crate::error::{param, Error, Result};
use crate::paths::{Path, Piece, MAX_COEFFS};
use crate::queues::gamma_fn;
use crate::rng::RandomStream;

#[derive(Clone, Debug, PartialEq)]
pub struct ThetaImage {
    pub initial: f64,
    pub residual: Path,
}

pub fn theta_forward(f: &Path, tau: f64) -> Result<ThetaImage> {
    let initial = f.eval(0.0);
    let integral = f.antiderivative()?;
    let residual = Path::lincomb(1.0, f, tau, &integral)?.add_constant(-initial);
    Ok(ThetaImage { initial, residual })
}

/// Coefficients of `Q` solving `Q' + τ Q = P`.
fn particular(p: &[f64; MAX_COEFFS], tau: f64) -> [f64; MAX_COEFFS] {
    let mut q = [0.0; MAX_COEFFS];
    // Q = Σ_j (-1)^j P^{(j)} / τ^{j+1}; solve from the top degree down
    for k in (0..MAX_COEFFS).rev() {
        let next = if k + 1 < MAX_COEFFS { (k + 1) as f64 * q[k + 1] } else { 0.0 };
        q[k] = (p[k] - next) / tau;
    }
    q
}

fn poly_at(c: &[f64; MAX_COEFFS], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * u + v)
}

/// `t ↦ x e^{-τt} + η(t) - τ ∫_0^t e^{-τ(t-s)} η(s) ds`, piece by piece in
/// closed form. `η` must vanish at 0 and carry no exponential terms.
pub fn theta_inverse(x: f64, eta: &Path, tau: f64) -> Result<Path> {
    let e0 = eta.eval(0.0);
    if e0.abs() > 1e-12 {
        return Err(Error::Domain(format!("η(0) must be 0, got {e0}")));
    }
    if tau == 0.0 {
        return Ok(eta.add_constant(x));
    }
    if eta.pieces().iter().any(Piece::has_exp) {
        return Err(Error::Unsupported("inverse transform of a path with exponential terms".into()));
    }
    let mut g = 0.0;
    let mut pieces = Vec::with_capacity(eta.pieces().len());
    for (k, piece) in eta.pieces().iter().enumerate() {
        let q = particular(&piece.poly, tau);
        let mut poly = [0.0; MAX_COEFFS];
        for j in 1..MAX_COEFFS {
            poly[j - 1] = j as f64 * q[j];
        }
        let b = piece.start;
        let out = Piece {
            start: b,
            poly,
            exp_coef: x * (-tau * b).exp() - tau * (g - q[0]),
            exp_rate: tau,
        };
        let h = eta.piece_end(k) - b;
        let decay = (-tau * h).exp();
        g = decay * g + poly_at(&q, h) - q[0] * decay;
        pieces.push(out);
    }
    Path::from_pieces(pieces, eta.horizon())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(param("grid must start at 0 and have at least two points"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(param("grid must be strictly increasing"));
    }
    Ok(())
}

/// `B∘γ` on `grid`, linearly interpolated: independent Gaussian increments of
/// variance `γ(t_{k+1}) - γ(t_k)`.
pub fn sample_time_changed_bm(lambda: f64, mu: f64, grid: &[f64], rng: &mut RandomStream) -> Result<Path> {
    check_grid(grid)?;
    sample_gaussian_increments(grid, |a, b| gamma_fn(b, lambda, mu) - gamma_fn(a, lambda, mu), rng)
}

/// Standard Brownian motion on `grid`.
pub fn sample_bm(grid: &[f64], rng: &mut RandomStream) -> Result<Path> {
    check_grid(grid)?;
    sample_gaussian_increments(grid, |a, b| b - a, rng)
}

fn sample_gaussian_increments(grid: &[f64], var: impl Fn(f64, f64) -> f64, rng: &mut RandomStream) -> Result<Path> {
    let mut values = Vec::with_capacity(grid.len());
    let mut v = 0.0;
    values.push(v);
    for w in grid.windows(2) {
        v += var(w[0], w[1]).max(0.0).sqrt() * rng.normal();
        values.push(v);
    }
    Path::piecewise_linear(grid, &values)
}

/// Jointly sampled `X♯` and `W = ∫_0^· √h dB` on a grid.
#[derive(Clone, Debug)]
pub struct OuSample {
    pub ou: Path,
    pub driver: Path,
}

/// Exact transition moments over `[t0, t1]`: variance of the driver increment,
/// variance of the OU innovation and their covariance.
pub fn ou_step_moments(lambda: f64, mu: f64, t0: f64, t1: f64) -> (f64, f64, f64) {
    let d = t1 - t0;
    let var_w = gamma_fn(t1, lambda, mu) - gamma_fn(t0, lambda, mu);
    let var_g = lambda / mu * (-(-2.0 * mu * d).exp_m1()) - lambda / mu * ((-mu * t1).exp() - (-2.0 * mu * t1 + mu * t0).exp());
    let cov = 2.0 * lambda * (-(-mu * d).exp_m1()) / mu - lambda * (-mu * t1).exp() * d;
    (var_w, var_g, cov)
}

/// `Var X♯(t) = ∫_0^t e^{-2μ(t-s)} h(s) ds` with `h(s) = λ(2 - e^{-μs})`.
pub fn ou_variance(lambda: f64, mu: f64, t: f64) -> f64 {
    ou_step_moments(lambda, mu, 0.0, t).1
}

/// The Ornstein–Uhlenbeck limit started at 0, paired with its driving
/// time-changed Brownian motion.
pub fn sample_ou_paired(lambda: f64, mu: f64, grid: &[f64], rng: &mut RandomStream) -> Result<OuSample> {
    check_grid(grid)?;
    let mut x = vec![0.0];
    let mut w = vec![0.0];
    for s in grid.windows(2) {
        let (var_w, var_g, cov) = ou_step_moments(lambda, mu, s[0], s[1]);
        let (z1, z2) = (rng.normal(), rng.normal());
        let a = var_w.max(0.0).sqrt();
        let (dw, g) = if a > 0.0 {
            let c = cov / a;
            (a * z1, c * z1 + (var_g - c * c).max(0.0).sqrt() * z2)
        } else {
            (0.0, var_g.max(0.0).sqrt() * z2)
        };
        let prev = *x.last().expect("non-empty");
        x.push((-mu * (s[1] - s[0])).exp() * prev + g);
        w.push(w.last().expect("non-empty") + dw);
    }
    Ok(OuSample {
        ou: Path::piecewise_linear(grid, &x)?,
        driver: Path::piecewise_linear(grid, &w)?,
    })
}

pub fn sample_ou_limit(lambda: f64, mu: f64, grid: &[f64], rng: &mut RandomStream) -> Result<Path> {
    Ok(sample_ou_paired(lambda, mu, grid, rng)?.ou)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sup_distance;

    #[test]
    fn forward_of_constant() {
        let f = Path::constant(2.0, 1.0).unwrap();
        let im = theta_forward(&f, 3.0).unwrap();
        assert_eq!(im.initial, 2.0);
        assert!((im.residual.eval(0.5) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_zero_is_exponential() {
        let z = Path::constant(0.0, 2.0).unwrap();
        let f = theta_inverse(1.5, &z, 0.7).unwrap();
        assert!((f.eval(1.3) - 1.5 * (-0.91f64).exp()).abs() < 1e-15);
        let bad = Path::constant(1.0, 2.0).unwrap();
        assert!(matches!(theta_inverse(0.0, &bad, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn round_trip_on_a_step_path() {
        let f = Path::step(0.4, &[0.2, 0.5, 0.9], &[1.0, -0.3, 2.0], 1.2).unwrap();
        let im = theta_forward(&f, 1.7).unwrap();
        let back = theta_inverse(im.initial, &im.residual, 1.7).unwrap();
        assert!(sup_distance(&f, &back).unwrap() < 1e-12);
    }

    #[test]
    fn step_moments_are_a_valid_covariance() {
        let (a, b, c) = ou_step_moments(1.0, 2.0, 0.3, 0.35);
        assert!(a > 0.0 && b > 0.0 && c * c <= a * b);
    }
}
