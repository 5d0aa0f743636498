//! Riemann–Liouville fractional integrals of paths.

use super::{Path, Piece};
use crate::error::{param, Result};
use crate::quad::{self, power_integral, Tolerance};

/// Γ(x) (Lanczos approximation).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_{u0}^{u1} P(X + σ u) u^{α-1} du` where `P` is the polynomial part of `piece`
/// and `σ = ±1`.
fn poly_part(piece: &Piece, x: f64, sigma: f64, u0: f64, u1: f64, alpha: f64) -> f64 {
    let deg = piece.degree();
    let mut total = 0.0;
    for k in 0..=deg {
        let mut coef = 0.0;
        for j in k..=deg {
            coef += piece.poly[j] * binom(j, k) * x.powi((j - k) as i32);
        }
        coef *= sigma.powi(k as i32);
        if coef != 0.0 {
            total += coef * power_integral(u0, u1, k as f64 + alpha - 1.0);
        }
    }
    total
}

/// `∫_{u0}^{u1} c e^{-r (X + σ u)} u^{α-1} du`, with `u = w^{1/α}`.
fn exp_part(piece: &Piece, x: f64, sigma: f64, u0: f64, u1: f64, alpha: f64) -> Result<f64> {
    if !piece.has_exp() {
        return Ok(0.0);
    }
    let (c, r) = (piece.exp_coef, piece.exp_rate);
    let g = |w: f64| {
        let u = w.powf(1.0 / alpha);
        c * (-r * (x + sigma * u)).exp() / alpha
    };
    Ok(quad::integrate(g, u0.powf(alpha), u1.powf(alpha), Tolerance::new(1e-13, 1e-12))?.value)
}

fn check(alpha: f64, grid: &[f64], f: &Path) -> Result<()> {
    if !(alpha >= 0.0) {
        return Err(param(format!("fractional order must be nonnegative, got {alpha}")));
    }
    if grid.len() < 2 || grid[0] != 0.0 || (grid[grid.len() - 1] - f.horizon()).abs() > 1e-12 * f.horizon() {
        return Err(param("output grid must run from 0 to the horizon"));
    }
    Ok(())
}

/// `(I^α_{0+} f)(x) = Γ(α)^{-1} ∫_0^x f(t) (x - t)^{α-1} dt` on `grid`, returned
/// as the piecewise-linear path through the grid values. `α = 0` is the identity.
pub fn frac_integral_left(f: &Path, alpha: f64, grid: &[f64]) -> Result<Path> {
    check(alpha, grid, f)?;
    if alpha == 0.0 {
        return Ok(f.clone());
    }
    let g = gamma(alpha);
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut acc = 0.0;
        for (k, p) in f.pieces().iter().enumerate() {
            if p.start >= x {
                break;
            }
            let b = f.piece_end(k).min(x);
            let (u0, u1) = (x - b, x - p.start);
            let xx = x - p.start;
            acc += poly_part(p, xx, -1.0, u0, u1, alpha) + exp_part(p, xx, -1.0, u0, u1, alpha)?;
        }
        values.push(acc / g);
    }
    Path::piecewise_linear(grid, &values)
}

/// `(I^α_{T-} f)(x) = Γ(α)^{-1} ∫_x^T f(t) (t - x)^{α-1} dt` on `grid`.
pub fn frac_integral_right(f: &Path, alpha: f64, grid: &[f64]) -> Result<Path> {
    check(alpha, grid, f)?;
    if alpha == 0.0 {
        return Ok(f.clone());
    }
    let g = gamma(alpha);
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut acc = 0.0;
        for (k, p) in f.pieces().iter().enumerate() {
            let b = f.piece_end(k);
            if b <= x {
                continue;
            }
            let a = p.start.max(x);
            let (u0, u1) = (a - x, b - x);
            let xx = x - p.start;
            acc += poly_part(p, xx, 1.0, u0, u1, alpha) + exp_part(p, xx, 1.0, u0, u1, alpha)?;
        }
        values.push(acc / g);
    }
    Path::piecewise_linear(grid, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_of_one() {
        let one = Path::constant(1.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..=4).map(|k| k as f64 / 4.0).collect();
        let i1 = frac_integral_left(&one, 1.0, &grid).unwrap();
        assert!((i1.eval(0.75) - 0.75).abs() < 1e-15);
        let ih = frac_integral_left(&one, 0.5, &grid).unwrap();
        assert!((ih.eval(1.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-13);
        assert!(frac_integral_left(&one, -0.5, &grid).is_err());
    }

    #[test]
    fn gamma_is_accurate() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
    }
}
