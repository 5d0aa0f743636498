//! Orthogonal kernel families, their Gram matrices and triple absolute
//! moments, and the functional Stein bound
//! `½ n^{-3/2+η} Σ_{j,k,l} ∫ |u_j u_k u_l| dν`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::ppp::{ControlMeasure, Kernel};
use crate::quad::{self, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FamilyVariant {
    /// `u_i(s, r) = r (T(λ+μ))^{-1/2} 1_{[iT/n, (i+1)T/n)}(s)`.
    MM1 { lambda: f64, mu: f64, horizon: f64 },
    /// `u_i = α_{(i+1)/n} - α_{i/n} + μ β_i` on `[0, 1]`.
    MMInfty { lambda: f64, mu: f64, horizon: f64 },
}

#[derive(Clone, Debug)]
pub struct OrthogonalFamily {
    pub n: usize,
    pub variant: FamilyVariant,
    pub kernels: Vec<Kernel>,
    pub measure: ControlMeasure,
}

impl OrthogonalFamily {
    pub fn horizon(&self) -> f64 {
        self.measure.horizon
    }
}

/// `α_t`: the atom is in service at `t`.
pub fn alpha(t: f64) -> Kernel {
    Kernel::Trapeze { at: t }
}

/// `β_i`: service time spent in `[i/n, (i+1)/n]`.
pub fn beta(i: usize, n: usize) -> Kernel {
    Kernel::TrapezeStrip {
        start: i as f64 / n as f64,
        end: (i + 1) as f64 / n as f64,
    }
}

pub fn build_family(variant: FamilyVariant, n: usize) -> Result<OrthogonalFamily> {
    if n == 0 {
        return Err(param("family size must be at least 1"));
    }
    let nf = n as f64;
    match variant {
        FamilyVariant::MM1 { lambda, mu, horizon } => {
            let measure = ControlMeasure::mm1(lambda, mu, n, horizon)?;
            let scale = 1.0 / (horizon * (lambda + mu)).sqrt();
            let kernels = (0..n)
                .map(|i| Kernel::SignedStrip {
                    start: i as f64 * horizon / nf,
                    end: (i + 1) as f64 * horizon / nf,
                    scale,
                })
                .collect();
            Ok(OrthogonalFamily {
                n,
                variant,
                kernels,
                measure,
            })
        }
        FamilyVariant::MMInfty { lambda, mu, horizon } => {
            if horizon != 1.0 {
                return Err(Error::Unsupported(format!(
                    "the infinite-server family is defined on [0, 1]; rescale time (got T = {horizon})"
                )));
            }
            let measure = ControlMeasure::service(lambda, mu, n, 1.0)?;
            let kernels = (0..n)
                .map(|i| {
                    Kernel::Combination(vec![
                        (1.0, alpha((i + 1) as f64 / nf)),
                        (-1.0, alpha(i as f64 / nf)),
                        (mu, beta(i, n)),
                    ])
                })
                .collect();
            Ok(OrthogonalFamily {
                n,
                variant,
                kernels,
                measure,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Closed forms.
    #[default]
    ClosedForm,
    /// Cellwise Gauss–Legendre integration between kernel breakpoints.
    Exact,
    /// Nested adaptive Gauss–Kronrod quadrature of the kernels.
    Quadrature,
}

/// The four off-diagonal terms, `i < j`, whose sum is `∫ u_i u_j dν`:
/// `I₁ = ∫(α_{i+1}-α_i)(α_{j+1}-α_j)`, `I₂ = μ∫β_i(α_{j+1}-α_j)`,
/// `I₃ = μ∫β_j(α_{i+1}-α_i)`, `I₄ = μ²∫β_iβ_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalTerms {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
}

impl OffDiagonalTerms {
    /// `(I₁ + I₃) + (I₂ + I₄)`, paired so the cancellation is exact.
    pub fn sum(&self) -> f64 {
        (self.i1 + self.i3) + (self.i2 + self.i4)
    }
}

/// The six diagonal terms whose sum is `∫ u_i² dν`:
/// `J₁ = ∫α_{i+1}²`, `J₂ = ∫α_i²`, `J₃ = -2∫α_{i+1}α_i`, `J₄ = 2μ∫β_iα_{i+1}`,
/// `J₅ = -2μ∫β_iα_i`, `J₆ = μ²∫β_i²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTerms {
    pub j: [f64; 6],
}

impl DiagonalTerms {
    pub fn sum(&self) -> f64 {
        self.j.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AppendixTerms {
    Off(OffDiagonalTerms),
    Diagonal(DiagonalTerms),
}

fn mminfty_params(family: &OrthogonalFamily) -> Result<(f64, f64)> {
    match family.variant {
        FamilyVariant::MMInfty { lambda, mu, .. } => Ok((lambda, mu)),
        FamilyVariant::MM1 { .. } => Err(Error::Unsupported("closed forms apply to the infinite-server family".into())),
    }
}

/// Closed-form off-diagonal terms for `i < j`.
pub fn off_diagonal_terms(lambda: f64, mu: f64, n: usize, i: usize, j: usize) -> Result<OffDiagonalTerms> {
    if !(i < j && j < n) {
        return Err(param(format!("need 0 <= i < j < n, got i = {i}, j = {j}, n = {n}")));
    }
    let nf = n as f64;
    let d = (j - i) as f64;
    let e = |k: f64| (-mu * k / nf).exp();
    let a = 2.0 * e(d) - e(d - 1.0) - e(d + 1.0);
    let b = e((j + 1) as f64) - e(j as f64);
    let c = lambda * nf / mu;
    Ok(OffDiagonalTerms {
        i1: c * a,
        i2: c * a - lambda * b,
        i3: -(c * a),
        i4: -(c * a - lambda * b),
    })
}

/// Closed-form diagonal terms.
pub fn diagonal_terms(lambda: f64, mu: f64, n: usize, i: usize) -> Result<DiagonalTerms> {
    if i >= n {
        return Err(param(format!("index {i} out of range for n = {n}")));
    }
    let nf = n as f64;
    let a1 = (-mu * (i + 1) as f64 / nf).exp();
    let a0 = (-mu * i as f64 / nf).exp();
    let e1 = (-mu / nf).exp();
    let c = lambda * nf / mu;
    Ok(DiagonalTerms {
        j: [
            c * (1.0 - a1),
            c * (1.0 - a0),
            -2.0 * c * (e1 - a1),
            2.0 * c * (1.0 - e1) - 2.0 * lambda * a1,
            -2.0 * c * (1.0 - e1) - 2.0 * c * (a1 - a0),
            lambda * (2.0 + 2.0 * a1 + 2.0 * nf / mu * (a1 - a0 + e1 - 1.0)),
        ],
    })
}

/// Off-diagonal terms for `i < j`, diagonal terms for `i = j`.
pub fn appendix_b_terms(i: usize, j: usize, family: &OrthogonalFamily) -> Result<AppendixTerms> {
    let (lambda, mu) = mminfty_params(family)?;
    match i.cmp(&j) {
        std::cmp::Ordering::Less => Ok(AppendixTerms::Off(off_diagonal_terms(lambda, mu, family.n, i, j)?)),
        std::cmp::Ordering::Equal => Ok(AppendixTerms::Diagonal(diagonal_terms(lambda, mu, family.n, i)?)),
        std::cmp::Ordering::Greater => Err(param(format!("index order violated: i = {i} > j = {j}"))),
    }
}

/// Nested adaptive quadrature of `∫ f dν` for the service measure, in `(x, z)`.
pub fn service_quadrature(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    breaks: &[f64],
    lambda: f64,
    mu: f64,
    n: usize,
    horizon: f64,
    tol: Tolerance,
) -> Result<f64> {
    let last = breaks.iter().copied().fold(horizon, f64::max);
    let err = std::cell::Cell::new(None);
    let outer = |x: f64| {
        let zb: Vec<f64> = breaks.iter().map(|b| b - x).filter(|z| *z > 0.0).collect();
        let zmax = last - x;
        let g = |z: f64| f(x, z) * mu * (-mu * z).exp();
        let body = quad::integrate_with_breaks(g, 0.0, zmax, &zb, tol);
        let tail = quad::integrate_to_infinity(g, zmax, tol);
        match (body, tail) {
            (Ok(a), Ok(b)) => a.value + b.value,
            (Err(e), _) | (_, Err(e)) => {
                err.set(Some(e));
                0.0
            }
        }
    };
    let xb: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < horizon).collect();
    let v = quad::integrate_with_breaks(outer, 0.0, horizon, &xb, tol)?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(lambda * n as f64 * v.value)
}

fn kernel_quadrature(family: &OrthogonalFamily, f: &(dyn Fn(f64, f64) -> f64 + Sync), breaks: &[f64]) -> Result<f64> {
    let tol = Tolerance::new(1e-12, 1e-11);
    match family.variant {
        FamilyVariant::MMInfty { lambda, mu, horizon } => {
            service_quadrature(f, breaks, lambda, mu, family.n, horizon, tol)
        }
        FamilyVariant::MM1 { lambda, mu, horizon } => {
            let nf = family.n as f64;
            let g = |s: f64| nf * lambda * f(s, 1.0) + nf * mu * f(s, -1.0);
            Ok(quad::integrate_with_breaks(g, 0.0, horizon, breaks, tol)?.value)
        }
    }
}

/// `∫ u_i u_j dν` for all pairs.
pub fn gram_matrix(family: &OrthogonalFamily, method: Method) -> Result<Vec<Vec<f64>>> {
    let n = family.n;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values: Vec<Result<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| gram_entry(family, method, i, j))
        .collect();
    let mut g = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?;
        g[i][j] = v;
        g[j][i] = v;
    }
    Ok(g)
}

fn gram_entry(family: &OrthogonalFamily, method: Method, i: usize, j: usize) -> Result<f64> {
    let (u, v) = (&family.kernels[i], &family.kernels[j]);
    match (method, family.variant) {
        (Method::ClosedForm, FamilyVariant::MM1 { lambda, mu, horizon }) => {
            if i != j {
                return Ok(0.0);
            }
            // strip mass n(λ+μ)·T/n times the squared scale 1/(T(λ+μ))
            let mass = family.n as f64 * (lambda + mu) * (horizon / family.n as f64);
            Ok(mass / (horizon * (lambda + mu)))
        }
        (Method::ClosedForm, FamilyVariant::MMInfty { .. }) => match appendix_b_terms(i, j, family)? {
            AppendixTerms::Off(t) => Ok(t.sum()),
            AppendixTerms::Diagonal(t) => Ok(t.sum()),
        },
        (Method::Exact, _) => family.measure.inner_product(u, v),
        (Method::Quadrature, _) => {
            let mut breaks = u.breakpoints().ok_or(Error::UnsupportedKernel)?;
            breaks.extend(v.breakpoints().ok_or(Error::UnsupportedKernel)?);
            kernel_quadrature(family, &|s, m| u.eval(s, m) * v.eval(s, m), &breaks)
        }
    }
}

/// `S(x, e) = Σ_i |u_i(x, e)|` for the infinite-server family, in closed form.
/// `x` is the arrival time and `e = x + z` the exit time.
pub fn mminfty_abs_sum(x: f64, e: f64, mu: f64, n: usize) -> f64 {
    let nf = n as f64;
    let p = ((x * nf).floor() as usize).min(n - 1);
    let q = (e * nf).floor() as usize;
    if q == p {
        return mu * (e - x);
    }
    let mut s = 1.0 + mu * ((p + 1) as f64 / nf - x);
    let top = q.min(n);
    s += (top - p - 1) as f64 * mu / nf;
    if q < n {
        s += (-1.0 + mu * (e - q as f64 / nf)).abs();
    }
    s
}

/// `Σ_{j,k,l} ∫ |u_j u_k u_l| dν = ∫ (Σ_i |u_i|)³ dν`.
pub fn triple_abs_sum(family: &OrthogonalFamily, method: Method) -> Result<f64> {
    let n = family.n;
    let nf = n as f64;
    match (method, family.variant) {
        (Method::ClosedForm, FamilyVariant::MM1 { lambda, mu, horizon }) => Ok(nf / (horizon * (lambda + mu)).sqrt()),
        (Method::ClosedForm, FamilyVariant::MMInfty { mu, .. }) => {
            let mut breaks: Vec<f64> = (0..=n).map(|k| k as f64 / nf).collect();
            // sign change of -1 + μ(e - q/n) inside a cell
            if 1.0 / mu < 1.0 / nf {
                breaks.extend((0..n).map(|q| q as f64 / nf + 1.0 / mu));
            }
            let f = |x: f64, z: f64| mminfty_abs_sum(x, x + z, mu, n).powi(3);
            Ok(family.measure.integrate(&f, &breaks))
        }
        (Method::Exact, _) | (Method::Quadrature, _) => {
            let mut breaks = Vec::new();
            for k in &family.kernels {
                breaks.extend(k.breakpoints().ok_or(Error::UnsupportedKernel)?);
            }
            if let FamilyVariant::MMInfty { mu, .. } = family.variant {
                if 1.0 / mu < 1.0 / nf {
                    breaks.extend((0..n).map(|q| q as f64 / nf + 1.0 / mu));
                }
            }
            let f = |s: f64, m: f64| family.kernels.iter().map(|k| k.eval(s, m).abs()).sum::<f64>().powi(3);
            if method == Method::Exact {
                Ok(family.measure.integrate(&f, &breaks))
            } else {
                kernel_quadrature(family, &f, &breaks)
            }
        }
    }
}

/// `Σ_i ∫ |u_i|³ dν`, the diagonal part of the triple sum.
pub fn diagonal_cubes(family: &OrthogonalFamily) -> Result<f64> {
    family
        .kernels
        .iter()
        .map(|k| {
            let mut breaks = k.breakpoints().ok_or(Error::UnsupportedKernel)?;
            if let FamilyVariant::MMInfty { mu, .. } = family.variant {
                let nf = family.n as f64;
                breaks.extend((0..family.n).map(|q| q as f64 / nf + 1.0 / mu));
            }
            Ok(family.measure.integrate(&|s, m| k.eval(s, m).abs().powi(3), &breaks))
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub eta: f64,
    pub gram: Vec<Vec<f64>>,
    /// Variances of the Gaussian coefficients, `∫ u_k² dν`.
    pub coefficient_variance: Vec<f64>,
    /// Increment variances of the comparison path, `(T/n) ∫ u_k² dν`.
    pub xi_sq: Vec<f64>,
    pub triple_sum: f64,
    pub bound: f64,
    pub method: Method,
}

impl BoundReport {
    /// The bound at another `η`.
    pub fn bound_at(&self, eta: f64) -> f64 {
        0.5 * (self.n as f64).powf(-1.5 + eta) * self.triple_sum
    }
}

/// Off-diagonal tolerance for quadrature-based Gram matrices.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

pub fn stein_bound(family: &OrthogonalFamily, eta: f64) -> Result<BoundReport> {
    stein_bound_with(family, eta, Method::ClosedForm)
}

pub fn stein_bound_with(family: &OrthogonalFamily, eta: f64, method: Method) -> Result<BoundReport> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(param(format!("η must lie in (0, 1/2), got {eta}")));
    }
    let gram = gram_matrix(family, method)?;
    let tol = match method {
        Method::ClosedForm => 1e-12,
        _ => ORTHOGONALITY_TOL,
    };
    for i in 0..family.n {
        for j in i + 1..family.n {
            if gram[i][j].abs() > tol {
                return Err(Error::Precondition(format!(
                    "kernels {i} and {j} are not orthogonal: ∫u_i u_j dν = {:e}",
                    gram[i][j]
                )));
            }
        }
    }
    let triple_sum = triple_abs_sum(family, method)?;
    let coefficient_variance: Vec<f64> = (0..family.n).map(|k| gram[k][k]).collect();
    let step = family.horizon() / family.n as f64;
    let xi_sq = coefficient_variance.iter().map(|v| step * v).collect();
    let bound = 0.5 * (family.n as f64).powf(-1.5 + eta) * triple_sum;
    Ok(BoundReport {
        n: family.n,
        eta,
        gram,
        coefficient_variance,
        xi_sq,
        triple_sum,
        bound,
        method,
    })
}
