//! Hölder and fractional Sobolev norms of paths.

use std::cell::Cell;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{Path, Piece};
use crate::error::{param, Error, Result};
use crate::quad::{self, power_integral, GaussLegendre, Tolerance};

/// Order `(η, p)` of the fractional Sobolev space `W_{η,p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormOrder {
    pub eta: f64,
    pub p: f64,
}

impl NormOrder {
    pub fn new(eta: f64, p: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(param(format!("η must lie in (0, 1], got {eta}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(param(format!("p must be at least 1, got {p}")));
        }
        Ok(Self { eta, p })
    }

    /// `η - 1/p`, the Hölder-embedding index.
    pub fn embedding_index(&self) -> f64 {
        self.eta - 1.0 / self.p
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SobolevMethod {
    /// Fast route when it applies, general route otherwise.
    #[default]
    Auto,
    /// Blockwise quadrature over pairs of pieces; any path.
    General,
    /// FFT-based evaluation for `p = 2` on uniform continuous piecewise-linear paths.
    Fast,
}

/// Jumps at or below this size are treated as rounding.
const CONTINUITY_TOL: f64 = 1e-12;

/// `‖f‖_{η,p}`, with the default method and tolerance.
pub fn sobolev_norm(f: &Path, order: NormOrder, tol: Tolerance) -> Result<f64> {
    sobolev_norm_with(f, order, tol, SobolevMethod::Auto)
}

pub fn sobolev_norm_with(f: &Path, order: NormOrder, tol: Tolerance, method: SobolevMethod) -> Result<f64> {
    let order = NormOrder::new(order.eta, order.p)?;
    check_finite(f, order)?;
    let value = match method {
        SobolevMethod::General => general(f, order, tol)?,
        SobolevMethod::Fast => fast(f, order.eta).ok_or_else(|| {
            Error::Unsupported("fast route needs p = 2 and a uniform continuous piecewise-linear path".into())
        })?,
        SobolevMethod::Auto => match fast_applies(f, order) {
            true => fast(f, order.eta).expect("checked"),
            false => general(f, order, tol)?,
        },
    };
    Ok(value.max(0.0).powf(1.0 / order.p))
}

fn check_finite(f: &Path, order: NormOrder) -> Result<()> {
    let pe = order.p * order.eta;
    if pe >= 1.0 && !f.is_continuous(CONTINUITY_TOL) {
        return Err(Error::Divergence(format!(
            "path has jumps and η - 1/p = {} >= 0",
            order.embedding_index()
        )));
    }
    let moves = f.pieces().iter().any(|p| p.has_exp() || p.degree() > 0);
    if order.eta >= 1.0 && moves {
        return Err(Error::Divergence("η = 1 seminorm of a non-constant piece".into()));
    }
    Ok(())
}

fn fast_applies(f: &Path, order: NormOrder) -> bool {
    order.p == 2.0 && order.eta < 1.0 && uniform_slopes(f).is_some() && f.pieces().len() > 8
}

/// Slopes and mesh of a uniform continuous piecewise-affine path.
fn uniform_slopes(f: &Path) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    if !f.is_piecewise_affine() || !f.is_continuous(CONTINUITY_TOL) {
        return None;
    }
    let n = f.pieces().len();
    let h = f.horizon() / n as f64;
    for (k, p) in f.pieces().iter().enumerate() {
        if (p.start - k as f64 * h).abs() > 1e-9 * h {
            return None;
        }
    }
    let slopes = f.pieces().iter().map(|p| p.poly[1]).collect();
    let mut values: Vec<f64> = f.pieces().iter().map(|p| p.poly[0]).collect();
    values.push(f.end_value(n - 1));
    Some((h, slopes, values))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Kernel moments `K_ab = ∫∫_{[0,h]^2} x^a y^b (D + x + y)^{-c} dx dy`.
fn kernel_moment(a: usize, b: usize, d: f64, h: f64, c: f64) -> f64 {
    let gl = GaussLegendre::cached(20);
    let beta = factorial(a) * factorial(b) / factorial(a + b + 1);
    let k = (a + b + 1) as f64;
    // r in [0, h]: ψ(r) = β r^{a+b+1}
    let lower = if d == 0.0 {
        beta * power_integral(0.0, h, k - c)
    } else {
        beta * gl.integrate(0.0, h, |r| r.powf(k) * (d + r).powf(-c))
    };
    // r in [h, 2h]: ψ(r) = ∫_{r-h}^{h} x^a (r - x)^b dx, exact with three nodes
    let g3 = GaussLegendre::cached(3);
    let upper = gl.integrate(h, 2.0 * h, |r| {
        let psi = g3.integrate(r - h, h, |x| x.powi(a as i32) * (r - x).powi(b as i32));
        psi * (d + r).powf(-c)
    });
    lower + upper
}

/// Cross-correlations `X(k) = Σ_i u[i + k] v[i]` for `k = 0..len`.
fn correlate(planner: &mut FftPlanner<f64>, u: &[f64], v: &[f64]) -> Vec<f64> {
    let n = u.len();
    let size = (2 * n).next_power_of_two();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);
    let mut a: Vec<Complex<f64>> = (0..size).map(|i| Complex::new(u.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    let mut b: Vec<Complex<f64>> = (0..size).map(|i| Complex::new(v.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fft.process(&mut a);
    fft.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y.conj();
    }
    ifft.process(&mut a);
    a.iter().take(n).map(|z| z.re / size as f64).collect()
}

fn prefix(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for x in xs {
        acc += x;
        out.push(acc);
    }
    out
}

/// `‖f‖^2` for `p = 2` on a uniform continuous piecewise-linear path, in
/// `O(N log N)`.
fn fast(f: &Path, eta: f64) -> Option<f64> {
    let (h, m, values) = uniform_slopes(f)?;
    let n = m.len();
    let c = 1.0 + 2.0 * eta;
    let a = 2.0 - 2.0 * eta;

    let lp: f64 = values
        .windows(2)
        .map(|w| h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
        .sum();

    let mut half = m.iter().map(|x| x * x).sum::<f64>() * h.powf(a + 1.0) / (a * (a + 1.0));

    // S_k = Σ_{q<k} m_q, centred; only differences of S enter
    let mut s = prefix(m.iter().copied());
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    s.iter_mut().for_each(|x| *x -= mean);
    let s0 = &s[..n];
    let s1 = &s[1..];

    let mut planner = FftPlanner::new();
    let x_mm = correlate(&mut planner, &m, &m);
    let x_s0m = correlate(&mut planner, s0, &m);
    let x_ms1 = correlate(&mut planner, &m, s1);
    let x_s1s1 = correlate(&mut planner, s1, s1);
    let p_m2 = prefix(m.iter().map(|x| x * x));
    let p_s0m = prefix(s0.iter().zip(&m).map(|(x, y)| x * y));
    let p_s1m = prefix(s1.iter().zip(&m).map(|(x, y)| x * y));
    let p_s0sq = prefix(s0.iter().map(|x| x * x));
    let p_s1sq = prefix(s1.iter().map(|x| x * x));

    for lag in 1..n {
        let d = (lag - 1) as f64 * h;
        let k20 = kernel_moment(2, 0, d, h, c);
        let k11 = kernel_moment(1, 1, d, h, c);
        let a1 = p_m2[n - lag] + (p_m2[n] - p_m2[lag]);
        let mut block = k20 * a1 + 2.0 * k11 * x_mm[lag];
        if lag >= 2 {
            let k10 = kernel_moment(1, 0, d, h, c);
            let k00 = kernel_moment(0, 0, d, h, c);
            let a4 = x_s0m[lag] + (p_s0m[n] - p_s0m[lag]) - p_s1m[n - lag] - x_ms1[lag];
            let cross = x_s1s1[lag - 1] - s1[n - 1] * s1[n - lag];
            let a5 = (p_s0sq[n] - p_s0sq[lag]) + p_s1sq[n - lag] - 2.0 * cross;
            block += 2.0 * h * k10 * a4 + h * h * k00 * a5.max(0.0);
        }
        half += block;
    }
    Some(lp + 2.0 * half)
}

struct Nested<'a> {
    err: &'a Cell<Option<Error>>,
}

impl Nested<'_> {
    fn inner<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: Tolerance) -> f64 {
        match quad::integrate(f, a, b, tol) {
            Ok(e) => e.value,
            Err(e) => {
                let prev = self.err.take();
                self.err.set(prev.or(Some(e)));
                0.0
            }
        }
    }
}

/// `∫|f|^p + ∬|f(t) - f(s)|^p |t - s|^{-1-pη}` by quadrature over pairs of pieces.
fn general(f: &Path, order: NormOrder, tol: Tolerance) -> Result<f64> {
    let NormOrder { eta, p } = order;
    let pe = p * eta;
    let a = p - pe;
    let k = f.pieces().len();
    let blocks = (k * (k + 1) / 2 + k) as f64;
    let btol = Tolerance {
        abs: tol.abs / blocks,
        ..tol
    };
    let err = Cell::new(None);
    let nest = Nested { err: &err };
    let pw = |x: f64| x.abs().powf(p);
    let span = |i: usize| (f.pieces()[i].start, f.piece_end(i));
    let val = |i: usize, t: f64| {
        let q: &Piece = &f.pieces()[i];
        q.at(t - q.start)
    };

    let mut total = 0.0;
    for i in 0..k {
        let (lo, hi) = span(i);
        total += quad::integrate(|t| pw(val(i, t)), lo, hi, btol)?.value;
    }

    let mut half = 0.0;
    for i in 0..k {
        let (ai, bi) = span(i);
        let hi = bi - ai;
        let piece = f.pieces()[i];
        // same piece
        if piece.is_affine() {
            half += pw(piece.poly[1]) * hi.powf(a + 1.0) / (a * (a + 1.0));
        } else if piece.has_exp() || piece.degree() > 0 {
            let phi = |u: f64| {
                let inner = |s: f64| {
                    let q = if u < 1e-7 * hi {
                        piece.slope_at(s + 0.5 * u)
                    } else {
                        (piece.at(s + u) - piece.at(s)) / u
                    };
                    pw(q)
                };
                nest.inner(inner, 0.0, hi - u, Tolerance { abs: btol.abs / hi, ..btol })
            };
            let v = quad::integrate(|q: f64| phi(hi * q.powf(1.0 / a)), 0.0, 1.0, Tolerance {
                abs: btol.abs * a / hi.powf(a),
                ..btol
            })?;
            half += hi.powf(a) / a * v.value;
        }
        if let Some(e) = err.take() {
            return Err(e);
        }
        // adjacent piece
        if i + 1 < k {
            let (_, bj) = span(i + 1);
            let (h1, h2, b) = (hi, bj - bi, bi);
            let jump = f.pieces()[i + 1].poly[0] + f.pieces()[i + 1].exp_coef - f.end_value(i);
            let cexp = if jump.abs() > CONTINUITY_TOL { -pe } else { p - pe };
            let delta = |x: f64, y: f64| val(i + 1, b + y) - val(i, b - x);
            let wstar = h1 / (h1 + h2);
            let outer = |w: f64| {
                let rmax = (h1 / w).min(h2 / (1.0 - w));
                let scale = rmax.powf(cexp + 1.0) / (cexp + 1.0);
                let g = |q: f64| {
                    let r = rmax * q.powf(1.0 / (cexp + 1.0));
                    if r == 0.0 {
                        return 0.0;
                    }
                    let d = delta(r * w, r * (1.0 - w));
                    pw(d) * r.powf(-pe - cexp)
                };
                scale * nest.inner(g, 0.0, 1.0, Tolerance { abs: btol.abs / scale.max(1e-300), ..btol })
            };
            let v = quad::integrate_with_breaks(outer, 0.0, 1.0, &[wstar], btol)?;
            if let Some(e) = err.take() {
                return Err(e);
            }
            half += v.value;
        }
        // distant pieces
        for j in i + 2..k {
            let (aj, bj) = span(j);
            let outer = |s: f64| {
                let g = |t: f64| pw(val(j, t) - val(i, s)) * (t - s).powf(-1.0 - pe);
                nest.inner(g, aj, bj, Tolerance { abs: btol.abs / hi, ..btol })
            };
            let v = quad::integrate(outer, ai, bi, btol)?;
            if let Some(e) = err.take() {
                return Err(e);
            }
            half += v.value;
        }
    }
    Ok(total + 2.0 * half)
}

/// `sup_{s≠t} |f(t) - f(s)| / |t - s|^η` of a continuous piecewise-affine path.
pub fn holder_norm(f: &Path, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(param(format!("η must lie in (0, 1], got {eta}")));
    }
    if !f.is_continuous(CONTINUITY_TOL) {
        return Err(Error::Unsupported("Hölder norm of a path with jumps is infinite".into()));
    }
    if !f.is_piecewise_affine() {
        return Err(Error::Unsupported("Hölder norm needs a piecewise-affine path".into()));
    }
    let k = f.pieces().len();
    let x: Vec<f64> = (0..=k).map(|i| if i < k { f.pieces()[i].start } else { f.horizon() }).collect();
    let v: Vec<f64> = (0..=k).map(|i| if i < k { f.pieces()[i].poly[0] } else { f.end_value(k - 1) }).collect();
    let m: Vec<f64> = f.pieces().iter().map(|p| p.poly[1]).collect();
    let ratio = |d: f64, dv: f64| dv.abs() / d.powf(eta);
    let mut best: f64 = 0.0;
    for i in 0..=k {
        for l in i + 1..=k {
            best = best.max(ratio(x[l] - x[i], v[l] - v[i]));
        }
    }
    if eta < 1.0 {
        let r = eta / (1.0 - eta);
        for kn in 0..=k {
            for j in 0..k {
                if m[j] == 0.0 {
                    continue;
                }
                if j >= kn {
                    // s at knot kn, t inside segment j
                    let d = r * (v[j] - v[kn] - m[j] * (x[j] - x[kn])) / m[j];
                    if d > x[j] - x[kn] && d < x[j + 1] - x[kn] && d > 0.0 {
                        best = best.max(ratio(d, v[j] + m[j] * (x[kn] + d - x[j]) - v[kn]));
                    }
                }
                if j < kn {
                    // t at knot kn, s inside segment j
                    let d = r * (v[kn] - v[j] - m[j] * (x[kn] - x[j])) / m[j];
                    if d > x[kn] - x[j + 1] && d < x[kn] - x[j] && d > 0.0 {
                        best = best.max(ratio(d, v[kn] - v[j] - m[j] * (x[kn] - d - x[j])));
                    }
                }
            }
        }
    }
    Ok(best)
}
