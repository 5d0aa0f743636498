//! Exact path representations on `[0, T]`.
//!
//! A [`Path`] is a right-continuous function made of pieces. On each piece the
//! value is a polynomial of degree at most four in the local coordinate
//! `u = t - start`, plus an optional exponential term `c * exp(-r u)`. Step,
//! piecewise-linear and gridded paths are special cases, and the class is closed
//! under the operations the crate needs (sums, running integrals, the Θ
//! transform and its inverse, composition with increasing piecewise-linear
//! time changes).

mod frac;
mod json;
mod norms;
mod skorohod;

pub use frac::{frac_integral_left, frac_integral_right, gamma};
pub use json::PathJson;
pub use norms::{holder_norm, sobolev_norm, sobolev_norm_with, NormOrder, SobolevMethod};
pub use skorohod::{skorohod_distance_upper, SkorohodEstimate};

use crate::error::{param, Error, Result};

/// Maximum number of polynomial coefficients carried by a piece.
pub const MAX_COEFFS: usize = 5;

/// Relative tolerance used when comparing horizons and knot positions.
const TIME_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathKind {
    Step,
    PiecewiseLinear,
    Grid,
    Piecewise,
}

/// One smooth piece, `poly(u) + exp_coef * exp(-exp_rate * u)` with `u = t - start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub poly: [f64; MAX_COEFFS],
    pub exp_coef: f64,
    pub exp_rate: f64,
}

impl Piece {
    pub fn constant(start: f64, value: f64) -> Self {
        Self::affine(start, value, 0.0)
    }

    pub fn affine(start: f64, value: f64, slope: f64) -> Self {
        let mut poly = [0.0; MAX_COEFFS];
        poly[0] = value;
        poly[1] = slope;
        Self {
            start,
            poly,
            exp_coef: 0.0,
            exp_rate: 0.0,
        }
    }

    /// Value at local coordinate `u`.
    #[inline]
    pub fn at(&self, u: f64) -> f64 {
        let mut v = 0.0;
        for c in self.poly.iter().rev() {
            v = v * u + c;
        }
        if self.exp_coef != 0.0 {
            v += self.exp_coef * (-self.exp_rate * u).exp();
        }
        v
    }

    /// Derivative at local coordinate `u`.
    pub fn slope_at(&self, u: f64) -> f64 {
        let mut v = 0.0;
        for (k, c) in self.poly.iter().enumerate().skip(1).rev() {
            v = v * u + k as f64 * c;
        }
        if self.exp_coef != 0.0 {
            v -= self.exp_rate * self.exp_coef * (-self.exp_rate * u).exp();
        }
        v
    }

    pub fn degree(&self) -> usize {
        self.poly.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn has_exp(&self) -> bool {
        self.exp_coef != 0.0
    }

    /// Affine without exponential part.
    pub fn is_affine(&self) -> bool {
        !self.has_exp() && self.degree() <= 1
    }

    /// The same function re-expressed around `start + d`.
    pub fn shifted(&self, d: f64) -> Self {
        if d == 0.0 {
            return *self;
        }
        let mut poly = self.poly;
        // repeated synthetic division: Taylor shift
        for i in 0..MAX_COEFFS {
            for j in (i..MAX_COEFFS - 1).rev() {
                poly[j] += d * poly[j + 1];
            }
        }
        Self {
            start: self.start + d,
            poly,
            exp_coef: self.exp_coef * (-self.exp_rate * d).exp(),
            exp_rate: self.exp_rate,
        }
    }

    fn scaled(&self, a: f64) -> Self {
        let mut p = *self;
        p.poly.iter_mut().for_each(|c| *c *= a);
        p.exp_coef *= a;
        p
    }

    fn normalised(mut self) -> Self {
        if self.exp_rate == 0.0 && self.exp_coef != 0.0 {
            self.poly[0] += self.exp_coef;
            self.exp_coef = 0.0;
        }
        if self.exp_coef == 0.0 {
            self.exp_rate = 0.0;
        }
        self
    }

    /// `∫_0^u` of the piece, as a piece with zero value at `u = 0`.
    fn primitive(&self) -> Result<Self> {
        if self.poly[MAX_COEFFS - 1] != 0.0 {
            return Err(Error::Unsupported("running integral exceeds the supported polynomial degree".into()));
        }
        let mut poly = [0.0; MAX_COEFFS];
        for k in 0..MAX_COEFFS - 1 {
            poly[k + 1] = self.poly[k] / (k + 1) as f64;
        }
        let mut exp_coef = 0.0;
        if self.has_exp() {
            exp_coef = -self.exp_coef / self.exp_rate;
            poly[0] = self.exp_coef / self.exp_rate;
        }
        Ok(Self {
            start: self.start,
            poly,
            exp_coef,
            exp_rate: self.exp_rate,
        })
    }
}

/// A real function on `[0, T]`, right-continuous with left limits.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    kind: PathKind,
    horizon: f64,
    pieces: Vec<Piece>,
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(param(format!("horizon must be positive and finite, got {horizon}")));
    }
    Ok(())
}

impl Path {
    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self {
            kind: PathKind::Step,
            horizon,
            pieces: vec![Piece::constant(0.0, value)],
        })
    }

    /// Step path equal to `initial` before the first jump and to `values[k]`
    /// from `jumps[k]` on. Jump times must lie in `(0, T)` and be nondecreasing;
    /// coinciding times keep the last value.
    pub fn step(initial: f64, jumps: &[f64], values: &[f64], horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if jumps.len() != values.len() {
            return Err(Error::Shape(format!("{} jump times but {} values", jumps.len(), values.len())));
        }
        let mut pieces = vec![Piece::constant(0.0, initial)];
        for (&t, &v) in jumps.iter().zip(values) {
            if !(t > 0.0 && t < horizon) {
                return Err(param(format!("jump time {t} outside (0, {horizon})")));
            }
            let last = pieces.last_mut().expect("non-empty");
            if t < last.start {
                return Err(param("jump times must be nondecreasing"));
            }
            if t == last.start {
                last.poly[0] = v;
            } else {
                pieces.push(Piece::constant(t, v));
            }
        }
        Ok(Self {
            kind: PathKind::Step,
            horizon,
            pieces,
        })
    }

    /// Continuous piecewise-linear path through `(knots[k], values[k])`. The
    /// knots must start at 0, end at the horizon and increase strictly.
    pub fn piecewise_linear(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::Shape(format!("{} knots but {} values", knots.len(), values.len())));
        }
        if knots.len() < 2 || knots[0] != 0.0 {
            return Err(param("knots must contain 0 and the horizon"));
        }
        let horizon = *knots.last().expect("non-empty");
        check_horizon(horizon)?;
        let mut pieces = Vec::with_capacity(knots.len() - 1);
        for k in 0..knots.len() - 1 {
            let h = knots[k + 1] - knots[k];
            if !(h > 0.0) {
                return Err(param("knots must increase strictly"));
            }
            pieces.push(Piece::affine(knots[k], values[k], (values[k + 1] - values[k]) / h));
        }
        Ok(Self {
            kind: PathKind::PiecewiseLinear,
            horizon,
            pieces,
        })
    }

    /// Piecewise-linear path through `m = values.len()` equispaced points.
    pub fn grid(values: &[f64], horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let m = values.len();
        if m < 2 {
            return Err(param("a grid needs at least two points"));
        }
        let cells = (m - 1) as f64;
        let h = horizon / cells;
        let pieces = (0..m - 1)
            .map(|k| Piece::affine(k as f64 * horizon / cells, values[k], (values[k + 1] - values[k]) / h))
            .collect();
        Ok(Self {
            kind: PathKind::Grid,
            horizon,
            pieces,
        })
    }

    /// General constructor. Piece starts must begin at 0 and increase strictly
    /// below the horizon.
    pub fn from_pieces(pieces: Vec<Piece>, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if pieces.first().map(|p| p.start) != Some(0.0) {
            return Err(param("first piece must start at 0"));
        }
        for w in pieces.windows(2) {
            if !(w[1].start > w[0].start) {
                return Err(param("piece starts must increase strictly"));
            }
        }
        if pieces.last().expect("non-empty").start >= horizon {
            return Err(param("piece starts must lie below the horizon"));
        }
        let pieces: Vec<Piece> = pieces.into_iter().map(Piece::normalised).collect();
        let kind = classify(&pieces, horizon);
        Ok(Self { kind, horizon, pieces })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// End of piece `k`.
    pub fn piece_end(&self, k: usize) -> f64 {
        self.pieces.get(k + 1).map_or(self.horizon, |p| p.start)
    }

    /// Interior breakpoints (piece starts other than 0).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.start).collect()
    }

    /// Index of the piece containing `t` (right-continuous convention).
    pub fn piece_index(&self, t: f64) -> usize {
        self.pieces.partition_point(|p| p.start <= t).saturating_sub(1)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.piece_index(t);
        self.pieces[k].at(t - self.pieces[k].start)
    }

    /// `f(t-)`; equals `f(0)` at 0.
    pub fn left_limit(&self, t: f64) -> f64 {
        let k = self.pieces.partition_point(|p| p.start < t).saturating_sub(1);
        self.pieces[k].at(t - self.pieces[k].start)
    }

    /// Value at the right end of piece `k` (left limit there).
    pub fn end_value(&self, k: usize) -> f64 {
        let p = &self.pieces[k];
        p.at(self.piece_end(k) - p.start)
    }

    /// Jumps `(time, f(t) - f(t-))` with size above `tol`.
    pub fn jumps(&self, tol: f64) -> Vec<(f64, f64)> {
        (1..self.pieces.len())
            .map(|k| (self.pieces[k].start, self.pieces[k].poly[0] + self.pieces[k].exp_coef - self.end_value(k - 1)))
            .filter(|(_, d)| d.abs() > tol)
            .collect()
    }

    pub fn is_continuous(&self, tol: f64) -> bool {
        self.jumps(tol).is_empty()
    }

    /// Every piece affine with no exponential term.
    pub fn is_piecewise_affine(&self) -> bool {
        self.pieces.iter().all(Piece::is_affine)
    }

    pub fn same_horizon(&self, other: &Path) -> Result<()> {
        if (self.horizon - other.horizon).abs() > TIME_EPS * self.horizon.max(other.horizon) {
            return Err(Error::Shape(format!(
                "horizons differ: {} vs {}",
                self.horizon, other.horizon
            )));
        }
        Ok(())
    }

    pub fn scale(&self, a: f64) -> Path {
        let mut out = self.clone();
        out.pieces.iter_mut().for_each(|p| *p = p.scaled(a));
        out
    }

    pub fn add_constant(&self, c: f64) -> Path {
        let mut out = self.clone();
        out.pieces.iter_mut().for_each(|p| p.poly[0] += c);
        out
    }

    /// `a f + b g` on the union of both breakpoint sets.
    pub fn lincomb(a: f64, f: &Path, b: f64, g: &Path) -> Result<Path> {
        f.same_horizon(g)?;
        let starts = merge_starts(&f.pieces, &g.pieces);
        let mut pieces = Vec::with_capacity(starts.len());
        let (mut i, mut j) = (0, 0);
        for &s in &starts {
            while i + 1 < f.pieces.len() && f.pieces[i + 1].start <= s {
                i += 1;
            }
            while j + 1 < g.pieces.len() && g.pieces[j + 1].start <= s {
                j += 1;
            }
            let p = f.pieces[i].shifted(s - f.pieces[i].start).scaled(a);
            let q = g.pieces[j].shifted(s - g.pieces[j].start).scaled(b);
            let mut r = p;
            r.start = s;
            for k in 0..MAX_COEFFS {
                r.poly[k] += q.poly[k];
            }
            match (p.has_exp(), q.has_exp()) {
                (_, false) => {}
                (false, true) => {
                    r.exp_coef = q.exp_coef;
                    r.exp_rate = q.exp_rate;
                }
                (true, true) => {
                    if (p.exp_rate - q.exp_rate).abs() > 1e-14 * p.exp_rate.abs().max(q.exp_rate.abs()) {
                        return Err(Error::Unsupported(
                            "sum of exponential terms with different rates".into(),
                        ));
                    }
                    r.exp_coef += q.exp_coef;
                }
            }
            pieces.push(r.normalised());
        }
        let kind = match (f.kind, g.kind) {
            (PathKind::Grid, PathKind::Grid) if f.pieces.len() == g.pieces.len() => PathKind::Grid,
            _ => classify(&pieces, f.horizon),
        };
        Ok(Path {
            kind,
            horizon: f.horizon,
            pieces,
        })
    }

    pub fn sub(&self, other: &Path) -> Result<Path> {
        Path::lincomb(1.0, self, -1.0, other)
    }

    /// The running integral `t ↦ ∫_0^t f`.
    pub fn antiderivative(&self) -> Result<Path> {
        let mut acc = 0.0;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (k, p) in self.pieces.iter().enumerate() {
            let mut q = p.primitive()?;
            q.poly[0] += acc;
            acc = q.at(self.piece_end(k) - q.start);
            pieces.push(q.normalised());
        }
        let kind = classify(&pieces, self.horizon);
        Ok(Path {
            kind,
            horizon: self.horizon,
            pieces,
        })
    }

    /// `∫_0^T f`.
    pub fn integral(&self) -> Result<f64> {
        let a = self.antiderivative()?;
        let k = a.pieces.len() - 1;
        Ok(a.end_value(k))
    }

    /// `f ∘ φ` for an increasing piecewise-affine bijection `φ` of `[0, T]`.
    /// Supported for paths whose pieces are affine.
    pub fn compose(&self, phi: &Path) -> Result<Path> {
        self.same_horizon(phi)?;
        if !self.is_piecewise_affine() {
            return Err(Error::Unsupported("composition needs a piecewise-affine path".into()));
        }
        if !phi.is_piecewise_affine() || !phi.is_continuous(1e-12) {
            return Err(param("time change must be continuous and piecewise affine"));
        }
        if phi.pieces.iter().any(|p| p.poly[1] <= 0.0) {
            return Err(param("time change must be strictly increasing"));
        }
        let inv = |s: f64| -> f64 {
            // φ⁻¹ by locating the piece of φ whose image contains s
            let k = phi
                .pieces
                .partition_point(|p| p.poly[0] <= s)
                .saturating_sub(1);
            let p = &phi.pieces[k];
            p.start + (s - p.poly[0]) / p.poly[1]
        };
        let mut starts: Vec<f64> = phi.pieces.iter().map(|p| p.start).collect();
        starts.extend(self.pieces.iter().skip(1).map(|p| inv(p.start)));
        starts.sort_by(f64::total_cmp);
        starts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS * self.horizon);
        starts.retain(|&s| s < self.horizon);
        let mut pieces = Vec::with_capacity(starts.len());
        for (idx, &s) in starts.iter().enumerate() {
            let end = starts.get(idx + 1).copied().unwrap_or(self.horizon);
            let mid = 0.5 * (s + end);
            let k = phi.piece_index(mid);
            let pp = &phi.pieces[k];
            let y = pp.at(s - pp.start);
            let fk = self.piece_index(pp.at(mid - pp.start));
            let fp = &self.pieces[fk];
            let value = fp.at(y - fp.start);
            pieces.push(Piece::affine(s, value, fp.poly[1] * pp.poly[1]));
        }
        let kind = classify(&pieces, self.horizon);
        Ok(Path {
            kind,
            horizon: self.horizon,
            pieces,
        })
    }

    /// Restriction to a coarser set of pieces is not needed; this samples the
    /// path at `m` equispaced points including both endpoints.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        let h = self.horizon / (m.max(2) - 1) as f64;
        (0..m.max(2)).map(|k| self.eval(k as f64 * h)).collect()
    }
}

fn classify(pieces: &[Piece], horizon: f64) -> PathKind {
    if pieces.iter().all(|p| !p.has_exp() && p.degree() == 0) {
        return PathKind::Step;
    }
    if pieces.iter().all(Piece::is_affine) {
        let cont = (1..pieces.len()).all(|k| {
            let prev = &pieces[k - 1];
            let v = prev.at(pieces[k].start - prev.start);
            (pieces[k].poly[0] - v).abs() <= 1e-12 * (1.0 + v.abs())
        });
        if cont {
            return PathKind::PiecewiseLinear;
        }
    }
    let _ = horizon;
    PathKind::Piecewise
}

fn merge_starts(a: &[Piece], b: &[Piece]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) if p.start < q.start => {
                i += 1;
                p.start
            }
            (Some(p), Some(q)) if p.start > q.start => {
                j += 1;
                q.start
            }
            (Some(p), Some(_)) => {
                i += 1;
                j += 1;
                p.start
            }
            (Some(p), None) => {
                i += 1;
                p.start
            }
            (None, Some(q)) => {
                j += 1;
                q.start
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// The affine interpolation of `f` on the mesh `iT/n`, `i = 0..n`.
pub fn interpolate_affine(f: &Path, n: usize, horizon: f64) -> Result<Path> {
    if n == 0 {
        return Err(param("interpolation needs n >= 1"));
    }
    check_horizon(horizon)?;
    if (f.horizon - horizon).abs() > TIME_EPS * horizon {
        return Err(Error::Shape(format!("path horizon {} differs from {horizon}", f.horizon)));
    }
    let values: Vec<f64> = (0..=n).map(|i| f.eval(i as f64 * horizon / n as f64)).collect();
    let mut out = Path::grid(&values, horizon)?;
    if n == 1 {
        out.kind = PathKind::PiecewiseLinear;
    }
    Ok(out)
}

/// `sup_t |f(t) - g(t)|`, including one-sided limits at breakpoints.
///
/// On intervals where both paths are affine the supremum is read off the
/// endpoints. Elsewhere the difference is sampled and the best sample refined
/// by golden-section search.
pub fn sup_distance(f: &Path, g: &Path) -> Result<f64> {
    f.same_horizon(g)?;
    let starts = merge_starts(&f.pieces, &g.pieces);
    let horizon = f.horizon;
    let mut best: f64 = 0.0;
    let (mut i, mut j) = (0, 0);
    for (idx, &a) in starts.iter().enumerate() {
        let b = starts.get(idx + 1).copied().unwrap_or(horizon);
        while i + 1 < f.pieces.len() && f.pieces[i + 1].start <= a {
            i += 1;
        }
        while j + 1 < g.pieces.len() && g.pieces[j + 1].start <= a {
            j += 1;
        }
        let (p, q) = (&f.pieces[i], &g.pieces[j]);
        let d = |t: f64| (p.at(t - p.start) - q.at(t - q.start)).abs();
        best = best.max(d(a)).max(d(b));
        if !(p.is_affine() && q.is_affine()) {
            best = best.max(smooth_max(&d, a, b));
        }
    }
    Ok(best)
}

/// Maximum of a smooth nonnegative function on `[a, b]` by sampling and
/// golden-section refinement around the best sample.
pub(crate) fn smooth_max(d: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const SAMPLES: usize = 64;
    let h = (b - a) / SAMPLES as f64;
    let (mut arg, mut best) = (0, f64::NEG_INFINITY);
    for k in 0..=SAMPLES {
        let v = d(a + k as f64 * h);
        if v > best {
            best = v;
            arg = k;
        }
    }
    let mut lo = a + (arg.saturating_sub(1)) as f64 * h;
    let mut hi = (a + (arg + 1) as f64 * h).min(b);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (d(x1), d(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = d(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = d(x2);
        }
        if hi - lo < 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    best.max(f1).max(f2)
}
