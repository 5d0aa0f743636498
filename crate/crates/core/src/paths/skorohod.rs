//! Upper bounds on the Skorohod distance.

use super::{sup_distance, Path};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct SkorohodEstimate {
    /// `max(‖Id - φ‖∞, ‖f - g∘φ‖∞)` for the best time change found.
    pub value: f64,
    /// The same quantity for `φ = Id`, i.e. the sup distance.
    pub identity: f64,
    /// The best time change found.
    pub time_change: Path,
}

/// Upper bound on `d(f, g) = inf_φ max(‖Id - φ‖∞, ‖f - g∘φ‖∞)`.
///
/// Candidates are the identity, the time change matching the jumps of `f` to
/// those of `g` when both have the same number of jumps, and a coordinate
/// descent over piecewise-linear time changes with `search_depth` free knots
/// started from the better of the two. The result never exceeds the sup distance.
pub fn skorohod_distance_upper(f: &Path, g: &Path, search_depth: usize) -> Result<SkorohodEstimate> {
    let horizon = f.horizon();
    let identity_phi = Path::piecewise_linear(&[0.0, horizon], &[0.0, horizon])?;
    let identity = sup_distance(f, g)?;
    let mut best = SkorohodEstimate {
        value: identity,
        identity,
        time_change: identity_phi,
    };
    if identity == 0.0 || !f.is_piecewise_affine() || !g.is_piecewise_affine() {
        return Ok(best);
    }
    let cost = |knots: &[f64], values: &[f64]| -> Option<(f64, Path)> {
        let phi = Path::piecewise_linear(knots, values).ok()?;
        let shift = knots.iter().zip(values).map(|(t, v)| (t - v).abs()).fold(0.0, f64::max);
        let gp = g.compose(&phi).ok()?;
        let d = sup_distance(f, &gp).ok()?;
        Some((shift.max(d), phi))
    };

    let (mut knots, mut values) = (vec![0.0, horizon], vec![0.0, horizon]);
    let jf = f.jumps(1e-12);
    let jg = g.jumps(1e-12);
    if !jf.is_empty() && jf.len() == jg.len() {
        let mut k = vec![0.0];
        let mut v = vec![0.0];
        k.extend(jf.iter().map(|j| j.0));
        v.extend(jg.iter().map(|j| j.0));
        k.push(horizon);
        v.push(horizon);
        if let Some((c, phi)) = cost(&k, &v) {
            if c < best.value {
                best.value = c;
                best.time_change = phi;
            }
            knots = k;
            values = v;
        }
    }

    if search_depth > 0 {
        let base = Path::piecewise_linear(&knots, &values)?;
        let mut grid: Vec<f64> = knots.clone();
        grid.extend((1..=search_depth).map(|k| k as f64 * horizon / (search_depth + 1) as f64));
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * horizon);
        let mut vals: Vec<f64> = grid.iter().map(|&t| base.eval(t)).collect();
        *vals.last_mut().expect("non-empty") = horizon;
        let mut current = cost(&grid, &vals).map_or(f64::INFINITY, |c| c.0);
        let mut width = 1.0;
        for _sweep in 0..12 {
            let mut improved = false;
            for k in 1..grid.len() - 1 {
                let (lo, hi) = (vals[k - 1], vals[k + 1]);
                let centre = vals[k];
                let span = width * (hi - lo);
                for step in 1..=8 {
                    for sign in [-1.0, 1.0] {
                        let cand = centre + sign * span * step as f64 / 16.0;
                        if cand <= lo || cand >= hi {
                            continue;
                        }
                        let old = vals[k];
                        vals[k] = cand;
                        match cost(&grid, &vals) {
                            Some((c, _)) if c < current => {
                                current = c;
                                improved = true;
                            }
                            _ => vals[k] = old,
                        }
                    }
                }
            }
            if !improved {
                width *= 0.5;
            }
        }
        if let Some((c, phi)) = cost(&grid, &vals) {
            if c < best.value {
                best.value = c;
                best.time_change = phi;
            }
        }
    }
    Ok(best)
}
