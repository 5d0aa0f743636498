//! JSON form of paths.
//!
//! ```json
//! {"type": "step", "horizon": 1.0, "initial": 0.0, "jumps": [0.3], "values": [1.0]}
//! {"type": "piecewise_linear", "horizon": 1.0, "knots": [0.0, 1.0], "values": [0.0, 2.0]}
//! {"type": "grid", "horizon": 1.0, "values": [0.0, 0.5, 1.0]}
//! {"type": "piecewise", "horizon": 1.0, "pieces": [{"start": 0.0, "poly": [..], "exp_coef": 0.0, "exp_rate": 0.0}]}
//! ```

use serde::{Deserialize, Serialize};

use super::{Path, PathKind, Piece, MAX_COEFFS};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceJson {
    pub start: f64,
    pub poly: Vec<f64>,
    #[serde(default)]
    pub exp_coef: f64,
    #[serde(default)]
    pub exp_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PathJson {
    Step {
        horizon: f64,
        initial: f64,
        jumps: Vec<f64>,
        values: Vec<f64>,
    },
    PiecewiseLinear {
        horizon: f64,
        knots: Vec<f64>,
        values: Vec<f64>,
    },
    Grid {
        horizon: f64,
        values: Vec<f64>,
    },
    Piecewise {
        horizon: f64,
        pieces: Vec<PieceJson>,
    },
}

impl From<&Path> for PathJson {
    fn from(p: &Path) -> Self {
        let horizon = p.horizon();
        let n = p.pieces().len();
        match p.kind() {
            PathKind::Step => PathJson::Step {
                horizon,
                initial: p.pieces()[0].poly[0],
                jumps: p.pieces()[1..].iter().map(|q| q.start).collect(),
                values: p.pieces()[1..].iter().map(|q| q.poly[0]).collect(),
            },
            PathKind::Grid => {
                let mut values: Vec<f64> = p.pieces().iter().map(|q| q.poly[0]).collect();
                values.push(p.end_value(n - 1));
                PathJson::Grid { horizon, values }
            }
            PathKind::PiecewiseLinear => {
                let mut knots: Vec<f64> = p.pieces().iter().map(|q| q.start).collect();
                let mut values: Vec<f64> = p.pieces().iter().map(|q| q.poly[0]).collect();
                knots.push(horizon);
                values.push(p.end_value(n - 1));
                PathJson::PiecewiseLinear { horizon, knots, values }
            }
            PathKind::Piecewise => PathJson::Piecewise {
                horizon,
                pieces: p
                    .pieces()
                    .iter()
                    .map(|q| PieceJson {
                        start: q.start,
                        poly: q.poly[..=q.degree()].to_vec(),
                        exp_coef: q.exp_coef,
                        exp_rate: q.exp_rate,
                    })
                    .collect(),
            },
        }
    }
}

impl TryFrom<PathJson> for Path {
    type Error = crate::Error;

    fn try_from(j: PathJson) -> Result<Path> {
        match j {
            PathJson::Step {
                horizon,
                initial,
                jumps,
                values,
            } => Path::step(initial, &jumps, &values, horizon),
            PathJson::PiecewiseLinear { horizon, knots, values } => {
                let p = Path::piecewise_linear(&knots, &values)?;
                p.same_horizon(&Path::constant(0.0, horizon)?)?;
                Ok(p)
            }
            PathJson::Grid { horizon, values } => Path::grid(&values, horizon),
            PathJson::Piecewise { horizon, pieces } => {
                let pieces = pieces
                    .into_iter()
                    .map(|q| {
                        if q.poly.len() > MAX_COEFFS {
                            return Err(crate::Error::Unsupported(format!(
                                "at most {MAX_COEFFS} polynomial coefficients per piece"
                            )));
                        }
                        let mut poly = [0.0; MAX_COEFFS];
                        poly[..q.poly.len()].copy_from_slice(&q.poly);
                        Ok(Piece {
                            start: q.start,
                            poly,
                            exp_coef: q.exp_coef,
                            exp_rate: q.exp_rate,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Path::from_pieces(pieces, horizon)
            }
        }
    }
}

impl Path {
    pub fn to_json(&self) -> PathJson {
        PathJson::from(self)
    }

    pub fn from_json(j: PathJson) -> Result<Path> {
        Path::try_from(j)
    }
}
