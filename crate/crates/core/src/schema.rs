//! JSON documents for states.
//!
//! ```json
//! {"family": "grid", "grid": {"n_points": 64, "x_min": -8, "x_max": 8},
//!  "amplitudes": [[re, im], ...]}
//! ```
//!
//! A `"matrix": [[[re, im], ...], ...]` field replaces `"amplitudes"` for a
//! mixed state. Periodic states carry `"j_min"`; Fock states start at `n = 0`
//! and take their cutoff from the length.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::StateRef;
use crate::error::Error;
use crate::state::{FiniteState, FockState, GridMixedState, GridPureState, GridSpec, ModeContent, PeriodicState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Grid,
    Periodic,
    Fock,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDocument {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
}

/// Any state the schema can describe.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyState {
    GridPure(GridPureState),
    GridMixed(GridMixedState),
    Periodic(PeriodicState),
    Fock(FockState),
    Finite(FiniteState),
}

impl AnyState {
    pub fn family(&self) -> Family {
        match self {
            AnyState::GridPure(_) | AnyState::GridMixed(_) => Family::Grid,
            AnyState::Periodic(_) => Family::Periodic,
            AnyState::Fock(_) => Family::Fock,
            AnyState::Finite(_) => Family::Finite,
        }
    }

    /// View for the decomposition routines; finite states have none.
    pub fn as_ref(&self) -> Option<StateRef<'_>> {
        match self {
            AnyState::GridPure(s) => Some(s.into()),
            AnyState::GridMixed(s) => Some(s.into()),
            AnyState::Periodic(s) => Some(s.into()),
            AnyState::Fock(s) => Some(s.into()),
            AnyState::Finite(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Shape(String),

    #[error(transparent)]
    State(#[from] Error),
}

fn complex(v: &[f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn square(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>, SchemaError> {
    let n = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(SchemaError::Shape(format!(
                "matrix row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| complex(&rows[i][j])))
}

fn matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
        .collect()
}

impl StateDocument {
    fn content(&self) -> Result<ModeContent, SchemaError> {
        match (&self.amplitudes, &self.matrix) {
            (Some(a), None) => Ok(ModeContent::Pure(a.iter().map(complex).collect())),
            (None, Some(m)) => Ok(ModeContent::Mixed(square(m)?)),
            _ => Err(SchemaError::Shape(
                "exactly one of \"amplitudes\" and \"matrix\" is required".into(),
            )),
        }
    }

    pub fn into_state(&self) -> Result<AnyState, SchemaError> {
        let content = self.content()?;
        match self.family {
            Family::Grid => {
                let grid = self
                    .grid
                    .ok_or_else(|| SchemaError::Shape("a grid state needs \"grid\"".into()))?;
                let grid = GridSpec::new(grid.n_points, grid.x_min, grid.x_max)?;
                match content {
                    ModeContent::Pure(a) => Ok(AnyState::GridPure(GridPureState::from_unnormalized(grid, a)?)),
                    ModeContent::Mixed(m) => {
                        let n = m.nrows();
                        let flat = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
                        Ok(AnyState::GridMixed(GridMixedState::from_matrix(grid, flat)?))
                    }
                }
            }
            Family::Periodic => {
                let j_min = self
                    .j_min
                    .ok_or_else(|| SchemaError::Shape("a periodic state needs \"j_min\"".into()))?;
                Ok(AnyState::Periodic(PeriodicState::from_unnormalized(j_min, content)?))
            }
            Family::Fock => Ok(AnyState::Fock(FockState::new(content)?)),
            Family::Finite => match content {
                ModeContent::Pure(a) => Ok(AnyState::Finite(FiniteState::pure(&a)?)),
                ModeContent::Mixed(m) => Ok(AnyState::Finite(FiniteState::mixed(m)?)),
            },
        }
    }

    pub fn from_state(state: &AnyState) -> Self {
        let empty = StateDocument {
            family: state.family(),
            grid: None,
            j_min: None,
            amplitudes: None,
            matrix: None,
        };
        let content = |c: &ModeContent| match c {
            ModeContent::Pure(v) => (Some(v.iter().map(pair).collect()), None),
            ModeContent::Mixed(m) => (None, Some(matrix_rows(m))),
        };
        match state {
            AnyState::GridPure(s) => StateDocument {
                grid: Some(*s.grid()),
                amplitudes: Some(s.amplitudes().iter().map(pair).collect()),
                ..empty
            },
            AnyState::GridMixed(s) => {
                let n = s.grid().n_points;
                let m = s.matrix();
                StateDocument {
                    grid: Some(*s.grid()),
                    matrix: Some(
                        (0..n)
                            .map(|i| m[i * n..(i + 1) * n].iter().map(pair).collect())
                            .collect(),
                    ),
                    ..empty
                }
            }
            AnyState::Periodic(s) => {
                let (amplitudes, matrix) = content(s.content());
                StateDocument {
                    j_min: Some(s.j_min()),
                    amplitudes,
                    matrix,
                    ..empty
                }
            }
            AnyState::Fock(s) => {
                let (amplitudes, matrix) = content(s.content());
                StateDocument {
                    amplitudes,
                    matrix,
                    ..empty
                }
            }
            AnyState::Finite(s) => StateDocument {
                matrix: Some(matrix_rows(s.matrix())),
                ..empty
            },
        }
    }
}

/// Parses a state document, reporting syntax errors by line and column.
pub fn parse_state(text: &str) -> Result<AnyState, SchemaError> {
    let doc: StateDocument = serde_json::from_str(text).map_err(|e| SchemaError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.into_state()
}

pub fn state_to_json(state: &AnyState) -> String {
    serde_json::to_string(&StateDocument::from_state(state)).expect("state documents always serialize")
}
