//! Numerical thresholds shared across the crate.
//!
//! Grid relations are checked at [`GRID_RELATIVE`], finite-dimensional
//! linear algebra at [`FINITE`], and photon-number relations (which carry a
//! cutoff study) at [`FOCK`]. Callers may override the relation tolerances
//! through [`Tolerances`].

use serde::{Deserialize, Serialize};

/// Relative tolerance for exact relations evaluated on a uniform grid.
pub const GRID_RELATIVE: f64 = 1e-6;

/// Tolerance for exact relations in finite-dimensional Hilbert spaces.
pub const FINITE: f64 = 1e-10;

/// Tolerance for photon-number relations evaluated with a cutoff study.
pub const FOCK: f64 = 1e-4;

/// Labels whose probability falls below this fraction of the peak are
/// excluded from quotient quadratures.
pub const DENSITY_MASK: f64 = 1e-12;

/// Decomposition fails when more than this fraction of the mass is masked.
pub const MAX_MASKED_FRACTION: f64 = 0.2;

/// A state must fall below this fraction of its peak density at the box edges.
pub const BOX_EDGE: f64 = 1e-12;

/// Absolute norm floor below which normalization is refused.
pub const ZERO_NORM: f64 = 1e-14;

/// Successive refinement ratio of a Fisher length below which the continuum
/// value is taken to be zero. See [`crate::fisher::RefinementStudy`].
pub const DISCONTINUITY_RATIO: f64 = 0.85;

/// Fisher information (in units of the inverse squared period) below which a
/// periodic density counts as uniform.
pub const UNIFORM_INFORMATION: f64 = 1e-20;

/// Overridable relation tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grid: f64,
    pub finite: f64,
    pub fock: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            grid: GRID_RELATIVE,
            finite: FINITE,
            fock: FOCK,
        }
    }
}
