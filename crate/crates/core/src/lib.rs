//! Classical/nonclassical decomposition of quantum observables, Fisher
//! lengths, and numerical verification of exact uncertainty relations.
//!
//! The crate is organised by physical setting:
//!
//! * [`state`] holds the state families and their transforms.
//! * [`decomposition`] computes best classical estimates and the statistics
//!   of the nonclassical remainder.
//! * [`fisher`] computes Fisher lengths, Fisher covariance matrices,
//!   entropies and collision lengths.
//! * [`wigner`] evaluates the Wigner function and its conditional moments.
//! * [`relations`] evaluates both sides of each exact relation and returns a
//!   [`relations::RelationReport`].
//! * [`energy`], [`entanglement`], [`mub`] and [`signal`] cover energy
//!   bounds, two-particle states, complementary bases and sampled signals.
//! * [`schema`] reads and writes JSON state documents; [`suite`] draws
//!   seeded random states.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod circle;
pub mod decomposition;
pub mod energy;
pub mod entanglement;
pub mod error;
pub mod fisher;
pub mod mub;
pub mod relations;
pub mod schema;
pub mod signal;
pub mod spectral;
pub mod state;
pub mod suite;
pub mod tolerances;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;
