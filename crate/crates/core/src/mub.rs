//! Mutually complementary bases in prime dimension.
//!
//! For an odd prime `d` the bases are the computational basis and, for
//! `k = 0..d`, the vectors `d^{-1/2} sum_m w^{k m^2 + j m} |m>` with
//! `w = e^{2 pi i / d}`. For `d = 2` the three Pauli eigenbases are used.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::FiniteState;

/// Deviation above which a basis set is not accepted as complementary.
pub const COMPLEMENTARITY_TOLERANCE: f64 = 1e-10;

/// `d + 1` orthonormal bases; each basis is a unitary whose columns are the
/// basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubSet {
    pub dimension: usize,
    pub bases: Vec<DMatrix<Complex64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityReport {
    /// `max |<e_i|e_j> - delta_ij|` within each basis.
    pub orthonormality: f64,
    /// `max | |<e_i^a|e_j^b>|^2 - 1/d |` across distinct bases.
    pub overlap: f64,
}

impl ComplementarityReport {
    pub fn deviation(&self) -> f64 {
        self.orthonormality.max(self.overlap)
    }
}

fn is_prime(d: usize) -> bool {
    if d < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= d {
        if d.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

/// Builds the complete set of `d + 1` complementary bases for prime `d`.
pub fn mub_construct(d: usize) -> Result<MubSet> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    let c = |re: f64, im: f64| Complex64::new(re, im);
    if d == 2 {
        let s = 1.0 / 2f64.sqrt();
        let z = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let x = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]);
        let y = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)]);
        return Ok(MubSet {
            dimension: 2,
            bases: vec![z, x, y],
        });
    }
    let norm = 1.0 / (d as f64).sqrt();
    let mut bases = vec![DMatrix::identity(d, d)];
    for k in 0..d {
        bases.push(DMatrix::from_fn(d, d, |m, j| {
            let e = (k * m * m + j * m) % d;
            Complex64::from_polar(norm, 2.0 * PI * e as f64 / d as f64)
        }));
    }
    Ok(MubSet { dimension: d, bases })
}

/// Measures orthonormality and cross-basis overlaps; fails with
/// `NotComplementary` when either deviates by more than
/// [`COMPLEMENTARITY_TOLERANCE`].
pub fn complementarity_check(bases: &[DMatrix<Complex64>]) -> Result<ComplementarityReport> {
    let d = bases.first().map(|b| b.nrows()).unwrap_or(0);
    if d == 0 {
        return Err(Error::InvalidState("empty basis set".into()));
    }
    for b in bases {
        if b.nrows() != d || b.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: b.nrows().max(b.ncols()),
            });
        }
    }
    let mut ortho: f64 = 0.0;
    for b in bases {
        let g = b.adjoint() * b;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((g[(i, j)] - target).norm());
            }
        }
    }
    let mut overlap: f64 = 0.0;
    for (a, ba) in bases.iter().enumerate() {
        for bb in &bases[a + 1..] {
            let g = ba.adjoint() * bb;
            for v in g.iter() {
                overlap = overlap.max((v.norm_sqr() - 1.0 / d as f64).abs());
            }
        }
    }
    let report = ComplementarityReport {
        orthonormality: ortho,
        overlap,
    };
    if report.deviation() > COMPLEMENTARITY_TOLERANCE {
        return Err(Error::NotComplementary {
            deviation: report.deviation(),
        });
    }
    Ok(report)
}

/// `p_j = <e_j|rho|e_j>` for the columns of `basis`.
pub fn measurement_distribution(state: &FiniteState, basis: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let d = state.dimension();
    if basis.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: basis.nrows(),
        });
    }
    let rho = state.matrix();
    Ok((0..basis.ncols())
        .map(|j| {
            let e = basis.column(j);
            (e.adjoint() * rho * e)[(0, 0)].re.max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_set_is_exact() {
        let set = mub_construct(2).unwrap();
        assert_eq!(set.bases.len(), 3);
        let r = complementarity_check(&set.bases).unwrap();
        assert!(r.deviation() < 1e-14);
    }

    #[test]
    fn prime_sets_are_complementary() {
        for d in [3, 5, 7] {
            let set = mub_construct(d).unwrap();
            assert_eq!(set.bases.len(), d + 1);
            assert!(complementarity_check(&set.bases).unwrap().deviation() < 1e-12);
            for b in &set.bases {
                for j in 0..d {
                    assert!(b[(0, j)].im.abs() < 1e-15 && b[(0, j)].re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn composite_dimension_is_refused() {
        assert_eq!(mub_construct(4), Err(Error::NotPrime(4)));
        assert_eq!(mub_construct(1), Err(Error::NotPrime(1)));
    }

    #[test]
    fn perturbed_basis_is_rejected() {
        let mut set = mub_construct(3).unwrap();
        let theta: f64 = 0.05;
        let rot = DMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (1, 1) => Complex64::new(theta.cos(), 0.0),
            (0, 1) => Complex64::new(-theta.sin(), 0.0),
            (1, 0) => Complex64::new(theta.sin(), 0.0),
            (2, 2) => Complex64::new(1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        set.bases[2] = &set.bases[2] * rot;
        assert!(matches!(
            complementarity_check(&set.bases),
            Err(Error::NotComplementary { .. })
        ));
    }

    #[test]
    fn z_eigenstate_is_uniform_in_x() {
        let set = mub_construct(2).unwrap();
        let up = FiniteState::pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let p = measurement_distribution(&up, &set.bases[1]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }
}
