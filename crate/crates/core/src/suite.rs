//! Seeded random test states.
//!
//! Every generator takes a seed and an index and draws from its own ChaCha
//! stream, so members can be produced in any order or in parallel and still
//! match.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::state::{FiniteState, Grid2, GridMixedState, GridPureState, GridPureState2, GridSpec};

/// Grid used by the random grid suites: 1024 points on `[-32, 32)`.
pub fn default_grid() -> GridSpec {
    GridSpec::centered(1024, 64.0).expect("valid grid")
}

pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// One chirped, boosted Gaussian packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub weight: Complex64,
    pub center: f64,
    pub width: f64,
    pub wavenumber: f64,
    pub chirp: f64,
}

impl Packet {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Packet {
            weight: normal_complex(rng),
            center: rng.random_range(-6.0..6.0),
            width: rng.random_range(0.6..1.5),
            wavenumber: rng.random_range(-2.0..2.0),
            chirp: rng.random_range(-0.3..0.3),
        }
    }

    pub fn at(&self, x: f64) -> Complex64 {
        let u = x - self.center;
        let amp = (-u * u / (4.0 * self.width * self.width)).exp();
        self.weight * Complex64::from_polar(amp, self.wavenumber * x + self.chirp * u * u)
    }
}

/// Packets of the `index`-th random grid state: one to three of them.
pub fn packets(seed: u64, index: u64) -> Vec<Packet> {
    let mut rng = rng_for(seed, index);
    let count = rng.random_range(1..=3);
    (0..count).map(|_| Packet::draw(&mut rng)).collect()
}

/// Superposition of one to three random packets sampled on `grid`.
pub fn random_grid_state(seed: u64, index: u64, grid: GridSpec) -> Result<GridPureState> {
    let ps = packets(seed, index);
    GridPureState::from_fn(grid, |x| ps.iter().map(|p| p.at(x)).sum())
}

/// Incoherent mixture of two random single packets.
pub fn random_mixture(seed: u64, index: u64, grid: GridSpec) -> Result<GridMixedState> {
    let mut rng = rng_for(seed, index);
    let a = Packet::draw(&mut rng);
    let b = Packet::draw(&mut rng);
    let w: f64 = rng.random_range(0.2..0.8);
    let pa = GridPureState::from_fn(grid, |x| a.at(x))?;
    let pb = GridPureState::from_fn(grid, |x| b.at(x))?;
    GridMixedState::from_ensemble(&[(w, &pa), (1.0 - w, &pb)])
}

/// Haar-random pure state vector in dimension `d`.
pub fn random_vector(seed: u64, index: u64, d: usize) -> Vec<Complex64> {
    let mut rng = rng_for(seed, index);
    let v: Vec<Complex64> = (0..d).map(|_| normal_complex(&mut rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn random_pure_finite(seed: u64, index: u64, d: usize) -> Result<FiniteState> {
    FiniteState::pure(&random_vector(seed, index, d))
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian(seed: u64, index: u64, d: usize) -> DMatrix<Complex64> {
    let mut rng = rng_for(seed, index);
    let m = DMatrix::from_fn(d, d, |_, _| normal_complex(&mut rng));
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Parameters of a random correlated 2D Gaussian: position covariance and
/// a quadratic phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    pub s11: f64,
    pub s22: f64,
    pub rho: f64,
    pub chirp: [f64; 3],
}

pub fn random_gaussian2_params(seed: u64, index: u64) -> Gaussian2 {
    let mut rng = rng_for(seed, index);
    Gaussian2 {
        s11: rng.random_range(0.6..1.6),
        s22: rng.random_range(0.6..1.6),
        rho: rng.random_range(-0.85..0.85),
        chirp: [
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        ],
    }
}

/// `exp(-x^T S^-1 x / 4 + i (c1 x^2 + c2 y^2 + c12 x y))` on `grid`.
pub fn random_gaussian2(seed: u64, index: u64, grid: Grid2) -> Result<(Gaussian2, GridPureState2)> {
    let g = random_gaussian2_params(seed, index);
    let s12 = g.rho * (g.s11 * g.s22).sqrt();
    let det = g.s11 * g.s22 - s12 * s12;
    let (i11, i22, i12) = (g.s22 / det, g.s11 / det, -s12 / det);
    let [c1, c2, c12] = g.chirp;
    let psi = GridPureState2::from_fn(grid, |x, y| {
        let q = i11 * x * x + 2.0 * i12 * x * y + i22 * y * y;
        Complex64::from_polar((-q / 4.0).exp(), c1 * x * x + c2 * y * y + c12 * x * y)
    })?;
    Ok((g, psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = packets(7, 3);
        assert_eq!(a, packets(7, 3));
        assert_ne!(a, packets(7, 4));
        assert_ne!(a, packets(8, 3));
        assert!((1..=3).contains(&a.len()));
    }

    #[test]
    fn random_states_fit_the_box() {
        for i in 0..10 {
            let psi = random_grid_state(1, i, default_grid()).unwrap();
            assert!(!psi.box_too_small());
            assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        }
        let v = random_vector(2, 0, 5);
        assert!((v.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-14);
        let h = random_hermitian(2, 1, 4);
        assert!((&h - h.adjoint()).norm() < 1e-15);
    }
}
