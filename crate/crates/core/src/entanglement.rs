//! Two-particle states: the approximate EPR state, correlation coefficients
//! of the momentum decomposition, and conditional collapse.
//!
//! The EPR state is
//! `psi = K exp(-(x1 - x2 - a)^2 / 4 sigma^2) exp(-(x1 + x2)^2 / 4 tau^2) exp(i p0 (x1 + x2) / 2 hbar)`
//! with `K` fixed numerically. Its probability ridge runs along the diagonal
//! `x1 - x2 = a`, so both axes need a step below `sigma / 2` and the box has
//! to hold several `tau` of the ridge.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{classical_estimate, Basis, ClassicalComponent};
use crate::error::{Error, Result};
use crate::relations::{phase_space_covariances, PhaseSpaceCovariances};
use crate::spectral;
use crate::state::{Constants, Grid2, GridPureState, GridPureState2, GridSpec, Observable};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprParams {
    /// Mean separation `<X1 - X2>`.
    pub a: f64,
    /// Width of the relative position.
    pub sigma: f64,
    /// Width of the centre of mass coordinate `x1 + x2`.
    pub tau: f64,
    /// Total momentum `<P1 + P2>`.
    pub p0: f64,
}

impl Default for EprParams {
    fn default() -> Self {
        EprParams {
            a: 1.0,
            sigma: 0.1,
            tau: 10.0,
            p0: 2.0,
        }
    }
}

/// Smallest `n >= m` with no prime factor above 5.
fn smooth_size(m: usize) -> usize {
    let mut n = m.max(8);
    loop {
        let mut k = n;
        for f in [2, 3, 5] {
            while k.is_multiple_of(f) {
                k /= f;
            }
        }
        if k == 1 && n.is_multiple_of(2) {
            return n;
        }
        n += 1;
    }
}

impl EprParams {
    /// Notes when the widths are outside the regime `sigma < 1 < tau`.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.sigma < 1.0) {
            w.push(format!(
                "sigma = {} is not small; the relative position is not sharp",
                self.sigma
            ));
        }
        if !(self.tau > 1.0) {
            w.push(format!(
                "tau = {} is not large; the total momentum is not sharp",
                self.tau
            ));
        }
        w
    }

    /// Momentum expectation of particle 1 after `P2 = p` is found:
    /// `(sigma^2 p + tau^2 (p0 - p)) / (sigma^2 + tau^2)`.
    pub fn collapsed_momentum(&self, p: f64) -> f64 {
        let (s2, t2) = (self.sigma * self.sigma, self.tau * self.tau);
        (s2 * p + t2 * (self.p0 - p)) / (s2 + t2)
    }

    /// Square grid with step `sigma / 2` holding `x1 + x2` out to `7 tau`.
    pub fn default_grid(&self) -> Result<Grid2> {
        let half = 3.6 * self.tau.max(self.sigma) + self.a.abs();
        let n = smooth_size((2.0 * half / (0.5 * self.sigma)).ceil() as usize);
        let axis = GridSpec::centered(n, 2.0 * half)?;
        Ok(Grid2::new(axis, axis))
    }

    /// Fails with `GridResolution` unless `4 sigma` spans at least eight
    /// samples on both axes and the ridge covers `|x1 + x2| <= 4 tau`.
    pub fn check_grid(&self, grid: &Grid2) -> Result<()> {
        if !(self.sigma > 0.0 && self.tau > 0.0) {
            return Err(Error::InvalidState(format!(
                "widths must be positive, got sigma = {}, tau = {}",
                self.sigma, self.tau
            )));
        }
        let dx = grid.axis1.dx().max(grid.axis2.dx());
        if 4.0 * self.sigma / dx < 8.0 {
            return Err(Error::GridResolution(format!(
                "step {dx:.4} resolves sigma = {} with {:.1} samples across 4 sigma, need 8",
                self.sigma,
                4.0 * self.sigma / dx
            )));
        }
        // on the ridge x1 = (s + a)/2, x2 = (s - a)/2
        let lo = (2.0 * grid.axis1.x_min - self.a).max(2.0 * grid.axis2.x_min + self.a);
        let hi = (2.0 * grid.axis1.x_max - self.a).min(2.0 * grid.axis2.x_max + self.a);
        if lo > -4.0 * self.tau || hi < 4.0 * self.tau {
            return Err(Error::GridResolution(format!(
                "the ridge covers x1 + x2 in [{lo:.2}, {hi:.2}], need [-{t:.2}, {t:.2}]",
                t = 4.0 * self.tau
            )));
        }
        Ok(())
    }
}

/// Samples the approximate EPR state on `grid`.
pub fn build_epr(params: &EprParams, grid: Grid2, constants: &Constants) -> Result<GridPureState2> {
    params.check_grid(&grid)?;
    let EprParams { a, sigma, tau, p0 } = *params;
    let hbar = constants.hbar;
    GridPureState2::from_fn(grid, |x1, x2| {
        let u = x1 - x2 - a;
        let s = x1 + x2;
        let amp = (-u * u / (4.0 * sigma * sigma) - s * s / (4.0 * tau * tau)).exp();
        Complex64::from_polar(amp, p0 * s / (2.0 * hbar))
    })
}

// ---------------------------------------------------------------------------
// Decomposition of the two momenta
// ---------------------------------------------------------------------------

/// `P^(k) = P_cl^(k) + P_nc^(k)` for both particles of a pure 2D state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Components2 {
    pub grid: Grid2,
    /// `hbar d arg psi / d x_k`; the labels are the coordinates `x_k` of each
    /// sample, row-major as in the state.
    pub classical: [ClassicalComponent; 2],
    /// `hbar d ln|psi| / d x_k`, the real profile with `P_nc^(k) psi = -i hbar (d_k |psi|/|psi|) psi`;
    /// zero on masked samples.
    pub nonclassical: [Vec<f64>; 2],
    pub covariances: PhaseSpaceCovariances,
    /// `|Cov P - Cov P_cl - Cov P_nc|` relative to `|Cov P|`, with
    /// `Cov P_nc` evaluated directly in position space.
    pub additivity_residual: f64,
    /// Largest density-weighted `|d_1 P_cl^(2) - d_2 P_cl^(1)|`, in units of
    /// `hbar / (dx1 dx2)`. Zero means `[P_nc^(1), P_nc^(2)] = 0`.
    pub mixed_partials_residual: f64,
}

/// Samples weighted at least this fraction of the peak enter the variation
/// and mixed-partial diagnostics, away from ratio noise in the tails.
const CORE_WEIGHT: f64 = 1e-8;

impl Components2 {
    /// Largest change of `P_nc^(k)` along the other particle's coordinate at
    /// a fixed `x_k`, over the core of the density.
    pub fn variation_across(&self, k: usize) -> f64 {
        let (r, c) = (self.grid.axis1.n_points, self.grid.axis2.n_points);
        let w = &self.classical[k].weights;
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let values = &self.nonclassical[k];
        let (outer, inner) = if k == 0 { (r, c) } else { (c, r) };
        let mut worst: f64 = 0.0;
        for a in 0..outer {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for b in 0..inner {
                let idx = if k == 0 { a * c + b } else { b * c + a };
                if w[idx] >= CORE_WEIGHT * wmax {
                    lo = lo.min(values[idx]);
                    hi = hi.max(values[idx]);
                }
            }
            if hi >= lo {
                worst = worst.max(hi - lo);
            }
        }
        worst
    }
}

pub fn nonclassical_components_2d(psi: &GridPureState2, constants: &Constants) -> Result<Components2> {
    let hbar = constants.hbar;
    let covariances = phase_space_covariances(psi, hbar)?;
    let g = *psi.grid();
    let (r, c) = (g.axis1.n_points, g.axis2.n_points);
    let amps = psi.amplitudes();
    let p = psi.density_values();
    let cell = g.cell();
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let retained: Vec<bool> = p
        .iter()
        .map(|v| *v >= tolerances::DENSITY_MASK * pmax && *v > 0.0)
        .collect();
    let d = [psi.partial(0), psi.partial(1)];
    let x1 = g.axis1.points();
    let x2 = g.axis2.points();
    let weights: Vec<f64> = p.iter().map(|v| v * cell).collect();

    let field = |k: usize, imaginary: bool| -> Vec<f64> {
        (0..p.len())
            .map(|idx| {
                if !retained[idx] {
                    return 0.0;
                }
                let z = amps[idx].conj() * d[k][idx];
                hbar * if imaginary { z.im } else { z.re } / p[idx]
            })
            .collect()
    };
    let make = |k: usize| {
        let labels: Vec<f64> = (0..p.len())
            .map(|idx| if k == 0 { x1[idx / c] } else { x2[idx % c] })
            .collect();
        ClassicalComponent::from_parts(
            Observable::P,
            Basis::Position,
            labels,
            field(k, true),
            weights.clone(),
            retained.clone(),
            covariances.mean_p[k],
        )
    };
    let classical = [make(0), make(1)];
    let nonclassical = [field(0, false), field(1, false)];

    let additivity_residual = (&covariances.cov_p - &covariances.cov_p_cl - &covariances.cov_p_nc_direct).norm()
        / covariances.cov_p.norm().max(f64::MIN_POSITIVE);

    // d_j P_cl^(k) = hbar [Im(d_j psi* d_k psi + psi* d_jk psi)/p - Im(psi* d_k psi) 2 Re(psi* d_j psi)/p^2]
    let (l1, l2) = (g.axis1.length(), g.axis2.length());
    let d12 = spectral::grid2::partial(&d[0], r, c, 1, l2);
    let d21 = spectral::grid2::partial(&d[1], r, c, 0, l1);
    let curl = |j: usize, k: usize, djk: &[Complex64], idx: usize| {
        let a = amps[idx];
        let num = (d[j][idx].conj() * d[k][idx] + a.conj() * djk[idx]).im / p[idx];
        let grad = (a.conj() * d[k][idx]).im * 2.0 * (a.conj() * d[j][idx]).re / (p[idx] * p[idx]);
        hbar * (num - grad)
    };
    let scale = hbar / (g.axis1.dx() * g.axis2.dx());
    let mut mixed: f64 = 0.0;
    for idx in 0..p.len() {
        if p[idx] >= CORE_WEIGHT * pmax {
            let diff = curl(0, 1, &d12, idx) - curl(1, 0, &d21, idx);
            mixed = mixed.max(diff.abs() * p[idx] / pmax / scale);
        }
    }

    Ok(Components2 {
        grid: g,
        classical,
        nonclassical,
        covariances,
        additivity_residual,
        mixed_partials_residual: mixed,
    })
}

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub r_pearson: f64,
    pub r_fisher: f64,
}

/// `r_P(P_nc) + r_F(X) = 0` with the Pearson coefficients of `X` and `P`
/// alongside; for Gaussian states `r_P(X) + r_P(P) = 0` as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// `r_P(P_nc)` and `r_F(X)`, the pair entering the relation.
    pub relation: CorrelationPair,
    /// `r_P(X)` and `r_F(X)`.
    pub position: CorrelationPair,
    pub r_pearson_momentum: f64,
    /// `|r_P(P_nc) + r_F(X)|`.
    pub residual: f64,
    /// `|r_P(X) + r_P(P)|`, zero for Gaussian states.
    pub gaussian_residual: f64,
}

fn coefficient(m: &nalgebra::DMatrix<f64>) -> f64 {
    let denom = (m[(0, 0)] * m[(1, 1)]).sqrt();
    if denom > 0.0 {
        (m[(0, 1)] / denom).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

pub fn correlation_relation(psi: &GridPureState2, constants: &Constants) -> Result<CorrelationReport> {
    let cov = phase_space_covariances(psi, constants.hbar)?;
    let r_p_nc = coefficient(&cov.cov_p_nc);
    let r_f_x = coefficient(&cov.fisher_cov);
    let r_p_x = coefficient(&cov.cov_x);
    let r_p_p = coefficient(&cov.cov_p);
    Ok(CorrelationReport {
        relation: CorrelationPair {
            r_pearson: r_p_nc,
            r_fisher: r_f_x,
        },
        position: CorrelationPair {
            r_pearson: r_p_x,
            r_fisher: r_f_x,
        },
        r_pearson_momentum: r_p_p,
        residual: (r_p_nc + r_f_x).abs(),
        gaussian_residual: (r_p_x + r_p_p).abs(),
    })
}

// ---------------------------------------------------------------------------
// Collapse
// ---------------------------------------------------------------------------

/// State of particle 1 after a measurement on particle 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub state: GridPureState,
    /// `P_cl^(1)` of the collapsed state.
    pub classical: ClassicalComponent,
    /// Marginal density of the outcome relative to its peak.
    pub relative_density: f64,
}

fn collapse_from(amps: Vec<Complex64>, grid: GridSpec, relative: f64, constants: &Constants) -> Result<Collapse> {
    if !(relative >= tolerances::DENSITY_MASK) {
        return Err(Error::VanishingDensity { masked_fraction: 1.0 });
    }
    let state = GridPureState::from_unnormalized(grid, amps)?;
    let classical = classical_estimate(&state, Basis::Position, Observable::P, constants)?;
    Ok(Collapse {
        state,
        classical,
        relative_density: relative,
    })
}

/// Substitutes `x2 = x` (Fourier interpolation along `x2`) and renormalizes.
pub fn collapse_position(psi: &GridPureState2, x: f64, constants: &Constants) -> Result<Collapse> {
    let g = psi.grid();
    let (r, c) = (g.axis1.n_points, g.axis2.n_points);
    let amps = psi.amplitudes();
    let mut slice = Vec::with_capacity(r);
    let mut marginal = vec![0.0; c];
    for i in 0..r {
        let row = &amps[i * c..(i + 1) * c];
        for (m, a) in marginal.iter_mut().zip(row) {
            *m += a.norm_sqr();
        }
        let spec = spectral::spectrum(row);
        slice.push(spectral::interpolate_spectrum(
            &spec,
            g.axis2.x_min,
            g.axis2.length(),
            x,
        ));
    }
    let peak = marginal.iter().cloned().fold(0.0, f64::max);
    let at: f64 = slice.iter().map(|v| v.norm_sqr()).sum();
    collapse_from(slice, g.axis1, at / peak, constants)
}

/// Transforms `x2` to momentum at `p` by direct quadrature and renormalizes.
pub fn collapse_momentum(psi: &GridPureState2, p: f64, constants: &Constants) -> Result<Collapse> {
    let hbar = constants.hbar;
    let g = psi.grid();
    let (r, c) = (g.axis1.n_points, g.axis2.n_points);
    let amps = psi.amplitudes();
    let x2 = g.axis2.points();
    let kernel: Vec<Complex64> = x2.iter().map(|x| Complex64::from_polar(1.0, -p * x / hbar)).collect();
    let slice: Vec<Complex64> = (0..r)
        .map(|i| amps[i * c..(i + 1) * c].iter().zip(&kernel).map(|(a, k)| a * k).sum())
        .collect();
    // momentum marginal of particle 2 on the lattice, for the threshold
    let mut work = amps.to_vec();
    spectral::grid2::fft_rows(&mut work, c, false);
    let mut marginal = vec![0.0; c];
    for i in 0..r {
        for (m, a) in marginal.iter_mut().zip(&work[i * c..(i + 1) * c]) {
            *m += a.norm_sqr();
        }
    }
    let peak = marginal.iter().cloned().fold(0.0, f64::max);
    let at: f64 = slice.iter().map(|v| v.norm_sqr()).sum();
    collapse_from(slice, g.axis1, at / peak, constants)
}

// ---------------------------------------------------------------------------
// Single-particle view
// ---------------------------------------------------------------------------

/// Particle-1 entries of the two-particle decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSummary {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub var_p: f64,
    pub var_p_cl: f64,
    pub var_p_nc: f64,
    /// `[FCov X]_11`.
    pub fisher_var_x: f64,
}

pub fn particle1_summary(psi: &GridPureState2, constants: &Constants) -> Result<ParticleSummary> {
    let cov = phase_space_covariances(psi, constants.hbar)?;
    Ok(ParticleSummary {
        mean_x: cov.mean_x[0],
        var_x: cov.cov_x[(0, 0)],
        mean_p: cov.mean_p[0],
        var_p: cov.cov_p[(0, 0)],
        var_p_cl: cov.cov_p_cl[(0, 0)],
        var_p_nc: cov.cov_p_nc[(0, 0)],
        fisher_var_x: cov.fisher_cov[(0, 0)],
    })
}

/// Boosts particle 2 by `k` (multiplies by `exp(i k x2 / hbar)`).
pub fn boost_particle2(psi: &GridPureState2, k: f64, constants: &Constants) -> Result<GridPureState2> {
    let hbar = constants.hbar;
    psi.map_particle2(|x2, a| a * Complex64::from_polar(1.0, k * x2 / hbar))
}
