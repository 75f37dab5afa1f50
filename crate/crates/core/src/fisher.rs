//! Fisher lengths, Fisher covariance matrices, entropies and collision
//! lengths of probability densities.
//!
//! The translation Fisher information of a line density is
//! `int p'^2 / p dx`; the Fisher length is its inverse square root. The
//! integrand is masked where `p` falls below [`tolerances::DENSITY_MASK`] of
//! its peak.
//!
//! For sampled densities the integrand is evaluated as `4 (sqrt p)'^2`,
//! which equals `p'^2 / p` but stays bounded where a discontinuity rings
//! into the far tails.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;
use crate::state::{CircleGrid, Grid2, GridMixedState, GridSpec, ProbabilityDensity, Support};
use crate::tolerances;

/// How the continuum value of a Fisher length relates to the computed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceFlag {
    Finite,
    /// Refinement drives the computed length to zero (discontinuous density).
    ZeroByDiscontinuity,
    /// The density is uniform on the circle; the length is infinite.
    InfiniteByUniformity,
}

/// Fisher length at successive grid refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub n_points: Vec<usize>,
    pub lengths: Vec<f64>,
    /// `lengths[i + 1] / lengths[i]`.
    pub ratios: Vec<f64>,
    /// All ratios below [`tolerances::DISCONTINUITY_RATIO`].
    pub vanishing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMetrics {
    /// `int p (d ln p)^2`; meaningful only when `flag` is `Finite`.
    pub fisher_information: f64,
    pub flag: DivergenceFlag,
    /// Fraction of probability mass on masked samples.
    pub masked_mass: f64,
    pub refinement: Option<RefinementStudy>,
}

impl FisherMetrics {
    fn finite(info: f64, masked_mass: f64) -> Self {
        FisherMetrics {
            fisher_information: info,
            flag: DivergenceFlag::Finite,
            masked_mass,
            refinement: None,
        }
    }

    /// Fisher length, `None` when flagged as zero or infinite.
    pub fn length(&self) -> Option<f64> {
        match self.flag {
            DivergenceFlag::Finite => Some(self.fisher_information.powf(-0.5)),
            _ => None,
        }
    }

    /// Length computed on the finest grid, even if flagged.
    pub fn raw_length(&self) -> f64 {
        self.fisher_information.powf(-0.5)
    }
}

/// `sum p'^2 / p * cell` over samples with `p` above the mask, and the masked mass.
pub(crate) fn masked_information(values: &[f64], derivative: &[f64], cell: f64) -> (f64, f64) {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let floor = tolerances::DENSITY_MASK * max;
    let mut info = 0.0;
    let mut masked = 0.0;
    let mut total = 0.0;
    for (p, d) in values.iter().zip(derivative) {
        total += p;
        if *p >= floor && *p > 0.0 {
            info += d * d / p;
        } else {
            masked += p.max(0.0);
        }
    }
    (info * cell, if total > 0.0 { masked / total } else { 0.0 })
}

/// `int 4 (sqrt p)'^2` with the same masking as [`masked_information`].
fn root_information(values: &[f64], period: f64, cell: f64) -> (f64, f64) {
    let root: Vec<f64> = values.iter().map(|p| p.max(0.0).sqrt()).collect();
    let d = spectral::derivative_real(&root, period);
    let grad: Vec<f64> = root.iter().zip(&d).map(|(r, v)| 2.0 * r * v).collect();
    masked_information(values, &grad, cell)
}

/// Fisher length of a density on a line or circle grid.
pub fn fisher_length(density: &ProbabilityDensity) -> Result<FisherMetrics> {
    match &density.support {
        Support::Line(g) => {
            let (info, masked) = root_information(&density.values, g.length(), g.dx());
            Ok(FisherMetrics::finite(info, masked))
        }
        Support::Circle(_) => fisher_length_periodic(density),
        Support::Discrete => Err(Error::Unsupported("Fisher length of a discrete distribution")),
    }
}

/// Fisher length of a circle density. Uniform densities are flagged
/// infinite.
pub fn fisher_length_periodic(density: &ProbabilityDensity) -> Result<FisherMetrics> {
    if !matches!(density.support, Support::Circle(_)) {
        return Err(Error::Unsupported("periodic Fisher length of a non-circle density"));
    }
    let (info, masked) = root_information(&density.values, 2.0 * PI, density.cell());
    Ok(periodic_metrics(info, masked))
}

pub(crate) fn periodic_metrics(info: f64, masked: f64) -> FisherMetrics {
    let mut m = FisherMetrics::finite(info, masked);
    if info * (2.0 * PI).powi(2) < tolerances::UNIFORM_INFORMATION {
        m.flag = DivergenceFlag::InfiniteByUniformity;
    }
    m
}

/// Recomputes a Fisher length on `grid`, its refinement and its double
/// refinement, and flags the continuum value as zero when the computed
/// length keeps shrinking.
pub fn refinement_study(
    grid: &GridSpec,
    build: impl Fn(&GridSpec) -> Result<ProbabilityDensity>,
) -> Result<RefinementStudy> {
    let grids = [*grid, grid.refined(), grid.refined().refined()];
    let mut lengths = Vec::with_capacity(3);
    for g in &grids {
        lengths.push(fisher_length(&build(g)?)?.raw_length());
    }
    Ok(study_from(grids.iter().map(|g| g.n_points).collect(), lengths))
}

pub(crate) fn study_from(n_points: Vec<usize>, lengths: Vec<f64>) -> RefinementStudy {
    let ratios: Vec<f64> = lengths.windows(2).map(|w| w[1] / w[0]).collect();
    let vanishing = ratios.iter().all(|r| *r < tolerances::DISCONTINUITY_RATIO);
    RefinementStudy {
        n_points,
        lengths,
        ratios,
        vanishing,
    }
}

/// Fisher length on the finest of three refinements, flagged
/// `ZeroByDiscontinuity` when the refinement study shows it vanishing.
pub fn fisher_length_refined(
    grid: &GridSpec,
    build: impl Fn(&GridSpec) -> Result<ProbabilityDensity>,
) -> Result<FisherMetrics> {
    let finest = grid.refined().refined();
    let mut metrics = fisher_length(&build(&finest)?)?;
    let study = refinement_study(grid, build)?;
    if study.vanishing {
        metrics.flag = DivergenceFlag::ZeroByDiscontinuity;
    }
    metrics.refinement = Some(study);
    Ok(metrics)
}

/// Fisher length of the position density of a density matrix, from the
/// commutator form `-(1/hbar^2) int <x|P rho - rho P|x>^2 / <x|rho|x>`.
pub fn fisher_length_mixed(state: &GridMixedState) -> Result<FisherMetrics> {
    let d = state.diagonal_row_derivative();
    // <x|P rho - rho P|x> = -2 i hbar Re D
    let grad: Vec<f64> = d.iter().map(|v| 2.0 * v.re).collect();
    let p = state.density_values();
    let (info, masked) = masked_information(&p, &grad, state.grid().dx());
    if masked > tolerances::MAX_MASKED_FRACTION {
        return Err(Error::VanishingDensity {
            masked_fraction: masked,
        });
    }
    Ok(FisherMetrics::finite(info, masked))
}

/// Fourier coefficients `c_m` of circle samples, so that
/// `p(phi) = sum_m c_m e^{i m phi}` (FFT order).
fn circle_coefficients(grid: &CircleGrid, values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut spec: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    spectral::fft_forward(&mut spec);
    (0..n)
        .map(|m| {
            let k = spectral::mode_index(m, n);
            let nyq = n.is_multiple_of(2) && m == n / 2;
            let c = spec[m] / n as f64 * Complex64::from_polar(1.0, -(k as f64) * grid.offset);
            if nyq {
                c * 0.5
            } else {
                c
            }
        })
        .collect()
}

/// `Var_theta Phi = int_{theta - pi}^{theta + pi} (phi - theta)^2 p(phi) dphi`,
/// integrated exactly against the trigonometric interpolant of the samples.
pub fn phase_variance(density: &ProbabilityDensity, theta: f64) -> Result<f64> {
    let grid = match &density.support {
        Support::Circle(c) => *c,
        _ => return Err(Error::Unsupported("phase variance of a non-circle density")),
    };
    let n = density.values.len();
    let coef = circle_coefficients(&grid, &density.values);
    let mut acc = 0.0;
    for (m, c) in coef.iter().enumerate() {
        let k = spectral::mode_index(m, n);
        let nyq = n.is_multiple_of(2) && m == n / 2;
        // int_{-pi}^{pi} u^2 e^{i k u} du
        let moment = if k == 0 {
            2.0 * PI.powi(3) / 3.0
        } else {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            4.0 * PI * sign / (k * k) as f64
        };
        let term = c * Complex64::from_polar(1.0, k as f64 * theta) * moment;
        // Nyquist coefficient stands for both +-n/2
        acc += if nyq { 2.0 * term.re } else { term.re };
    }
    Ok(acc)
}

/// Trigonometric interpolant of circle samples at `phi`.
pub fn circle_value(density: &ProbabilityDensity, phi: f64) -> Result<f64> {
    let grid = match &density.support {
        Support::Circle(c) => *c,
        _ => return Err(Error::Unsupported("circle interpolation of a non-circle density")),
    };
    let c: Vec<Complex64> = density.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    Ok(spectral::interpolate(&c, grid.offset, 2.0 * PI, phi).re)
}

/// Circular mean direction `arg int p e^{i phi}`.
pub fn circular_mean(density: &ProbabilityDensity) -> f64 {
    let cell = density.cell();
    let z: Complex64 = density
        .abscissae()
        .iter()
        .zip(&density.values)
        .map(|(phi, p)| Complex64::from_polar(p * cell, *phi))
        .sum();
    z.arg()
}

/// Modified Cramer-Rao check on the circle: returns
/// `(Delta_theta Phi, |1 - 2 pi p(theta + pi)| delta Phi)`.
/// The right side is zero when the density is uniform.
pub fn modified_cramer_rao(density: &ProbabilityDensity, theta: f64) -> Result<(f64, f64)> {
    let lhs = phase_variance(density, theta)?.max(0.0).sqrt();
    let metrics = fisher_length_periodic(density)?;
    let factor = (1.0 - 2.0 * PI * circle_value(density, theta + PI)?).abs();
    let rhs = match metrics.length() {
        Some(l) => factor * l,
        None => 0.0,
    };
    Ok((lhs, rhs))
}

/// Differential entropy `-int p ln p` (or the Shannon entropy for discrete
/// support).
pub fn entropy(density: &ProbabilityDensity) -> f64 {
    let cell = density.cell();
    -density
        .values
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
        * cell
}

/// Collision length `1 / sum p_j^2` of a discrete distribution.
pub fn collision_length(probabilities: &[f64]) -> f64 {
    1.0 / probabilities.iter().map(|p| p * p).sum::<f64>()
}

/// `(2 pi e)^{-1/2} e^S`, which bounds the Fisher length from above.
pub fn entropy_length(density: &ProbabilityDensity) -> f64 {
    entropy(density).exp() / (2.0 * PI * E).sqrt()
}

// ---------------------------------------------------------------------------
// Multivariate
// ---------------------------------------------------------------------------

/// Nonnegative samples of a density on a [`Grid2`], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density2 {
    pub grid: Grid2,
    pub values: Vec<f64>,
}

impl Density2 {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidState("density must be nonnegative".into()));
        }
        let total: f64 = values.iter().sum::<f64>() * grid.cell();
        if !(total > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(Density2 {
            grid,
            values: values.iter().map(|v| v / total).collect(),
        })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let x1 = grid.axis1.points();
        let x2 = grid.axis2.points();
        let mut v = Vec::with_capacity(grid.len());
        for a in &x1 {
            for b in &x2 {
                v.push(f(*a, *b));
            }
        }
        Self::new(grid, v)
    }

    pub fn mean(&self) -> [f64; 2] {
        let x1 = self.grid.axis1.points();
        let x2 = self.grid.axis2.points();
        let c = x2.len();
        let mut m = [0.0; 2];
        for (idx, p) in self.values.iter().enumerate() {
            m[0] += x1[idx / c] * p;
            m[1] += x2[idx % c] * p;
        }
        let cell = self.grid.cell();
        [m[0] * cell, m[1] * cell]
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let x1 = self.grid.axis1.points();
        let x2 = self.grid.axis2.points();
        let c = x2.len();
        let m = self.mean();
        let mut cov = DMatrix::zeros(2, 2);
        for (idx, p) in self.values.iter().enumerate() {
            let u = [x1[idx / c] - m[0], x2[idx % c] - m[1]];
            for i in 0..2 {
                for j in 0..2 {
                    cov[(i, j)] += u[i] * u[j] * p;
                }
            }
        }
        cov * self.grid.cell()
    }
}

/// Fisher information matrix `sum grad p grad p^T / p * cell` from gradient
/// components, with masking.
pub(crate) fn information_matrix(values: &[f64], gradients: &[Vec<f64>], cell: f64) -> (DMatrix<f64>, f64) {
    let dim = gradients.len();
    let max = values.iter().cloned().fold(0.0, f64::max);
    let floor = tolerances::DENSITY_MASK * max;
    let mut j = DMatrix::zeros(dim, dim);
    let mut masked = 0.0;
    let mut total = 0.0;
    for (idx, p) in values.iter().enumerate() {
        total += p;
        if *p >= floor && *p > 0.0 {
            for a in 0..dim {
                for b in 0..dim {
                    j[(a, b)] += gradients[a][idx] * gradients[b][idx] / p;
                }
            }
        } else {
            masked += p.max(0.0);
        }
    }
    (j * cell, if total > 0.0 { masked / total } else { 0.0 })
}

/// Inverse of a symmetric information matrix, refusing ill-conditioned ones.
pub(crate) fn invert_information(j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = j.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition < 1e12) {
        return Err(Error::SingularInformation { condition });
    }
    let inv = j
        .clone()
        .try_inverse()
        .ok_or(Error::SingularInformation { condition })?;
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Fisher covariance matrix `{int p grad ln p grad ln p^T}^{-1}` of a 2D density.
pub fn fisher_covariance(density: &Density2) -> Result<DMatrix<f64>> {
    let g = density.grid;
    let (r, c) = (g.axis1.n_points, g.axis2.n_points);
    let d1 = spectral::grid2::partial_real(&density.values, r, c, 0, g.axis1.length());
    let d2 = spectral::grid2::partial_real(&density.values, r, c, 1, g.axis2.length());
    let (j, _) = information_matrix(&density.values, &[d1, d2], g.cell());
    invert_information(&j)
}

/// One-dimensional Fisher covariance (a 1x1 matrix) of a line density.
pub fn fisher_covariance_line(density: &ProbabilityDensity) -> Result<DMatrix<f64>> {
    let g = match &density.support {
        Support::Line(g) => *g,
        _ => return Err(Error::Unsupported("line Fisher covariance of a non-line density")),
    };
    let d = spectral::derivative_real(&density.values, g.length());
    let (j, _) = information_matrix(&density.values, &[d], g.dx());
    invert_information(&j)
}

// ---------------------------------------------------------------------------
// Diffusion
// ---------------------------------------------------------------------------

/// Entropy and Fisher length along a spectral solution of
/// `dp/dt = gamma p'' + drift p'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRun {
    pub gamma: f64,
    pub drift: f64,
    pub dt: f64,
    pub steps: usize,
    /// `S(t_k)` for `k = 0..=steps`.
    pub entropy: Vec<f64>,
    pub fisher_lengths: Vec<f64>,
    /// Finite-difference `dS/dt` at each time (second order throughout).
    pub rates: Vec<f64>,
    /// `gamma / deltaX(t_k)^2`.
    pub predicted: Vec<f64>,
}

impl DiffusionRun {
    /// Largest `|rate / predicted - 1|` over the first `count` samples.
    pub fn max_relative_error(&self, count: usize) -> f64 {
        self.rates
            .iter()
            .zip(&self.predicted)
            .take(count)
            .map(|(r, p)| (r / p - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn diffusion_entropy_rate(
    density: &ProbabilityDensity,
    gamma: f64,
    drift: f64,
    dt: f64,
    steps: usize,
) -> Result<DiffusionRun> {
    let g = match &density.support {
        Support::Line(g) => *g,
        _ => return Err(Error::Unsupported("diffusion of a non-line density")),
    };
    if steps < 2 || !(dt > 0.0) || gamma < 0.0 {
        return Err(Error::InvalidState("need steps >= 2, dt > 0 and gamma >= 0".into()));
    }
    let n = g.n_points;
    let k = spectral::wavenumbers(n, g.length());
    let mut spec: Vec<Complex64> = density.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    spectral::fft_forward(&mut spec);
    let mut entropy_trace = Vec::with_capacity(steps + 1);
    let mut lengths = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let mut buf: Vec<Complex64> = spec
            .iter()
            .zip(&k)
            .enumerate()
            .map(|(m, (c, kk))| {
                if n % 2 == 0 && m == n / 2 {
                    // keep the Nyquist mode real
                    c * (-gamma * kk * kk * t).exp() * (drift * kk * t).cos()
                } else {
                    c * Complex64::new(-gamma * kk * kk * t, drift * kk * t).exp()
                }
            })
            .collect();
        spectral::fft_inverse(&mut buf);
        let values: Vec<f64> = buf.iter().map(|v| v.re.max(0.0)).collect();
        let p = ProbabilityDensity {
            support: Support::Line(g),
            values,
        };
        entropy_trace.push(entropy(&p));
        lengths.push(fisher_length(&p)?.raw_length());
    }
    if gamma > 0.0 {
        for (step, w) in entropy_trace.windows(2).enumerate() {
            let decrease = w[0] - w[1];
            if decrease > 1e-12 * w[0].abs().max(1.0) {
                return Err(Error::UnstableStep {
                    step: step + 1,
                    decrease,
                });
            }
        }
    }
    let s = &entropy_trace;
    let last = steps;
    let rates = (0..=steps)
        .map(|i| {
            if i == 0 {
                (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dt)
            } else if i == last {
                (3.0 * s[i] - 4.0 * s[i - 1] + s[i - 2]) / (2.0 * dt)
            } else {
                (s[i + 1] - s[i - 1]) / (2.0 * dt)
            }
        })
        .collect();
    let predicted = lengths.iter().map(|l| gamma / (l * l)).collect();
    Ok(DiffusionRun {
        gamma,
        drift,
        dt,
        steps,
        entropy: entropy_trace,
        fisher_lengths: lengths,
        rates,
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::GridPureState;

    fn line() -> GridSpec {
        GridSpec::centered(1024, 60.0).unwrap()
    }

    fn gaussian(g: GridSpec, mu: f64, s: f64) -> ProbabilityDensity {
        ProbabilityDensity::line_from_fn(g, |x| (-(x - mu).powi(2) / (2.0 * s * s)).exp()).unwrap()
    }

    #[test]
    fn gaussian_fisher_length_is_sigma() {
        for s in [0.5, 1.0, 2.3] {
            let m = fisher_length(&gaussian(line(), 0.4, s)).unwrap();
            assert!((m.length().unwrap() - s).abs() < 1e-10 * s);
        }
    }

    #[test]
    fn mixture_is_below_standard_deviation() {
        let a = 4.0;
        let p = ProbabilityDensity::line_from_fn(line(), |x| {
            (-(x - a).powi(2) / 2.0).exp() + (-(x + a).powi(2) / 2.0).exp()
        })
        .unwrap();
        let dx = fisher_length(&p).unwrap().length().unwrap();
        // second-moment oracle: Var = sigma^2 + a^2
        assert!((p.variance() - (1.0 + a * a)).abs() < 1e-10);
        assert!(dx < p.variance().sqrt());
    }

    #[test]
    fn half_line_gaussian_is_flagged() {
        let g = GridSpec::centered(256, 40.0).unwrap();
        let m = fisher_length_refined(&g, |g| {
            ProbabilityDensity::line_from_fn(*g, |x| if x >= 0.0 { (-x * x / 2.0).exp() } else { 0.0 })
        })
        .unwrap();
        assert_eq!(m.flag, DivergenceFlag::ZeroByDiscontinuity, "{:?}", m.refinement);
        let study = m.refinement.unwrap();
        assert!(study.lengths.windows(2).all(|w| w[1] < w[0]));
        let smooth = fisher_length_refined(&g, |g| Ok(gaussian(*g, 0.0, 1.0))).unwrap();
        assert_eq!(smooth.flag, DivergenceFlag::Finite);
    }

    #[test]
    fn uniform_circle_density_is_infinite() {
        let p = ProbabilityDensity::circle_from_fn(CircleGrid::new(256), |_| 1.0).unwrap();
        let m = fisher_length_periodic(&p).unwrap();
        assert_eq!(m.flag, DivergenceFlag::InfiniteByUniformity);
        assert!(m.length().is_none());
        for theta in [0.0, 1.0, -2.5] {
            let v = phase_variance(&p, theta).unwrap();
            assert!((v - PI * PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn von_mises_satisfies_modified_cramer_rao() {
        let kappa = 2.0;
        let mu = 0.7;
        let p =
            ProbabilityDensity::circle_from_fn(CircleGrid::new(512), |phi| (kappa * (phi - mu).cos()).exp()).unwrap();
        let m = fisher_length_periodic(&p).unwrap();
        assert_eq!(m.flag, DivergenceFlag::Finite);
        let (lhs, rhs) = modified_cramer_rao(&p, mu).unwrap();
        assert!(lhs >= rhs);
        assert!(phase_variance(&p, mu).unwrap() <= PI * PI);
    }

    #[test]
    fn narrow_wrapped_gaussian_nearly_saturates() {
        let s = 0.3;
        let theta = 1.0;
        let p = ProbabilityDensity::circle_from_fn(CircleGrid::new(1024), |phi| {
            (-3..=3)
                .map(|w| (-(phi - theta + 2.0 * PI * w as f64).powi(2) / (2.0 * s * s)).exp())
                .sum()
        })
        .unwrap();
        let (lhs, rhs) = modified_cramer_rao(&p, theta).unwrap();
        assert!(lhs >= rhs - 1e-10, "{lhs} {rhs}");
        assert!((lhs - rhs).abs() < 1e-3);
    }

    #[test]
    fn narrowing_bump_has_shrinking_phase_variance() {
        let vals: Vec<f64> = [0.5, 0.2, 0.05]
            .iter()
            .map(|s| {
                let p = ProbabilityDensity::circle_from_fn(CircleGrid::new(2048), |phi| {
                    (-(phi - 2.0f64).powi(2) / (2.0 * s * s)).exp()
                })
                .unwrap();
                phase_variance(&p, 2.0).unwrap()
            })
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] < 1e-2);
    }

    #[test]
    fn mixed_state_fisher_length_matches_density_path() {
        let g = GridSpec::centered(256, 30.0).unwrap();
        let a = GridPureState::gaussian(g, -2.0, 1.0, 0.5).unwrap();
        let b = GridPureState::gaussian(g, 2.5, 0.8, -1.0).unwrap();
        let rho = crate::state::GridMixedState::from_ensemble(&[(0.4, &a), (0.6, &b)]).unwrap();
        let m1 = fisher_length_mixed(&rho).unwrap().length().unwrap();
        let m2 = fisher_length(&rho.density()).unwrap().length().unwrap();
        assert!((m1 / m2 - 1.0).abs() < 1e-8, "{m1} {m2}");
        let pure = crate::state::GridMixedState::from_pure(&a);
        assert!((fisher_length_mixed(&pure).unwrap().length().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn collision_length_extremes() {
        assert_eq!(collision_length(&[1.0, 0.0, 0.0]), 1.0);
        assert!((collision_length(&[0.25; 4]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_entropy_closed_form() {
        let s = 1.7;
        let h = entropy(&gaussian(line(), 0.0, s));
        assert!((h - 0.5 * (2.0 * PI * E * s * s).ln()).abs() < 1e-10);
    }

    #[test]
    fn fisher_covariance_of_correlated_gaussian() {
        let g = Grid2::new(
            GridSpec::centered(128, 24.0).unwrap(),
            GridSpec::centered(128, 24.0).unwrap(),
        );
        let (s11, s22, s12) = (1.5, 0.8, 0.6);
        let det = s11 * s22 - s12 * s12;
        let d = Density2::from_fn(g, |x, y| {
            (-(s22 * x * x - 2.0 * s12 * x * y + s11 * y * y) / (2.0 * det)).exp()
        })
        .unwrap();
        let f = fisher_covariance(&d).unwrap();
        assert!((f[(0, 0)] - s11).abs() < 1e-8);
        assert!((f[(1, 1)] - s22).abs() < 1e-8);
        assert!((f[(0, 1)] - s12).abs() < 1e-8);
        let cov = d.covariance();
        assert!((cov[(0, 1)] - s12).abs() < 1e-8);
    }

    #[test]
    fn ring_density_has_strict_cramer_rao_gap() {
        let g = Grid2::new(
            GridSpec::centered(128, 16.0).unwrap(),
            GridSpec::centered(128, 16.0).unwrap(),
        );
        let d = Density2::from_fn(g, |x, y| {
            let r = (x * x + y * y).sqrt();
            (-(r - 3.0).powi(2) / (2.0 * 0.5 * 0.5)).exp()
        })
        .unwrap();
        let gap = d.covariance() - fisher_covariance(&d).unwrap();
        let eig = gap.symmetric_eigenvalues();
        assert!(eig.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn one_by_one_path_agrees() {
        let p = ProbabilityDensity::line_from_fn(line(), |x| {
            (-(x - 1.0).powi(2) / 2.0).exp() + 0.3 * (-(x + 2.0).powi(2)).exp()
        })
        .unwrap();
        let f = fisher_covariance_line(&p).unwrap();
        let l = fisher_length(&p).unwrap().length().unwrap();
        assert!((f[(0, 0)] - l * l).abs() < 1e-10 * l * l);
    }

    #[test]
    fn singular_information_is_reported() {
        let g = Grid2::new(
            GridSpec::centered(32, 10.0).unwrap(),
            GridSpec::centered(32, 10.0).unwrap(),
        );
        // constant along axis 2: no information in that direction
        let d = Density2::from_fn(g, |x, _| (-x * x).exp()).unwrap();
        assert!(matches!(fisher_covariance(&d), Err(Error::SingularInformation { .. })));
    }

    #[test]
    fn de_bruijn_rate_for_gaussian() {
        let s = 1.0;
        let gamma = 1e-3;
        let run = diffusion_entropy_rate(&gaussian(line(), 0.0, s), gamma, 0.0, 1.0, 10).unwrap();
        // analytic: dS/dt = gamma / (s^2 + 2 gamma t)
        assert!((run.rates[0] / (gamma / (s * s)) - 1.0).abs() < 1e-2);
        assert!(run.max_relative_error(11) < 1e-2);
    }

    #[test]
    fn drift_only_keeps_entropy() {
        let run = diffusion_entropy_rate(&gaussian(line(), 0.0, 1.0), 0.0, 0.7, 0.5, 10).unwrap();
        let s0 = run.entropy[0];
        assert!(run.entropy.iter().all(|s| (s - s0).abs() < 1e-8));
    }

    #[test]
    fn bimodal_rate_tracks_fisher_length() {
        let p = ProbabilityDensity::line_from_fn(line(), |x| {
            (-(x - 2.0).powi(2) / 2.0).exp() + 0.6 * (-(x + 2.0).powi(2) / 1.0).exp()
        })
        .unwrap();
        let run = diffusion_entropy_rate(&p, 1e-2, 0.0, 0.5, 20).unwrap();
        assert!(run.max_relative_error(21) < 2e-2);
    }

    #[test]
    fn scaling_covariance() {
        let base = fisher_length(&gaussian(line(), 0.0, 1.0)).unwrap().length().unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let g = GridSpec::centered(1024, 60.0 * lambda).unwrap();
            let p = ProbabilityDensity::line_from_fn(g, |x| (-(x / lambda).powi(2) / 2.0).exp()).unwrap();
            let l = fisher_length(&p).unwrap().length().unwrap();
            assert!((l - lambda * base).abs() < 1e-10 * lambda);
        }
    }
}
