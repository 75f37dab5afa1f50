//! Quantum states on uniform grids, circles, Fock spaces and finite Hilbert
//! spaces.
//!
//! Grid wavefunctions are normalized with the cell measure, `sum |psi_k|^2 dx
//! = 1`. The momentum representation follows `P = -i hbar d/dx`, so a plane
//! wave `exp(i k x)` has momentum `hbar k`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;
use crate::tolerances;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Physical constants. Natural units by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub moment_of_inertia: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            moment_of_inertia: 1.0,
        }
    }
}

impl Constants {
    pub fn new(hbar: f64, mass: f64, omega: f64, moment_of_inertia: f64) -> Result<Self> {
        for (name, v) in [
            ("hbar", hbar),
            ("mass", mass),
            ("omega", omega),
            ("moment_of_inertia", moment_of_inertia),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidState(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Constants {
            hbar,
            mass,
            omega,
            moment_of_inertia,
        })
    }

    pub fn with_hbar(hbar: f64) -> Self {
        Constants {
            hbar,
            ..Constants::default()
        }
    }
}

/// Uniform periodic grid `x_k = x_min + k dx`, `k = 0..n`, `dx = (x_max - x_min)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and at least 8, got {n_points}"
            )));
        }
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(GridSpec { n_points, x_min, x_max })
    }

    /// Grid of `n_points` centred on zero with total length `length`.
    pub fn centered(n_points: usize, length: f64) -> Result<Self> {
        GridSpec::new(n_points, -length / 2.0, length / 2.0)
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    /// Spacing of the conjugate momentum lattice, `2 pi hbar / (n dx)`.
    pub fn momentum_spacing(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / self.length()
    }

    /// The conjugate momentum lattice in ascending order, as a grid:
    /// `p_m = m dp` for `m = -n/2 .. n/2`.
    pub fn momentum_grid(&self, hbar: f64) -> GridSpec {
        let dp = self.momentum_spacing(hbar);
        let half = (self.n_points / 2) as f64;
        GridSpec {
            n_points: self.n_points,
            x_min: -half * dp,
            x_max: half * dp,
        }
    }

    /// Same box with twice as many points.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            n_points: 2 * self.n_points,
            ..*self
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::DimensionMismatch {
                expected: self.n_points,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Uniform grid on the circle, `phi_k = offset + 2 pi k / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleGrid {
    pub n_points: usize,
    pub offset: f64,
}

impl CircleGrid {
    pub fn new(n_points: usize) -> Self {
        CircleGrid { n_points, offset: 0.0 }
    }

    /// Grid shifted by half a cell; never samples `phi = 0` or `phi = pi`
    /// when `n_points` is even.
    pub fn half_shifted(n_points: usize) -> Self {
        CircleGrid {
            n_points,
            offset: PI / n_points as f64,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.offset + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }
}

/// Where a probability density lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Line(GridSpec),
    Circle(CircleGrid),
    Discrete,
}

/// Nonnegative samples of a probability density (or a discrete distribution).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDensity {
    pub support: Support,
    pub values: Vec<f64>,
}

impl ProbabilityDensity {
    pub fn line(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Self::checked(Support::Line(grid), values)
    }

    pub fn circle(grid: CircleGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points,
                actual: values.len(),
            });
        }
        Self::checked(Support::Circle(grid), values)
    }

    pub fn discrete(values: Vec<f64>) -> Result<Self> {
        Self::checked(Support::Discrete, values)
    }

    /// Samples `f` on a line grid and normalizes.
    pub fn line_from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::line(grid, values)?.normalized()
    }

    /// Samples `f` on a circle grid and normalizes.
    pub fn circle_from_fn(grid: CircleGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::circle(grid, values)?.normalized()
    }

    fn checked(support: Support, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidState(format!(
                "density value {v} is not a nonnegative number"
            )));
        }
        Ok(ProbabilityDensity { support, values })
    }

    /// Quadrature weight of one sample.
    pub fn cell(&self) -> f64 {
        match &self.support {
            Support::Line(g) => g.dx(),
            Support::Circle(c) => c.spacing(),
            Support::Discrete => 1.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    pub fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        Ok(ProbabilityDensity {
            support: self.support.clone(),
            values: self.values.iter().map(|v| v / total).collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Abscissae for line and circle supports, label indices otherwise.
    pub fn abscissae(&self) -> Vec<f64> {
        match &self.support {
            Support::Line(g) => g.points(),
            Support::Circle(c) => c.points(),
            Support::Discrete => (0..self.values.len()).map(|k| k as f64).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        let cell = self.cell();
        self.abscissae()
            .iter()
            .zip(&self.values)
            .map(|(x, p)| x * p * cell)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let cell = self.cell();
        let mean = self.mean();
        self.abscissae()
            .iter()
            .zip(&self.values)
            .map(|(x, p)| (x - mean).powi(2) * p * cell)
            .sum()
    }
}

/// Observables whose moments the state families support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    X,
    P,
    J,
    N,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::X => "X",
            Observable::P => "P",
            Observable::J => "J",
            Observable::N => "N",
        }
    }
}

/// `<B^k>` for the observables a family supports.
pub trait Moments {
    fn moment(&self, observable: Observable, k: u32, constants: &Constants) -> Result<f64>;

    fn variance(&self, observable: Observable, constants: &Constants) -> Result<f64> {
        let m1 = self.moment(observable, 1, constants)?;
        let m2 = self.moment(observable, 2, constants)?;
        Ok(m2 - m1 * m1)
    }
}

/// Rescaling to unit norm under the family's measure.
pub trait Normalize: Sized {
    fn normalized(&self) -> Result<Self>;
}

fn unsupported(observable: Observable, family: &'static str) -> Error {
    Error::UnsupportedObservable {
        observable: observable.name(),
        family,
    }
}

// ---------------------------------------------------------------------------
// Grid wavefunctions
// ---------------------------------------------------------------------------

/// Pure state sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPureState {
    grid: GridSpec,
    amplitudes: Vec<Complex64>,
}

impl GridPureState {
    /// Wraps amplitudes that are already normalized (within 1e-8).
    pub fn new(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        grid.check_len(amplitudes.len())?;
        let state = GridPureState { grid, amplitudes };
        let norm = state.norm_sq();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Wraps arbitrary amplitudes and rescales them to unit norm.
    pub fn from_unnormalized(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        grid.check_len(amplitudes.len())?;
        GridPureState { grid, amplitudes }.normalized()
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = grid.points().into_iter().map(f).collect();
        Self::from_unnormalized(grid, amps)
    }

    /// Normalized Gaussian with position spread `sigma` (so `|psi|^2` has
    /// standard deviation `sigma`), centre `x0` and wavenumber `k`.
    pub fn gaussian(grid: GridSpec, x0: f64, sigma: f64, k: f64) -> Result<Self> {
        Self::from_fn(grid, |x| {
            let env = (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
            Complex64::from_polar(env, k * x)
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn density_values(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn density(&self) -> ProbabilityDensity {
        ProbabilityDensity {
            support: Support::Line(self.grid),
            values: self.density_values(),
        }
    }

    /// `d psi / dx` by spectral differentiation.
    pub fn derivative(&self) -> Vec<Complex64> {
        spectral::derivative(&self.amplitudes, self.grid.length())
    }

    /// Ratio of the largest edge density to the peak density.
    pub fn edge_ratio(&self) -> f64 {
        edge_ratio(&self.density_values())
    }

    /// True when the state does not decay below [`tolerances::BOX_EDGE`] of
    /// its peak at the box edges.
    pub fn box_too_small(&self) -> bool {
        self.edge_ratio() > tolerances::BOX_EDGE
    }

    /// Momentum-space wavefunction on the conjugate lattice.
    pub fn to_momentum(&self, hbar: f64) -> MomentumWavefunction {
        MomentumWavefunction {
            position_grid: self.grid,
            hbar,
            state: GridPureState {
                grid: self.grid.momentum_grid(hbar),
                amplitudes: momentum_amplitudes(&self.grid, &self.amplitudes, hbar),
            },
        }
    }

    /// Split-step (Strang) propagation by `dt` under `H = P^2/2m + V(x)`,
    /// with `potential` sampled on the grid.
    pub fn evolve_step(&self, potential: &[f64], dt: f64, constants: &Constants) -> Result<Self> {
        self.grid.check_len(potential.len())?;
        let hbar = constants.hbar;
        let half_kick = |psi: &mut [Complex64]| {
            for (a, v) in psi.iter_mut().zip(potential) {
                *a *= Complex64::from_polar(1.0, -v * dt / (2.0 * hbar));
            }
        };
        let mut psi = self.amplitudes.clone();
        half_kick(&mut psi);
        spectral::fft_forward(&mut psi);
        let k = spectral::wavenumbers(self.grid.n_points, self.grid.length());
        for (a, kk) in psi.iter_mut().zip(&k) {
            let energy = hbar * hbar * kk * kk / (2.0 * constants.mass);
            *a *= Complex64::from_polar(1.0, -energy * dt / hbar);
        }
        spectral::fft_inverse(&mut psi);
        half_kick(&mut psi);
        Ok(GridPureState {
            grid: self.grid,
            amplitudes: psi,
        })
    }

    /// Same wavefunction multiplied pointwise.
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let amps = self
            .grid
            .points()
            .into_iter()
            .zip(&self.amplitudes)
            .map(|(x, a)| f(x, *a))
            .collect();
        Self::from_unnormalized(self.grid, amps)
    }
}

/// `(2 pi hbar)^{-1/2} int e^{-i p x / hbar} f(x) dx` on the ascending
/// momentum lattice, for samples `f` on `grid`.
pub(crate) fn momentum_amplitudes(grid: &GridSpec, values: &[Complex64], hbar: f64) -> Vec<Complex64> {
    let n = grid.n_points;
    let pgrid = grid.momentum_grid(hbar);
    let mut spec = values.to_vec();
    spectral::fft_forward(&mut spec);
    let scale = grid.dx() / (2.0 * PI * hbar).sqrt();
    let half = n / 2;
    (0..n)
        .map(|s| {
            // sorted index s holds mode m = s - n/2
            let m = (s + half) % n;
            let phase = Complex64::from_polar(1.0, -pgrid.point(s) * grid.x_min / hbar);
            spec[m] * phase * scale
        })
        .collect()
}

pub(crate) fn edge_ratio(density: &[f64]) -> f64 {
    let peak = density.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return 0.0;
    }
    let n = density.len();
    let edge = density[0].max(density[n - 1]);
    edge / peak
}

impl Normalize for GridPureState {
    fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sq();
        let scale = self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if !(norm.sqrt() > tolerances::ZERO_NORM * scale.max(1.0)) || norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let f = 1.0 / norm.sqrt();
        Ok(GridPureState {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * f).collect(),
        })
    }
}

impl Moments for GridPureState {
    fn moment(&self, observable: Observable, k: u32, constants: &Constants) -> Result<f64> {
        match observable {
            Observable::X => Ok(self.density().raw_moment(k)),
            Observable::P => Ok(self.to_momentum(constants.hbar).density().raw_moment(k)),
            other => Err(unsupported(other, "grid")),
        }
    }
}

impl ProbabilityDensity {
    /// `sum x^k p dx` over the support abscissae.
    pub fn raw_moment(&self, k: u32) -> f64 {
        let cell = self.cell();
        self.abscissae()
            .iter()
            .zip(&self.values)
            .map(|(x, p)| x.powi(k as i32) * p * cell)
            .sum()
    }
}

/// A momentum-space wavefunction together with the position grid it came
/// from. The inner state lives on the ascending momentum lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumWavefunction {
    pub position_grid: GridSpec,
    pub hbar: f64,
    pub state: GridPureState,
}

impl MomentumWavefunction {
    pub fn grid(&self) -> &GridSpec {
        &self.state.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.state.amplitudes
    }

    pub fn density(&self) -> ProbabilityDensity {
        self.state.density()
    }

    pub fn to_position(&self) -> GridPureState {
        let g = self.position_grid;
        let n = g.n_points;
        let half = n / 2;
        let pgrid = self.state.grid;
        let mut spec = vec![ZERO; n];
        let scale = (2.0 * PI * self.hbar).sqrt() / g.dx();
        for (s, a) in self.state.amplitudes.iter().enumerate() {
            let m = (s + half) % n;
            let p = pgrid.point(s);
            let phase = Complex64::from_polar(1.0, p * g.x_min / self.hbar);
            spec[m] = a * phase * scale;
        }
        spectral::fft_inverse(&mut spec);
        GridPureState {
            grid: g,
            amplitudes: spec,
        }
    }
}

/// Density matrix `rho(x_i, x_j)` on a uniform grid, stored row-major.
/// Normalized so that `sum_i rho(x_i, x_i) dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMixedState {
    grid: GridSpec,
    matrix: Vec<Complex64>,
}

impl GridMixedState {
    /// Convex combination of pure states; weights are renormalized.
    pub fn from_ensemble(members: &[(f64, &GridPureState)]) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidState("empty ensemble".into()))?;
        let grid = *first.1.grid();
        let n = grid.n_points;
        let total: f64 = members.iter().map(|(w, _)| *w).sum();
        if members.iter().any(|(w, _)| *w < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidState("ensemble weights must be nonnegative".into()));
        }
        let mut matrix = vec![ZERO; n * n];
        for (w, psi) in members {
            if psi.grid() != &grid {
                return Err(Error::InvalidGrid("ensemble members live on different grids".into()));
            }
            let w = w / total;
            let a = psi.amplitudes();
            for i in 0..n {
                let ai = a[i] * w;
                let row = &mut matrix[i * n..(i + 1) * n];
                for (r, aj) in row.iter_mut().zip(a) {
                    *r += ai * aj.conj();
                }
            }
        }
        Ok(GridMixedState { grid, matrix })
    }

    pub fn from_pure(psi: &GridPureState) -> Self {
        GridMixedState::from_ensemble(&[(1.0, psi)]).expect("single member ensemble")
    }

    /// Validates Hermiticity and unit trace. Positivity is checked on demand
    /// by [`GridMixedState::min_eigenvalue_ratio`].
    pub fn from_matrix(grid: GridSpec, matrix: Vec<Complex64>) -> Result<Self> {
        let n = grid.n_points;
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: matrix.len(),
            });
        }
        let scale = matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..i {
                if (matrix[i * n + j] - matrix[j * n + i].conj()).norm() > 1e-10 * scale.max(1e-300) {
                    return Err(Error::InvalidState("density matrix is not Hermitian".into()));
                }
            }
        }
        let state = GridMixedState { grid, matrix };
        let tr = state.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(state)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[i * self.grid.n_points + j]
    }

    pub fn trace(&self) -> f64 {
        let n = self.grid.n_points;
        (0..n).map(|i| self.matrix[i * n + i].re).sum::<f64>() * self.grid.dx()
    }

    /// `tr[rho^2]` in the continuum normalization.
    pub fn purity(&self) -> f64 {
        let dx = self.grid.dx();
        self.matrix.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx
    }

    pub fn density_values(&self) -> Vec<f64> {
        let n = self.grid.n_points;
        (0..n).map(|i| self.matrix[i * n + i].re.max(0.0)).collect()
    }

    pub fn density(&self) -> ProbabilityDensity {
        ProbabilityDensity {
            support: Support::Line(self.grid),
            values: self.density_values(),
        }
    }

    pub fn edge_ratio(&self) -> f64 {
        edge_ratio(&self.density_values())
    }

    pub fn box_too_small(&self) -> bool {
        self.edge_ratio() > tolerances::BOX_EDGE
    }

    /// `d rho(x, x') / dx` along the first index, diagonal only.
    pub fn diagonal_row_derivative(&self) -> Vec<Complex64> {
        let n = self.grid.n_points;
        let d = spectral::grid2::partial(&self.matrix, n, n, 0, self.grid.length());
        (0..n).map(|i| d[i * n + i]).collect()
    }

    /// `d^2 rho(x, x') / dx dx'` on the diagonal, i.e. `<x|P rho P|x> / hbar^2`.
    pub fn diagonal_mixed_derivative(&self) -> Vec<Complex64> {
        let n = self.grid.n_points;
        let l = self.grid.length();
        let d0 = spectral::grid2::partial(&self.matrix, n, n, 0, l);
        let d01 = spectral::grid2::partial(&d0, n, n, 1, l);
        (0..n).map(|i| d01[i * n + i]).collect()
    }

    /// Momentum-representation matrix `rho(p, p')` on the ascending lattice.
    pub fn momentum_matrix(&self, hbar: f64) -> Vec<Complex64> {
        momentum_transform(&self.grid, &self.matrix, hbar)
    }

    /// Momentum density `rho(p, p)` on the ascending lattice.
    pub fn momentum_density(&self, hbar: f64) -> ProbabilityDensity {
        let n = self.grid.n_points;
        let m = self.momentum_matrix(hbar);
        ProbabilityDensity {
            support: Support::Line(self.grid.momentum_grid(hbar)),
            values: (0..n).map(|i| m[i * n + i].re.max(0.0)).collect(),
        }
    }

    /// Smallest eigenvalue of the Hermitian matrix relative to the largest.
    /// Dense eigensolve; intended for moderate grids.
    pub fn min_eigenvalue_ratio(&self) -> f64 {
        let n = self.grid.n_points;
        let m = DMatrix::from_fn(n, n, |i, j| self.matrix[i * n + j]);
        let eig = m.symmetric_eigenvalues();
        let max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.iter().cloned().fold(f64::MAX, f64::min);
        min / max
    }
}

/// `F M F^dagger` for a row-major kernel `M(x, x')` on `grid`, in the
/// continuum normalization of momentum kets, with rows and columns in
/// ascending momentum order.
pub(crate) fn momentum_transform(grid: &GridSpec, matrix: &[Complex64], hbar: f64) -> Vec<Complex64> {
    let n = grid.n_points;
    let half = n / 2;
    let pgrid = grid.momentum_grid(hbar);
    let mut work = matrix.to_vec();
    // forward along x (rows index), conjugate transform along x'
    spectral::grid2::fft_cols(&mut work, n, n, false);
    // inverse FFT without normalization = sum_x' e^{+i p x'}
    spectral::grid2::fft_rows(&mut work, n, true);
    let nf = n as f64;
    let scale = grid.dx() * grid.dx() / (2.0 * PI * hbar) * nf;
    let phases: Vec<Complex64> = (0..n)
        .map(|s| Complex64::from_polar(1.0, -pgrid.point(s) * grid.x_min / hbar))
        .collect();
    let mut out = vec![ZERO; n * n];
    for s in 0..n {
        let ms = (s + half) % n;
        for t in 0..n {
            let mt = (t + half) % n;
            out[s * n + t] = work[ms * n + mt] * phases[s] * phases[t].conj() * scale;
        }
    }
    out
}

impl Normalize for GridMixedState {
    fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        Ok(GridMixedState {
            grid: self.grid,
            matrix: self.matrix.iter().map(|v| v / tr).collect(),
        })
    }
}

impl Moments for GridMixedState {
    fn moment(&self, observable: Observable, k: u32, constants: &Constants) -> Result<f64> {
        match observable {
            Observable::X => Ok(self.density().raw_moment(k)),
            Observable::P => Ok(self.momentum_density(constants.hbar).raw_moment(k)),
            other => Err(unsupported(other, "grid")),
        }
    }
}

// ---------------------------------------------------------------------------
// Discrete-label families: rotator, Fock space
// ---------------------------------------------------------------------------

/// Amplitudes or a density matrix over a contiguous range of integer labels.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeContent {
    Pure(Vec<Complex64>),
    Mixed(DMatrix<Complex64>),
}

impl ModeContent {
    pub fn len(&self) -> usize {
        match self {
            ModeContent::Pure(v) => v.len(),
            ModeContent::Mixed(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Diagonal populations.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            ModeContent::Pure(v) => v.iter().map(|a| a.norm_sqr()).collect(),
            ModeContent::Mixed(m) => (0..m.nrows()).map(|i| m[(i, i)].re).collect(),
        }
    }

    pub fn total(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// Density matrix element `rho_{ab}`.
    pub fn element(&self, a: usize, b: usize) -> Complex64 {
        match self {
            ModeContent::Pure(v) => v[a] * v[b].conj(),
            ModeContent::Mixed(m) => m[(a, b)],
        }
    }

    fn validated(self) -> Result<Self> {
        if self.is_empty() {
            return Err(Error::InvalidState("no modes".into()));
        }
        if let ModeContent::Mixed(m) = &self {
            if !m.is_square() {
                return Err(Error::InvalidState("density matrix must be square".into()));
            }
            check_hermitian_psd(m)?;
        }
        Ok(self)
    }

    fn normalized(&self) -> Result<Self> {
        let total = self.total();
        if !(total > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        Ok(match self {
            ModeContent::Pure(v) => ModeContent::Pure(v.iter().map(|a| a / total.sqrt()).collect()),
            ModeContent::Mixed(m) => ModeContent::Mixed(m.map(|v| v / total)),
        })
    }

    fn label_moment(&self, first_label: i64, k: u32) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(i, p)| ((first_label + i as i64) as f64).powi(k as i32) * p)
            .sum()
    }
}

pub(crate) fn check_hermitian_psd(m: &DMatrix<Complex64>) -> Result<()> {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let herm_dev = (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if herm_dev > 1e-10 * scale {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.iter().cloned().fold(f64::MAX, f64::min);
    if min < -1e-10 * max.abs().max(1e-300) {
        return Err(Error::InvalidState(format!(
            "density matrix has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Plane rotator state: amplitudes `psi_j` for `j = j_min ..` with phase
/// wavefunction `f(phi) = (2 pi)^{-1/2} sum_j psi_j e^{i j phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicState {
    j_min: i64,
    content: ModeContent,
}

impl PeriodicState {
    pub fn new(j_min: i64, content: ModeContent) -> Result<Self> {
        let content = content.validated()?;
        let total = content.total();
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!("norm is {total}, expected 1")));
        }
        Ok(PeriodicState { j_min, content })
    }

    pub fn from_unnormalized(j_min: i64, content: ModeContent) -> Result<Self> {
        let content = content.validated()?.normalized()?;
        Ok(PeriodicState { j_min, content })
    }

    pub fn pure(j_min: i64, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_unnormalized(j_min, ModeContent::Pure(amplitudes))
    }

    /// Angular momentum eigenstate `|j>` embedded in `j_min..=j_max`.
    pub fn eigenstate(j: i64, j_min: i64, j_max: i64) -> Result<Self> {
        if j < j_min || j > j_max {
            return Err(Error::InvalidState(format!("label {j} outside [{j_min}, {j_max}]")));
        }
        let mut amps = vec![ZERO; (j_max - j_min + 1) as usize];
        amps[(j - j_min) as usize] = Complex64::new(1.0, 0.0);
        Self::pure(j_min, amps)
    }

    /// Projects a phase wavefunction onto the modes `j_min..=j_max`.
    pub fn from_phase_fn(j_min: i64, j_max: i64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let modes = (j_max - j_min + 1) as usize;
        let samples = (8 * modes).max(1024).next_power_of_two();
        let grid = CircleGrid::new(samples);
        let mut values: Vec<Complex64> = grid.points().into_iter().map(&f).collect();
        spectral::fft_forward(&mut values);
        // psi_j = (2 pi)^{-1/2} int f e^{-i j phi} dphi
        let scale = (2.0 * PI).sqrt() / samples as f64;
        let amps = (j_min..=j_max)
            .map(|j| values[j.rem_euclid(samples as i64) as usize] * scale)
            .collect();
        Self::pure(j_min, amps)
    }

    pub fn j_min(&self) -> i64 {
        self.j_min
    }

    pub fn j_max(&self) -> i64 {
        self.j_min + self.content.len() as i64 - 1
    }

    pub fn content(&self) -> &ModeContent {
        &self.content
    }

    pub fn labels(&self) -> Vec<i64> {
        (self.j_min..=self.j_max()).collect()
    }

    /// Grid used by [`PeriodicState::evolve_step`]: one point per mode.
    pub fn phase_grid(&self) -> CircleGrid {
        CircleGrid::new(self.content.len())
    }

    /// `f(phi)` on [`PeriodicState::phase_grid`] (pure states only).
    pub fn phase_wavefunction(&self) -> Result<Vec<Complex64>> {
        match &self.content {
            ModeContent::Pure(a) => Ok(modes_to_phase(a, self.j_min)),
            ModeContent::Mixed(_) => Err(Error::Unsupported("phase wavefunction of a mixed state")),
        }
    }

    /// Strang split-step under `H = J^2/2I + V(phi)`, `potential` sampled on
    /// [`PeriodicState::phase_grid`]. Pure states only.
    pub fn evolve_step(&self, potential: &[f64], dt: f64, constants: &Constants) -> Result<Self> {
        let amps = match &self.content {
            ModeContent::Pure(a) => a,
            ModeContent::Mixed(_) => return Err(Error::Unsupported("evolution of a mixed rotator state")),
        };
        let m = amps.len();
        if potential.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: potential.len(),
            });
        }
        let hbar = constants.hbar;
        let kinetic = |a: &mut [Complex64], factor: f64| {
            for (i, v) in a.iter_mut().enumerate() {
                let j = (self.j_min + i as i64) as f64;
                let e = hbar * hbar * j * j / (2.0 * constants.moment_of_inertia);
                *v *= Complex64::from_polar(1.0, -e * dt * factor / hbar);
            }
        };
        let mut a = amps.clone();
        kinetic(&mut a, 0.5);
        let mut f = modes_to_phase(&a, self.j_min);
        for (v, pot) in f.iter_mut().zip(potential) {
            *v *= Complex64::from_polar(1.0, -pot * dt / hbar);
        }
        let mut a = phase_to_modes(&f, self.j_min);
        kinetic(&mut a, 0.5);
        Ok(PeriodicState {
            j_min: self.j_min,
            content: ModeContent::Pure(a),
        })
    }
}

/// `f(phi_k) = (2 pi)^{-1/2} sum_q a_q e^{i (j_min + q) phi_k}`, `phi_k = 2 pi k / M`.
fn modes_to_phase(a: &[Complex64], j_min: i64) -> Vec<Complex64> {
    let m = a.len();
    let mut f = a.to_vec();
    spectral::fft_chunks(&mut f, m, true);
    let scale = m as f64 / (2.0 * PI).sqrt();
    f.iter_mut().enumerate().for_each(|(k, v)| {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * (j_min as f64) * k as f64 / m as f64);
        *v *= phase * scale;
    });
    f
}

fn phase_to_modes(f: &[Complex64], j_min: i64) -> Vec<Complex64> {
    let m = f.len();
    let scale = (2.0 * PI).sqrt() / m as f64;
    let mut a: Vec<Complex64> = f
        .iter()
        .enumerate()
        .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j_min as f64) * k as f64 / m as f64))
        .collect();
    spectral::fft_forward(&mut a);
    a.iter_mut().for_each(|v| *v *= scale);
    a
}

impl Normalize for PeriodicState {
    fn normalized(&self) -> Result<Self> {
        Ok(PeriodicState {
            j_min: self.j_min,
            content: self.content.normalized()?,
        })
    }
}

impl Moments for PeriodicState {
    fn moment(&self, observable: Observable, k: u32, constants: &Constants) -> Result<f64> {
        match observable {
            Observable::J => Ok(constants.hbar.powi(k as i32) * self.content.label_moment(self.j_min, k)),
            other => Err(unsupported(other, "periodic")),
        }
    }
}

/// How a Fock state was produced; lets the cutoff study rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub enum FockSource {
    Explicit,
    Number(usize),
    Coherent(Complex64),
}

/// Single-mode state in the photon-number basis, `n = 0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    content: ModeContent,
    source: FockSource,
}

impl FockState {
    pub fn new(content: ModeContent) -> Result<Self> {
        let content = content.validated()?.normalized()?;
        Ok(FockState {
            content,
            source: FockSource::Explicit,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(ModeContent::Pure(amplitudes))
    }

    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::InvalidState(format!("n = {n} exceeds cutoff {cutoff}")));
        }
        let mut amps = vec![ZERO; cutoff + 1];
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(FockState {
            content: ModeContent::Pure(amps),
            source: FockSource::Number(n),
        })
    }

    /// Coherent state `|alpha>` truncated at `cutoff` and renormalized;
    /// photon statistics are Poissonian with mean `|alpha|^2`.
    pub fn coherent(alpha: Complex64, cutoff: usize) -> Result<Self> {
        let mut amps = Vec::with_capacity(cutoff + 1);
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..=cutoff {
            if n > 0 {
                c *= alpha / (n as f64).sqrt();
            }
            amps.push(c);
        }
        let content = ModeContent::Pure(amps).normalized()?;
        Ok(FockState {
            content,
            source: FockSource::Coherent(alpha),
        })
    }

    pub fn cutoff(&self) -> usize {
        self.content.len() - 1
    }

    pub fn content(&self) -> &ModeContent {
        &self.content
    }

    pub fn source(&self) -> &FockSource {
        &self.source
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.content, ModeContent::Pure(_))
    }

    /// Rebuilds (generated states) or zero-pads (explicit states) at a new cutoff.
    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        match self.source {
            FockSource::Coherent(alpha) => FockState::coherent(alpha, cutoff),
            FockSource::Number(n) => FockState::number(n, cutoff),
            FockSource::Explicit => {
                let old = self.content.len();
                if cutoff + 1 < old {
                    let dropped: f64 = self.content.populations()[cutoff + 1..].iter().sum();
                    if dropped > 0.0 {
                        return Err(Error::InvalidState(
                            "cannot lower the cutoff of an explicit state".into(),
                        ));
                    }
                }
                let content = match &self.content {
                    ModeContent::Pure(a) => {
                        let mut v = vec![ZERO; cutoff + 1];
                        for (i, x) in a.iter().enumerate().take(cutoff + 1) {
                            v[i] = *x;
                        }
                        ModeContent::Pure(v)
                    }
                    ModeContent::Mixed(m) => {
                        let d = cutoff + 1;
                        ModeContent::Mixed(DMatrix::from_fn(d, d, |i, j| {
                            if i < old && j < old {
                                m[(i, j)]
                            } else {
                                ZERO
                            }
                        }))
                    }
                };
                Ok(FockState {
                    content,
                    source: FockSource::Explicit,
                })
            }
        }
    }
}

impl Normalize for FockState {
    fn normalized(&self) -> Result<Self> {
        Ok(FockState {
            content: self.content.normalized()?,
            source: self.source.clone(),
        })
    }
}

impl Moments for FockState {
    fn moment(&self, observable: Observable, k: u32, _constants: &Constants) -> Result<f64> {
        match observable {
            Observable::N => Ok(self.content.label_moment(0, k)),
            other => Err(unsupported(other, "fock")),
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-dimensional states
// ---------------------------------------------------------------------------

/// Density matrix on a `d`-dimensional Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteState {
    matrix: DMatrix<Complex64>,
}

impl FiniteState {
    pub fn pure(vector: &[Complex64]) -> Result<Self> {
        let d = vector.len();
        if d < 2 {
            return Err(Error::InvalidState("dimension must be at least 2".into()));
        }
        let norm: f64 = vector.iter().map(|a| a.norm_sqr()).sum();
        if !(norm.sqrt() > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        let v: Vec<Complex64> = vector.iter().map(|a| a / norm.sqrt()).collect();
        Ok(FiniteState {
            matrix: DMatrix::from_fn(d, d, |i, j| v[i] * v[j].conj()),
        })
    }

    pub fn mixed(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(Error::InvalidState(
                "need a square matrix of dimension at least 2".into(),
            ));
        }
        check_hermitian_psd(&matrix)?;
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        Ok(FiniteState { matrix })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        FiniteState {
            matrix: DMatrix::identity(d, d).map(|v: Complex64| v / d as f64),
        }
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

impl Normalize for FiniteState {
    fn normalized(&self) -> Result<Self> {
        let tr = self.matrix.trace().re;
        if !(tr > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        Ok(FiniteState {
            matrix: self.matrix.map(|v| v / tr),
        })
    }
}

// ---------------------------------------------------------------------------
// Two-dimensional grids
// ---------------------------------------------------------------------------

/// Product of two per-axis grids; arrays are row-major with the first axis
/// (particle 1) as the row index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub axis1: GridSpec,
    pub axis2: GridSpec,
}

impl Grid2 {
    pub fn new(axis1: GridSpec, axis2: GridSpec) -> Self {
        Grid2 { axis1, axis2 }
    }

    pub fn len(&self) -> usize {
        self.axis1.n_points * self.axis2.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self) -> f64 {
        self.axis1.dx() * self.axis2.dx()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.axis2.n_points + j
    }
}

/// Two-particle pure state sampled on a [`Grid2`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPureState2 {
    grid: Grid2,
    amplitudes: Vec<Complex64>,
}

impl GridPureState2 {
    pub fn from_unnormalized(grid: Grid2, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: amplitudes.len(),
            });
        }
        GridPureState2 { grid, amplitudes }.normalized()
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let x1 = grid.axis1.points();
        let x2 = grid.axis2.points();
        let mut amps = Vec::with_capacity(grid.len());
        for a in &x1 {
            for b in &x2 {
                amps.push(f(*a, *b));
            }
        }
        Self::from_unnormalized(grid, amps)
    }

    /// Product `psi1(x1) psi2(x2)`.
    pub fn product(a: &GridPureState, b: &GridPureState) -> Result<Self> {
        let grid = Grid2::new(*a.grid(), *b.grid());
        let mut amps = Vec::with_capacity(grid.len());
        for u in a.amplitudes() {
            for v in b.amplitudes() {
                amps.push(u * v);
            }
        }
        Self::from_unnormalized(grid, amps)
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn density_values(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Spectral partial derivative along axis 0 (`x1`) or 1 (`x2`).
    pub fn partial(&self, axis: usize) -> Vec<Complex64> {
        let (r, c) = (self.grid.axis1.n_points, self.grid.axis2.n_points);
        let period = if axis == 0 {
            self.grid.axis1.length()
        } else {
            self.grid.axis2.length()
        };
        spectral::grid2::partial(&self.amplitudes, r, c, axis, period)
    }

    /// Applies `f(x2, amplitude)` along particle 2 only.
    pub fn map_particle2(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Result<Self> {
        let x2 = self.grid.axis2.points();
        let c = self.grid.axis2.n_points;
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| f(x2[idx % c], *a))
            .collect();
        Self::from_unnormalized(self.grid, amps)
    }

    /// Translates particle 2 by `shift` (Fourier interpolation, periodic box).
    pub fn displace_particle2(&self, shift: f64) -> Result<Self> {
        let r = self.grid.axis1.n_points;
        let c = self.grid.axis2.n_points;
        let l = self.grid.axis2.length();
        let mut out = Vec::with_capacity(self.amplitudes.len());
        for i in 0..r {
            let row = &self.amplitudes[i * c..(i + 1) * c];
            out.extend(spectral::shift(row, l, -shift));
        }
        Self::from_unnormalized(self.grid, out)
    }

    /// Ratio of the largest density on the box boundary to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let d = self.density_values();
        let peak = d.iter().cloned().fold(0.0, f64::max);
        let (r, c) = (self.grid.axis1.n_points, self.grid.axis2.n_points);
        let mut edge: f64 = 0.0;
        for i in 0..r {
            edge = edge.max(d[i * c]).max(d[i * c + c - 1]);
        }
        for j in 0..c {
            edge = edge.max(d[j]).max(d[(r - 1) * c + j]);
        }
        edge / peak
    }
}

impl Normalize for GridPureState2 {
    fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sq();
        if !(norm > 0.0) || !(norm.sqrt() > tolerances::ZERO_NORM) {
            return Err(Error::ZeroNorm);
        }
        let f = 1.0 / norm.sqrt();
        Ok(GridPureState2 {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * f).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::centered(512, 40.0).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(7, 0.0, 1.0).is_err());
        assert!(GridSpec::new(6, 0.0, 1.0).is_err());
        assert!(GridSpec::new(8, 1.0, 1.0).is_err());
        let g = GridSpec::new(8, 0.0, 4.0).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert!((g.momentum_spacing(1.0) - 2.0 * PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_is_identity_on_normalized_and_removes_scale() {
        let psi = GridPureState::gaussian(grid(), 0.0, 1.0, 0.0).unwrap();
        let again = psi.normalized().unwrap();
        for (a, b) in again.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let scaled: Vec<Complex64> = psi.amplitudes().iter().map(|a| a * 3.0).collect();
        let back = GridPureState::from_unnormalized(grid(), scaled).unwrap();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_amplitudes_are_rejected() {
        let err = GridPureState::from_unnormalized(grid(), vec![ZERO; 512]).unwrap_err();
        assert_eq!(err, Error::ZeroNorm);
        assert_eq!(FiniteState::pure(&[ZERO, ZERO]).unwrap_err(), Error::ZeroNorm);
    }

    #[test]
    fn momentum_transform_is_unitary_and_invertible() {
        let psi = GridPureState::from_fn(grid(), |x| {
            Complex64::from_polar((-(x - 1.0).powi(2) / 2.0).exp(), 0.7 * x + 0.1 * x * x)
                + Complex64::new(0.3, 0.2) * (-(x + 2.0).powi(2)).exp()
        })
        .unwrap();
        let mom = psi.to_momentum(1.0);
        assert!((mom.state.norm_sq() - 1.0).abs() < 1e-10);
        let back = mom.to_position();
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn gaussian_momentum_spread_and_shift() {
        let sigma = 0.8;
        let hbar = 0.7;
        let c = Constants::with_hbar(hbar);
        let psi = GridPureState::gaussian(grid(), 0.5, sigma, 0.0).unwrap();
        let var_p = psi.variance(Observable::P, &c).unwrap();
        assert!((var_p.sqrt() - hbar / (2.0 * sigma)).abs() < 1e-10);
        let boosted = GridPureState::gaussian(grid(), 0.5, sigma, 2.0).unwrap();
        let mean = boosted.moment(Observable::P, 1, &c).unwrap();
        assert!((mean - 2.0 * hbar).abs() < 1e-10);
    }

    #[test]
    fn position_moments_of_gaussian() {
        let psi = GridPureState::gaussian(grid(), 0.0, 1.3, 0.0).unwrap();
        let c = Constants::default();
        assert!((psi.moment(Observable::X, 2, &c).unwrap() - 1.69).abs() < 1e-10);
        assert!(psi.moment(Observable::J, 1, &c).is_err());
    }

    #[test]
    fn discrete_family_moments() {
        let c = Constants::with_hbar(1.5);
        let fock = FockState::number(3, 10).unwrap();
        assert_eq!(fock.moment(Observable::N, 1, &c).unwrap(), 3.0);
        let rot = PeriodicState::eigenstate(2, -4, 4).unwrap();
        assert!((rot.moment(Observable::J, 2, &c).unwrap() - 4.0 * 2.25).abs() < 1e-14);
        assert!(matches!(
            rot.moment(Observable::N, 1, &c),
            Err(Error::UnsupportedObservable { .. })
        ));
    }

    #[test]
    fn free_evolution_with_zero_step_is_identity() {
        let psi = GridPureState::gaussian(grid(), 0.0, 1.0, 1.0).unwrap();
        let v = vec![0.0; 512];
        let out = psi.evolve_step(&v, 0.0, &Constants::default()).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn free_gaussian_spreads_per_analytic_law() {
        // Var x(t) = s^2 + (hbar t / (2 m s))^2 for a minimum-uncertainty packet.
        let s = 1.0;
        let t = 0.5;
        let c = Constants::default();
        let psi = GridPureState::gaussian(grid(), 0.0, s, 0.0).unwrap();
        let out = psi.evolve_step(&vec![0.0; 512], t, &c).unwrap();
        let var = out.variance(Observable::X, &c).unwrap();
        let expected = s * s + (t / (2.0 * s)).powi(2);
        assert!((var - expected).abs() < 1e-6);
        assert!((out.norm_sq() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rotator_eigenstate_only_acquires_phase() {
        let rot = PeriodicState::eigenstate(3, -8, 7).unwrap();
        let before = rot.phase_wavefunction().unwrap();
        let v = vec![0.0; 16];
        let after = rot.evolve_step(&v, 0.37, &Constants::default()).unwrap();
        let after_f = after.phase_wavefunction().unwrap();
        for (a, b) in before.iter().zip(&after_f) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_is_poissonian() {
        let st = FockState::coherent(Complex64::new(2.0f64.sqrt(), 0.0), 40).unwrap();
        let c = Constants::default();
        assert!((st.moment(Observable::N, 1, &c).unwrap() - 2.0).abs() < 1e-12);
        assert!((st.variance(Observable::N, &c).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn ensemble_density_matrix_is_positive_with_unit_trace() {
        let g = GridSpec::centered(64, 20.0).unwrap();
        let a = GridPureState::gaussian(g, -2.0, 1.0, 0.0).unwrap();
        let b = GridPureState::gaussian(g, 2.0, 1.0, 1.0).unwrap();
        let rho = GridMixedState::from_ensemble(&[(0.3, &a), (0.7, &b)]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.purity() < 1.0);
        assert!(rho.min_eigenvalue_ratio() > -1e-10);
        let m = GridMixedState::from_matrix(g, rho.matrix().to_vec()).unwrap();
        assert_eq!(m, rho);
    }

    #[test]
    fn mixed_momentum_density_matches_pure_path() {
        let g = GridSpec::centered(128, 30.0).unwrap();
        let psi = GridPureState::gaussian(g, 1.0, 1.2, -0.8).unwrap();
        let rho = GridMixedState::from_pure(&psi);
        let a = rho.momentum_density(1.0).values;
        let b = psi.to_momentum(1.0).density().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
