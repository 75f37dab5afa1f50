//! Wigner function on the grid and its conditional first moments.
//!
//! `W(x, p) = (2 pi hbar)^{-1} int dxi e^{-i p xi / hbar} <x + xi/2|rho|x - xi/2>`,
//! which puts a plane wave `e^{ikx}` at `p = hbar k`. The `xi` lattice has
//! spacing `dx` and span `L`; odd multiples of `dx` need `rho` at half-cell
//! offsets, which are obtained by Fourier interpolation.

use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::decomposition::{Basis, ClassicalComponent, StateRef};
use crate::error::{Error, Result};
use crate::spectral;
use crate::state::{GridMixedState, GridPureState, GridSpec, Observable};
use crate::tolerances;

/// Samples `W(x_j, p_s)`, row-major with `x` as the row index and `p`
/// ascending along each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_grid: GridSpec,
    pub p_grid: GridSpec,
    pub values: Vec<f64>,
    /// Largest imaginary residue relative to the largest `|W|`.
    pub imaginary_residue: f64,
    /// The state does not decay to [`tolerances::BOX_EDGE`] at the box edges.
    pub box_too_small: bool,
}

impl WignerGrid {
    pub fn value(&self, j: usize, s: usize) -> f64 {
        self.values[j * self.p_grid.n_points + s]
    }

    /// `int W dp` at each `x`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let np = self.p_grid.n_points;
        let dp = self.p_grid.dx();
        self.values.chunks(np).map(|row| row.iter().sum::<f64>() * dp).collect()
    }

    /// `int W dx` at each `p`.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let np = self.p_grid.n_points;
        let dx = self.x_grid.dx();
        let mut out = vec![0.0; np];
        for row in self.values.chunks(np) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * dx;
            }
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.x_grid.dx() * self.p_grid.dx()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }
}

/// Half-cell shifted copy `rho(x_a + dx/2, x_b + dx/2)` of a row-major matrix.
fn shift_both(matrix: &[Complex64], grid: &GridSpec) -> Vec<Complex64> {
    let n = grid.n_points;
    let l = grid.length();
    let h = grid.dx() / 2.0;
    let mut rows: Vec<Complex64> = Vec::with_capacity(n * n);
    for row in matrix.chunks(n) {
        rows.extend(spectral::shift(row, l, h));
    }
    let t = spectral::grid2::transpose(&rows, n, n);
    let mut cols: Vec<Complex64> = Vec::with_capacity(n * n);
    for col in t.chunks(n) {
        cols.extend(spectral::shift(col, l, h));
    }
    spectral::grid2::transpose(&cols, n, n)
}

fn transform(grid: &GridSpec, hbar: f64, kernel: impl Fn(usize, i64) -> Complex64, edge: f64) -> WignerGrid {
    let n = grid.n_points;
    let half = (n / 2) as i64;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let row = &mut data[j * n..(j + 1) * n];
        for m in -half + 1..half {
            row[m.rem_euclid(n as i64) as usize] = kernel(j, m);
        }
    }
    spectral::fft_chunks(&mut data, n, false);
    let scale = grid.dx() / (2.0 * std::f64::consts::PI * hbar);
    let mut values = vec![0.0; n * n];
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for j in 0..n {
        for s in 0..n {
            // ascending index s holds lattice momentum (s - n/2) dp
            let m = (s + n / 2) % n;
            let v = data[j * n + m] * scale;
            values[j * n + s] = v.re;
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
        }
    }
    WignerGrid {
        x_grid: *grid,
        p_grid: grid.momentum_grid(hbar),
        values,
        imaginary_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
        box_too_small: edge > tolerances::BOX_EDGE,
    }
}

fn wrap(i: i64, n: usize) -> usize {
    i.rem_euclid(n as i64) as usize
}

/// Wigner transform of a pure state.
pub fn wigner_pure(psi: &GridPureState, hbar: f64) -> WignerGrid {
    let g = *psi.grid();
    let n = g.n_points;
    let a = psi.amplitudes();
    let h = spectral::shift(a, g.length(), g.dx() / 2.0);
    transform(
        &g,
        hbar,
        |j, m| {
            let j = j as i64;
            if m % 2 == 0 {
                let l = m / 2;
                a[wrap(j + l, n)] * a[wrap(j - l, n)].conj()
            } else {
                let l = (m - 1).div_euclid(2);
                h[wrap(j + l, n)] * h[wrap(j - l - 1, n)].conj()
            }
        },
        psi.edge_ratio(),
    )
}

/// Wigner transform of a density matrix.
pub fn wigner_mixed(rho: &GridMixedState, hbar: f64) -> WignerGrid {
    let g = *rho.grid();
    let n = g.n_points;
    let m0 = rho.matrix();
    let hh = shift_both(m0, &g);
    transform(
        &g,
        hbar,
        |j, m| {
            let j = j as i64;
            if m % 2 == 0 {
                let l = m / 2;
                m0[wrap(j + l, n) * n + wrap(j - l, n)]
            } else {
                let l = (m - 1).div_euclid(2);
                hh[wrap(j + l, n) * n + wrap(j - l - 1, n)]
            }
        },
        rho.edge_ratio(),
    )
}

/// Wigner transform of a pure or mixed grid state.
pub fn wigner_transform<'a>(state: impl Into<StateRef<'a>>, hbar: f64) -> Result<WignerGrid> {
    match state.into() {
        StateRef::GridPure(psi) => Ok(wigner_pure(psi, hbar)),
        StateRef::GridMixed(rho) => Ok(wigner_mixed(rho, hbar)),
        _ => Err(Error::Unsupported("Wigner transform of a non-grid state")),
    }
}

fn conditional_mean(
    marginal: &[f64],
    first: &[f64],
    cell: f64,
    labels: Vec<f64>,
    observable: Observable,
    basis: Basis,
    source_mean: f64,
) -> Result<ClassicalComponent> {
    let max = marginal.iter().cloned().fold(0.0, f64::max);
    let retained: Vec<bool> = marginal
        .iter()
        .map(|m| *m >= tolerances::DENSITY_MASK * max && *m > 0.0)
        .collect();
    let weights: Vec<f64> = marginal.iter().map(|m| m.max(0.0) * cell).collect();
    let total: f64 = weights.iter().sum();
    let masked: f64 = weights
        .iter()
        .zip(&retained)
        .filter(|(_, r)| !**r)
        .map(|(w, _)| *w)
        .sum();
    if total <= 0.0 || masked / total > tolerances::MAX_MASKED_FRACTION {
        return Err(Error::VanishingDensity {
            masked_fraction: if total > 0.0 { masked / total } else { 1.0 },
        });
    }
    let values = first
        .iter()
        .zip(marginal)
        .zip(&retained)
        .map(|((f, m), r)| if *r { f / m } else { 0.0 })
        .collect();
    Ok(ClassicalComponent::from_parts(
        observable,
        basis,
        labels,
        values,
        weights,
        retained,
        source_mean,
    ))
}

/// `P_av(x) = int p W dp / int W dp`, as a classical component over the
/// position grid. Points where the marginal vanishes are masked.
pub fn wigner_average_momentum(w: &WignerGrid) -> Result<ClassicalComponent> {
    let np = w.p_grid.n_points;
    let dp = w.p_grid.dx();
    let ps = w.p_grid.points();
    let marginal = w.position_marginal();
    let first: Vec<f64> = w
        .values
        .chunks(np)
        .map(|row| row.iter().zip(&ps).map(|(v, p)| v * p).sum::<f64>() * dp)
        .collect();
    let source_mean = first.iter().sum::<f64>() * w.x_grid.dx();
    conditional_mean(
        &marginal,
        &first,
        w.x_grid.dx(),
        w.x_grid.points(),
        Observable::P,
        Basis::Position,
        source_mean,
    )
}

/// `X_cl(p) = int x W dx / int W dx` from an existing Wigner grid.
pub fn wigner_average_position(w: &WignerGrid) -> Result<ClassicalComponent> {
    let np = w.p_grid.n_points;
    let dx = w.x_grid.dx();
    let xs = w.x_grid.points();
    let marginal = w.momentum_marginal();
    let mut first = vec![0.0; np];
    for (row, x) in w.values.chunks(np).zip(&xs) {
        for (f, v) in first.iter_mut().zip(row) {
            *f += x * v * dx;
        }
    }
    let source_mean = first.iter().sum::<f64>() * w.p_grid.dx();
    conditional_mean(
        &marginal,
        &first,
        w.p_grid.dx(),
        w.p_grid.points(),
        Observable::X,
        Basis::Momentum,
        source_mean,
    )
}

/// Classical position component given a momentum measurement, via the
/// Wigner function.
pub fn position_classical_in_momentum<'a>(state: impl Into<StateRef<'a>>, hbar: f64) -> Result<ClassicalComponent> {
    let w = wigner_transform(state, hbar)?;
    wigner_average_position(&w)
}
