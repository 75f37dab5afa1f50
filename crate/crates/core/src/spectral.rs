//! FFT-based differentiation, shifting and interpolation on periodic grids.
//!
//! All routines treat the sampled function as one period of a trigonometric
//! polynomial. The Nyquist mode is dropped by derivatives and treated
//! symmetrically by shifts, so real input stays real.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn fft_forward(data: &mut [Complex64]) {
    if data.is_empty() {
        return;
    }
    let fft = FftPlanner::new().plan_fft_forward(data.len());
    fft.process(data);
}

/// Inverse FFT including the `1/n` factor.
pub(crate) fn fft_inverse(data: &mut [Complex64]) {
    if data.is_empty() {
        return;
    }
    let n = data.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(data);
    let scale = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Batched transform of consecutive chunks of length `len`.
pub(crate) fn fft_chunks(data: &mut [Complex64], len: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    };
    fft.process(data);
    if inverse {
        let scale = 1.0 / len as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Integer mode index in FFT order: `0, 1, .., n/2, -(n/2 - 1), .., -1`.
/// Index `n/2` is the Nyquist mode for even `n` and is reported as `n/2`.
pub(crate) fn mode_index(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Angular wavenumbers `2 pi m / period` in FFT order.
pub fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * mode_index(m, n) as f64 / period).collect()
}

fn is_nyquist(m: usize, n: usize) -> bool {
    n.is_multiple_of(2) && m == n / 2
}

/// Spectral first derivative of a periodic complex sequence with the given
/// period length.
pub fn derivative(values: &[Complex64], period: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut spec = values.to_vec();
    fft_forward(&mut spec);
    let k = wavenumbers(n, period);
    for (m, v) in spec.iter_mut().enumerate() {
        if is_nyquist(m, n) {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, k[m]);
        }
    }
    fft_inverse(&mut spec);
    spec
}

/// Spectral first derivative of a periodic real sequence.
pub fn derivative_real(values: &[f64], period: f64) -> Vec<f64> {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    derivative(&c, period).into_iter().map(|v| v.re).collect()
}

/// Samples of `f(x + shift)` from samples of `f(x)` by Fourier interpolation.
pub fn shift(values: &[Complex64], period: f64, shift: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut spec = values.to_vec();
    fft_forward(&mut spec);
    let k = wavenumbers(n, period);
    for (m, v) in spec.iter_mut().enumerate() {
        if is_nyquist(m, n) {
            *v *= (k[m] * shift).cos();
        } else {
            *v *= Complex64::from_polar(1.0, k[m] * shift);
        }
    }
    fft_inverse(&mut spec);
    spec
}

/// Trigonometric interpolant of samples `values[k] = f(origin + k * period / n)`
/// evaluated at an arbitrary point.
pub fn interpolate(values: &[Complex64], origin: f64, period: f64, x: f64) -> Complex64 {
    let mut spec = values.to_vec();
    fft_forward(&mut spec);
    interpolate_spectrum(&spec, origin, period, x)
}

/// Unnormalized forward transform of a copy of `values`.
pub(crate) fn spectrum(values: &[Complex64]) -> Vec<Complex64> {
    let mut spec = values.to_vec();
    fft_forward(&mut spec);
    spec
}

/// Same as [`interpolate`] for an already transformed sequence.
pub(crate) fn interpolate_spectrum(spec: &[Complex64], origin: f64, period: f64, x: f64) -> Complex64 {
    let n = spec.len();
    let k = wavenumbers(n, period);
    let t = x - origin;
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, c) in spec.iter().enumerate() {
        if is_nyquist(m, n) {
            acc += c * (k[m] * t).cos();
        } else {
            acc += c * Complex64::from_polar(1.0, k[m] * t);
        }
    }
    acc / n as f64
}

/// Row-major `rows x cols` array helpers.
pub(crate) mod grid2 {
    use super::*;

    pub fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = data[r * cols + c];
            }
        }
        out
    }

    /// Transform along axis 1 (within rows).
    pub fn fft_rows(data: &mut [Complex64], cols: usize, inverse: bool) {
        fft_chunks(data, cols, inverse);
    }

    /// Transform along axis 0 (down columns).
    pub fn fft_cols(data: &mut Vec<Complex64>, rows: usize, cols: usize, inverse: bool) {
        let mut t = transpose(data, rows, cols);
        fft_chunks(&mut t, rows, inverse);
        *data = transpose(&t, cols, rows);
    }

    /// Spectral partial derivative along `axis` (0 = rows index, 1 = column index).
    pub fn partial(data: &[Complex64], rows: usize, cols: usize, axis: usize, period: f64) -> Vec<Complex64> {
        let (len, count) = if axis == 0 { (rows, cols) } else { (cols, rows) };
        let mut work = if axis == 0 {
            transpose(data, rows, cols)
        } else {
            data.to_vec()
        };
        fft_chunks(&mut work, len, false);
        let k = wavenumbers(len, period);
        for chunk in 0..count {
            for m in 0..len {
                let v = &mut work[chunk * len + m];
                if is_nyquist(m, len) {
                    *v = Complex64::new(0.0, 0.0);
                } else {
                    *v *= Complex64::new(0.0, k[m]);
                }
            }
        }
        fft_chunks(&mut work, len, true);
        if axis == 0 {
            transpose(&work, cols, rows)
        } else {
            work
        }
    }

    pub fn partial_real(data: &[f64], rows: usize, cols: usize, axis: usize, period: f64) -> Vec<f64> {
        let c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        partial(&c, rows, cols, axis, period)
            .into_iter()
            .map(|v| v.re)
            .collect()
    }
}
