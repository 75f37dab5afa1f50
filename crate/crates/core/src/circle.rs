//! Phase-space densities on the circle for states given over integer labels.
//!
//! For a rotator the phase wavefunction is `(2 pi)^{-1/2} sum_j psi_j e^{i j phi}`;
//! for a single mode the phase kets give `<phi|n> = (2 pi)^{-1/2} e^{-i n phi}`.
//! Both are handled by collecting the density matrix along its diagonals,
//! `P_d = sum_{a - b = d} rho_ab`, and summing a trigonometric polynomial
//! with frequency `s d` (`s = +1` rotator, `s = -1` photon number).
//!
//! Every quantity here is a trigonometric polynomial of degree `D` (the label
//! span), so sampling on more than `2D + 1` points is exact. The samples sit
//! on a half-shifted grid so that `phi = 0` and `phi = pi` are never hit.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::spectral;
use crate::state::{CircleGrid, ModeContent};

/// Label-to-phase convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PhaseSign {
    /// `e^{+i j phi}`, plane rotator.
    Rotator,
    /// `e^{-i n phi}`, canonical phase of a single mode.
    Number,
}

impl PhaseSign {
    fn value(self) -> i64 {
        match self {
            PhaseSign::Rotator => 1,
            PhaseSign::Number => -1,
        }
    }
}

/// Samples on the circle of the density `p`, its derivative `p'`, the
/// symmetrized numerator `<phi|L rho + rho L|phi>/2` and `<phi|L rho L|phi>`,
/// all in units of the bare label `L` (no `hbar`).
#[derive(Debug, Clone)]
pub(crate) struct CircleProfile {
    pub grid: CircleGrid,
    pub density: Vec<f64>,
    pub derivative: Vec<f64>,
    pub numerator: Vec<f64>,
    pub second: Vec<f64>,
}

/// Number of phase samples for a label span `span` (= number of labels - 1).
pub(crate) fn sample_count(span: usize) -> usize {
    (8 * (span + 1)).max(1024).next_power_of_two()
}

pub(crate) fn profile(content: &ModeContent, first_label: i64, sign: PhaseSign) -> CircleProfile {
    profile_with(content, first_label, sign, sample_count(content.len() - 1))
}

pub(crate) fn profile_with(content: &ModeContent, first_label: i64, sign: PhaseSign, samples: usize) -> CircleProfile {
    let n = content.len();
    let span = n as i64 - 1;
    let grid = CircleGrid::half_shifted(samples);
    let s = sign.value();

    let width = (2 * span + 1) as usize;
    let mut pd = vec![Complex64::new(0.0, 0.0); width];
    let mut qd = pd.clone();
    let mut rd = pd.clone();
    for a in 0..n {
        let la = (first_label + a as i64) as f64;
        for b in 0..n {
            let lb = (first_label + b as i64) as f64;
            let rho = content.element(a, b);
            let idx = (a as i64 - b as i64 + span) as usize;
            pd[idx] += rho;
            qd[idx] += rho * (0.5 * (la + lb));
            rd[idx] += rho * (la * lb);
        }
    }

    // coefficient c_d multiplies e^{i s d phi}; sum over the shifted grid via FFT
    let synth = |coef: &[Complex64], deriv: bool| -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); samples];
        for (idx, c) in coef.iter().enumerate() {
            let d = idx as i64 - span;
            let freq = s * d;
            let mut c = *c * Complex64::from_polar(1.0, freq as f64 * grid.offset);
            if deriv {
                c *= Complex64::new(0.0, freq as f64);
            }
            buf[freq.rem_euclid(samples as i64) as usize] += c;
        }
        spectral::fft_inverse(&mut buf);
        let scale = samples as f64 / (2.0 * PI);
        buf.iter().map(|v| v.re * scale).collect()
    };

    CircleProfile {
        grid,
        density: synth(&pd, false),
        derivative: synth(&pd, true),
        numerator: synth(&qd, false),
        second: synth(&rd, false),
    }
}
