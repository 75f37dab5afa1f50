//! Time and frequency for a sampled complex signal `a(t)`.
//!
//! The frequency representation is `A(f) = int a(t) exp(+2 pi i f t) dt`.
//! Against the momentum amplitude with `hbar = 1/(2 pi)` this is
//! `A(f) = phi(-f)`, so frequency plays the role of `-P`. The instantaneous
//! frequency `Im(a* a') / (2 pi |a|^2)` is the classical component of `P`,
//! and under this transform `<f> = -<f_inst>`. Variances are unaffected, so
//! `Delta f_fluc . delta t = (4 pi)^{-1}` holds as for position and momentum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher;
use crate::relations::{
    assemble, check_masked, heisenberg, refined, Check, FisherSide, Provenance, Quantity, RelationId, RelationReport,
    REFINEMENT_LEVELS,
};
use crate::spectral;
use crate::state::{Constants, GridPureState, GridSpec};
use crate::tolerances;

/// `(4 pi)^{-1}`, the time-frequency constant.
pub const TIME_FREQUENCY_CONSTANT: f64 = 1.0 / (4.0 * PI);

/// Relative tolerance on the spacing of sample times.
const UNIFORM_SPACING: f64 = 1e-9;

/// Uniformly sampled signal normalized to `int |a|^2 dt = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub grid: GridSpec,
    pub amplitudes: Vec<Complex64>,
}

impl SignalRecord {
    /// Builds a record from sample times and amplitudes, checking that the
    /// times are uniform and normalizing the amplitudes.
    pub fn new(times: &[f64], amplitudes: Vec<Complex64>) -> Result<Self> {
        if times.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: amplitudes.len(),
            });
        }
        if times.len() < 2 {
            return Err(Error::InvalidGrid("a signal needs at least two samples".into()));
        }
        let n = times.len();
        let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
        for (k, t) in times.iter().enumerate() {
            let expected = times[0] + k as f64 * dt;
            if (t - expected).abs() > UNIFORM_SPACING * dt.abs().max(f64::MIN_POSITIVE) * n as f64 {
                return Err(Error::InvalidGrid(format!(
                    "sample {k} at t = {t} is off the uniform lattice (expected {expected})"
                )));
            }
        }
        let grid = GridSpec::new(n, times[0], times[0] + n as f64 * dt)?;
        Self::on_grid(grid, amplitudes)
    }

    pub fn on_grid(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        let psi = GridPureState::from_unnormalized(grid, amplitudes)?;
        Ok(SignalRecord {
            grid,
            amplitudes: psi.amplitudes().to_vec(),
        })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::on_grid(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.grid.points()
    }

    /// The same samples read as a wavefunction with `hbar = 1/(2 pi)`.
    pub fn as_wavefunction(&self) -> Result<GridPureState> {
        GridPureState::new(self.grid, self.amplitudes.clone())
    }

    /// `(f, A(f))` on the lattice `f = m / T`, ascending.
    pub fn spectrum(&self) -> (Vec<f64>, Vec<Complex64>) {
        let n = self.grid.n_points;
        let dt = self.grid.dx();
        let period = self.grid.length();
        let t0 = self.grid.x_min;
        // sum_k a_k exp(2 pi i m k / n) is n times the inverse DFT
        let mut work = self.amplitudes.clone();
        spectral::fft_inverse(&mut work);
        let mut pairs: Vec<(f64, Complex64)> = (0..n)
            .map(|m| {
                let f = spectral::mode_index(m, n) as f64 / period;
                let f = if n.is_multiple_of(2) && m == n / 2 { -f } else { f };
                let phase = Complex64::from_polar(1.0, 2.0 * PI * f * t0);
                (f, work[m] * (n as f64 * dt) * phase)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    }

    /// `|int |A|^2 df - int |a|^2 dt|`.
    pub fn parseval_residual(&self) -> f64 {
        let (_, a) = self.spectrum();
        let df = 1.0 / self.grid.length();
        let spectral_norm: f64 = a.iter().map(|v| v.norm_sqr()).sum::<f64>() * df;
        let time_norm: f64 = self.amplitudes.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx();
        (spectral_norm - time_norm).abs()
    }
}

/// `f_inst(t)` on the sample times with the probability weights `|a|^2 dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantaneousFrequency {
    pub times: Vec<f64>,
    /// Zero on masked samples.
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub retained: Vec<bool>,
    pub masked_mass: f64,
    pub mean: f64,
    pub variance: f64,
}

impl InstantaneousFrequency {
    /// Largest `|f_inst - target| w / max w` over retained samples.
    pub fn max_weighted_deviation_from(&self, target: impl Fn(f64) -> f64) -> f64 {
        let wmax = self.weights.iter().cloned().fold(0.0, f64::max);
        (0..self.values.len())
            .filter(|k| self.retained[*k])
            .map(|k| (self.values[k] - target(self.times[k])).abs() * self.weights[k] / wmax)
            .fold(0.0, f64::max)
    }
}

/// `Im(a* a') / (2 pi |a|^2)`, free of phase branch cuts.
pub fn instantaneous_frequency(signal: &SignalRecord) -> Result<InstantaneousFrequency> {
    let a = &signal.amplitudes;
    let d = spectral::derivative(a, signal.grid.length());
    let dt = signal.grid.dx();
    let p: Vec<f64> = a.iter().map(|v| v.norm_sqr()).collect();
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let retained: Vec<bool> = p
        .iter()
        .map(|v| *v >= tolerances::DENSITY_MASK * pmax && *v > 0.0)
        .collect();
    let values: Vec<f64> = (0..a.len())
        .map(|k| {
            if retained[k] {
                (a[k].conj() * d[k]).im / (2.0 * PI * p[k])
            } else {
                0.0
            }
        })
        .collect();
    let weights: Vec<f64> = p.iter().map(|v| v * dt).collect();
    let total: f64 = weights.iter().sum();
    let masked: f64 = weights
        .iter()
        .zip(&retained)
        .filter(|(_, r)| !**r)
        .map(|(w, _)| w)
        .sum::<f64>()
        / total;
    check_masked(masked)?;
    let mean: f64 = values.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let kept: f64 = weights.iter().zip(&retained).filter(|(_, r)| **r).map(|(w, _)| w).sum();
    let variance = values
        .iter()
        .zip(&weights)
        .zip(&retained)
        .filter(|(_, r)| **r)
        .map(|((v, w), _)| (v - mean).powi(2) * w)
        .sum::<f64>()
        + (1.0 - kept) * mean * mean;
    Ok(InstantaneousFrequency {
        times: signal.times(),
        values,
        weights,
        retained,
        masked_mass: masked,
        mean,
        variance: variance.max(0.0),
    })
}

/// Mean and variance of `f` under `|A(f)|^2`.
fn frequency_moments(signal: &SignalRecord) -> (f64, f64) {
    let (f, a) = signal.spectrum();
    let df = 1.0 / signal.grid.length();
    let w: Vec<f64> = a.iter().map(|v| v.norm_sqr() * df).collect();
    let total: f64 = w.iter().sum();
    let mean = f.iter().zip(&w).map(|(f, w)| f * w).sum::<f64>() / total;
    let var = f.iter().zip(&w).map(|(f, w)| (f - mean).powi(2) * w).sum::<f64>() / total;
    (mean, var)
}

/// `1 / delta t^2 = int (p')^2 / p` with `p' = 2 Re(a* a')`.
fn fisher_time(signal: &SignalRecord) -> (f64, f64) {
    let a = &signal.amplitudes;
    let d = spectral::derivative(a, signal.grid.length());
    let p: Vec<f64> = a.iter().map(|v| v.norm_sqr()).collect();
    let grad: Vec<f64> = a.iter().zip(&d).map(|(a, v)| 2.0 * (a.conj() * v).re).collect();
    fisher::masked_information(&p, &grad, signal.grid.dx())
}

/// `Delta f_fluc . delta t = (4 pi)^{-1}` with `Delta f_fluc^2 = Var f - Var f_inst`.
pub fn verify_time_frequency(signal: &SignalRecord, tolerance: f64) -> Result<RelationReport> {
    let inst = instantaneous_frequency(signal)?;
    let (mean_f, var_f) = frequency_moments(signal);
    let (info, masked) = fisher_time(signal);
    check_masked(masked)?;
    let times = signal.times();
    let weights = &inst.weights;
    let mean_t: f64 = times.iter().zip(weights).map(|(t, w)| t * w).sum();
    let var_t: f64 = times.iter().zip(weights).map(|(t, w)| (t - mean_t).powi(2) * w).sum();
    let fluc = (var_f - inst.variance).max(0.0).sqrt();
    let checks = vec![
        heisenberg(
            "time-frequency",
            var_t.sqrt(),
            var_f.sqrt(),
            TIME_FREQUENCY_CONSTANT,
            tolerance,
        ),
        // A(f) = phi(-f): the spectral mean mirrors the instantaneous one
        Check::equality(
            "mean-frequency-mirrors-instantaneous",
            mean_f,
            -inst.mean,
            tolerance * var_f.sqrt().max(f64::MIN_POSITIVE),
        ),
    ];
    let side = if info > 0.0 {
        FisherSide::Length(info.powf(-0.5))
    } else {
        FisherSide::Infinite
    };
    let mut report = assemble(
        RelationId::TimeFrequency,
        ("delta_t", "delta_f_fluc"),
        side,
        fluc,
        TIME_FREQUENCY_CONSTANT,
        true,
        tolerance,
        checks,
        Provenance {
            grid_points: Some(signal.grid.n_points),
            masked_mass: masked,
            notes: vec!["A(f) = int a(t) exp(+2 pi i f t) dt".into()],
            ..Default::default()
        },
    );
    report.left.push(Quantity {
        name: "delta_f".into(),
        value: Some(var_f.sqrt()),
    });
    report.left.push(Quantity {
        name: "var_f_inst".into(),
        value: Some(inst.variance),
    });
    Ok(report)
}

/// [`verify_time_frequency`] on `grid` and three successive halvings of the
/// time step. A signal with a jump (a causal pulse, say) gives a vanishing
/// `delta t` and a growing `Delta f`.
pub fn verify_time_frequency_refined(
    grid: &GridSpec,
    build: impl Fn(&GridSpec) -> Result<SignalRecord>,
    tolerance: f64,
) -> Result<RelationReport> {
    let mut levels = vec![*grid];
    for _ in 1..REFINEMENT_LEVELS {
        let next = levels.last().expect("nonempty").refined();
        levels.push(next);
    }
    refined(&levels, |g| {
        let s = build(g)?;
        let report = verify_time_frequency(&s, tolerance)?;
        let len = fisher_time(&s).0.powf(-0.5);
        let spread = frequency_moments(&s).1.sqrt();
        Ok((report, len, spread))
    })
}

/// Constants that carry a signal onto the position-momentum relation.
pub fn signal_constants() -> Constants {
    Constants::with_hbar(1.0 / (2.0 * PI))
}
