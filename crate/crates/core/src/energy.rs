//! Energy identity and lower bounds from Fisher lengths and entropies.
//!
//! For a pure state `E = hbar^2 / (8 m delta X^2) + <P_cl^2>/2m + <V>`, so
//! `E >= hbar^2 / (8 m delta X^2) + <V>` with equality for real
//! wavefunctions. Since `delta X <= (2 pi e)^{-1/2} e^S`, also
//! `E >= pi e hbar^2 e^{-2S} / 4m + <V>`. One-parameter families are
//! minimized by golden-section search in the logarithm of the parameter.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{classical_estimate, Basis};
use crate::error::{Error, Result};
use crate::fisher::{self, DivergenceFlag};
use crate::relations::pure_information;
use crate::spectral;
use crate::state::{Constants, GridPureState, GridSpec, Observable, ProbabilityDensity, Support};

/// Potential energy term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Potential {
    /// `-Z q^2 / |x|`.
    Coulomb { z: f64, q: f64 },
    /// `m omega^2 x^2 / 2`, with `m` and `omega` from the constants.
    Harmonic,
    /// `m g x` for `x >= 0`, an infinite wall for `x < 0`.
    LinearGravity { g: f64 },
    /// Samples on a grid, used as given.
    Sampled { grid: GridSpec, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub potential: Potential,
    pub constants: Constants,
}

impl EnergyModel {
    pub fn harmonic(constants: Constants) -> Self {
        EnergyModel {
            potential: Potential::Harmonic,
            constants,
        }
    }

    pub fn bouncer(g: f64, constants: Constants) -> Self {
        EnergyModel {
            potential: Potential::LinearGravity { g },
            constants,
        }
    }

    pub fn coulomb(z: f64, q: f64, constants: Constants) -> Self {
        EnergyModel {
            potential: Potential::Coulomb { z, q },
            constants,
        }
    }

    fn kinetic_scale(&self) -> f64 {
        self.constants.hbar.powi(2) / (8.0 * self.constants.mass)
    }

    /// `<V>` for a grid density.
    pub fn potential_mean(&self, density: &ProbabilityDensity) -> Result<f64> {
        let g = match density.support {
            Support::Line(g) => g,
            _ => return Err(Error::Unsupported("potential energy of a non-line density")),
        };
        let m = self.constants.mass;
        let xs = g.points();
        let dx = g.dx();
        match &self.potential {
            Potential::Harmonic => {
                let w = self.constants.omega;
                Ok(0.5 * m * w * w * density.raw_moment(2))
            }
            Potential::LinearGravity { g: acc } => {
                let leak: f64 = xs
                    .iter()
                    .zip(&density.values)
                    .filter(|(x, _)| **x < 0.0)
                    .map(|(_, p)| p * dx)
                    .sum();
                if leak > 1e-10 {
                    return Err(Error::InvalidState(format!(
                        "{leak:.3e} of the density lies behind the wall at x = 0"
                    )));
                }
                Ok(m * acc * density.raw_moment(1))
            }
            Potential::Coulomb { z, q } => {
                let values: Vec<Complex64> = density.values.iter().map(|p| Complex64::new(*p, 0.0)).collect();
                let spec = spectral::spectrum(&values);
                let origin = g.x_min;
                let period = g.length();
                let f = |x: f64| spectral::interpolate_spectrum(&spec, origin, period, x).re;
                let reach = g.x_max.abs().max(g.x_min.abs());
                Ok(-z * q * q * inverse_abs_moment(f, reach))
            }
            Potential::Sampled { grid, values } => {
                if grid != &g || values.len() != density.values.len() {
                    return Err(Error::DimensionMismatch {
                        expected: density.values.len(),
                        actual: values.len(),
                    });
                }
                Ok(values.iter().zip(&density.values).map(|(v, p)| v * p).sum::<f64>() * dx)
            }
        }
    }

    fn potential_at(&self, x: f64) -> f64 {
        let m = self.constants.mass;
        match &self.potential {
            Potential::Harmonic => 0.5 * m * self.constants.omega.powi(2) * x * x,
            Potential::LinearGravity { g } => {
                if x < 0.0 {
                    f64::INFINITY
                } else {
                    m * g * x
                }
            }
            Potential::Coulomb { z, q } => -z * q * q / x.abs(),
            Potential::Sampled { grid, values } => {
                let t = (x - grid.x_min) / grid.dx();
                let k = t.floor();
                let n = values.len() as i64;
                let i = (k as i64).rem_euclid(n) as usize;
                let j = (k as i64 + 1).rem_euclid(n) as usize;
                let f = t - k;
                values[i] * (1.0 - f) + values[j] * f
            }
        }
    }

    /// `(mass g^2 hbar^2)^{1/3}` for the bouncer, the natural energy unit.
    pub fn bouncer_unit(&self) -> Option<f64> {
        match self.potential {
            Potential::LinearGravity { g } => Some((self.constants.mass * g * g * self.constants.hbar.powi(2)).cbrt()),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Energy identity
// ---------------------------------------------------------------------------

/// `E = hbar^2/(8 m delta X^2) + <P_cl^2>/2m + <V>` against `<H>` from the
/// momentum density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    pub fisher_term: f64,
    pub classical_term: f64,
    pub potential_term: f64,
    pub sum: f64,
    /// `<P^2>/2m + <V>` computed independently.
    pub hamiltonian: f64,
    pub relative_residual: f64,
    pub flag: DivergenceFlag,
}

pub fn energy_identity(state: &GridPureState, model: &EnergyModel) -> Result<EnergyIdentity> {
    let c = &model.constants;
    let (info, _) = pure_information(state);
    let comp = classical_estimate(state, Basis::Position, Observable::P, c)?;
    let density = state.density();
    let fisher_term = model.kinetic_scale() * info;
    let classical_term = comp.second_moment() / (2.0 * c.mass);
    let potential_term = model.potential_mean(&density)?;
    let sum = fisher_term + classical_term + potential_term;
    let kinetic = state.to_momentum(c.hbar).density().raw_moment(2) / (2.0 * c.mass);
    let hamiltonian = kinetic + potential_term;
    Ok(EnergyIdentity {
        fisher_term,
        classical_term,
        potential_term,
        sum,
        hamiltonian,
        relative_residual: (sum - hamiltonian).abs() / hamiltonian.abs().max(f64::MIN_POSITIVE),
        flag: DivergenceFlag::Finite,
    })
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Fisher,
    Entropic,
    CoulombClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    /// Value in units of the model's natural energy, when it has one.
    pub coefficient: Option<f64>,
    pub minimizer: Option<Parameter>,
    /// Exact or independently computed energy the bound should not exceed.
    pub comparison: Option<f64>,
    pub comparison_coefficient: Option<f64>,
    pub flag: DivergenceFlag,
}

impl BoundReport {
    /// `comparison - value`, when a comparison exists.
    pub fn gap(&self) -> Option<f64> {
        self.comparison.map(|c| c - self.value)
    }
}

/// `hbar^2/(8 m delta X^2) + <V>` for a line density, compared with the
/// energy of the real wavefunction `sqrt p` computed through its momentum
/// representation.
pub fn fisher_bound(density: &ProbabilityDensity, model: &EnergyModel) -> Result<BoundReport> {
    let g = match density.support {
        Support::Line(g) => g,
        _ => return Err(Error::Unsupported("Fisher bound of a non-line density")),
    };
    let metrics = fisher::fisher_length(density)?;
    let v = model.potential_mean(density)?;
    let value = model.kinetic_scale() * metrics.fisher_information + v;
    let root = GridPureState::from_unnormalized(
        g,
        density
            .values
            .iter()
            .map(|p| Complex64::new(p.max(0.0).sqrt(), 0.0))
            .collect(),
    )?;
    let kinetic = root.to_momentum(model.constants.hbar).density().raw_moment(2) / (2.0 * model.constants.mass);
    let unit = model.bouncer_unit();
    Ok(BoundReport {
        kind: BoundKind::Fisher,
        value,
        coefficient: unit.map(|u| value / u),
        minimizer: None,
        comparison: Some(kinetic + v),
        comparison_coefficient: unit.map(|u| (kinetic + v) / u),
        flag: metrics.flag,
    })
}

/// `pi e hbar^2 e^{-2S} / 4m + <V>` for a line density.
pub fn entropic_bound_density(density: &ProbabilityDensity, model: &EnergyModel) -> Result<BoundReport> {
    let s = fisher::entropy(density);
    let v = model.potential_mean(density)?;
    let value = PI * E * model.constants.hbar.powi(2) * (-2.0 * s).exp() / (4.0 * model.constants.mass) + v;
    let unit = model.bouncer_unit();
    Ok(BoundReport {
        kind: BoundKind::Entropic,
        value,
        coefficient: unit.map(|u| value / u),
        minimizer: None,
        comparison: None,
        comparison_coefficient: None,
        flag: DivergenceFlag::Finite,
    })
}

/// One-parameter trial densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityFamily {
    /// Centred normal density of width `sigma`.
    Gaussian,
    /// `lambda^{-1} e^{-x/lambda}` on `x >= 0`.
    Exponential,
}

impl DensityFamily {
    fn parameter_name(self) -> &'static str {
        match self {
            DensityFamily::Gaussian => "sigma",
            DensityFamily::Exponential => "lambda",
        }
    }

    fn density(self, s: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| match self {
            DensityFamily::Gaussian => (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt()),
            DensityFamily::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x / s).exp() / s
                }
            }
        }
    }

    fn log_derivative(self, s: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| match self {
            DensityFamily::Gaussian => -x / (s * s),
            DensityFamily::Exponential => -1.0 / s,
        }
    }

    /// Support used for quadrature.
    fn support(self, s: f64) -> (f64, f64) {
        match self {
            DensityFamily::Gaussian => (-14.0 * s, 14.0 * s),
            DensityFamily::Exponential => (0.0, 80.0 * s),
        }
    }

    /// `(Fisher information, entropy, <V>)` by quadrature over the support.
    fn statistics(self, s: f64, model: &EnergyModel) -> (f64, f64, f64) {
        let (a, b) = self.support(s);
        let p = self.density(s);
        let dl = self.log_derivative(s);
        let info = integrate(|x| p(x) * dl(x).powi(2), a, b, 64);
        let entropy = integrate(
            |x| {
                let v = p(x);
                if v > 0.0 {
                    -v * v.ln()
                } else {
                    0.0
                }
            },
            a,
            b,
            64,
        );
        let v = match model.potential {
            Potential::Coulomb { z, q } => -z * q * q * inverse_abs_moment(&p, b.max(-a)),
            _ => integrate(|x| p(x) * model.potential_at(x), a, b, 64),
        };
        (info, entropy, v)
    }
}

/// Exact ground-state energy where one is known.
fn exact_ground(model: &EnergyModel) -> Option<f64> {
    let c = &model.constants;
    match model.potential {
        Potential::Harmonic => Some(c.hbar * c.omega / 2.0),
        Potential::LinearGravity { .. } => {
            let unit = model.bouncer_unit()?;
            Some(0.5f64.cbrt() * airy_first_zero() * unit)
        }
        Potential::Coulomb { z, q } => Some(-z * z * q.powi(4) * c.mass / (2.0 * c.hbar * c.hbar)),
        Potential::Sampled { .. } => None,
    }
}

fn family_bound(model: &EnergyModel, family: DensityFamily, kind: BoundKind) -> Result<BoundReport> {
    let objective = |s: f64| {
        let (info, entropy, v) = family.statistics(s, model);
        let kinetic = match kind {
            BoundKind::Entropic => {
                PI * E * model.constants.hbar.powi(2) * (-2.0 * entropy).exp() / (4.0 * model.constants.mass)
            }
            _ => model.kinetic_scale() * info,
        };
        kinetic + v
    };
    let (s, value) = minimize_positive(objective, 1.0)?;
    let unit = model.bouncer_unit();
    let comparison = exact_ground(model);
    Ok(BoundReport {
        kind,
        value,
        coefficient: unit.map(|u| value / u),
        minimizer: Some(Parameter {
            name: family.parameter_name().to_string(),
            value: s,
        }),
        comparison,
        comparison_coefficient: unit.zip(comparison).map(|(u, c)| c / u),
        flag: DivergenceFlag::Finite,
    })
}

/// Fisher bound minimized over a trial family.
pub fn fisher_bound_family(model: &EnergyModel, family: DensityFamily) -> Result<BoundReport> {
    family_bound(model, family, BoundKind::Fisher)
}

/// Entropic bound minimized over a trial family: Gaussian for the
/// oscillator gives `hbar omega / 2`; exponential for the bouncer gives
/// `(3/2)(pi/2e)^{1/3} (m g^2 hbar^2)^{1/3}`.
pub fn entropic_bound(model: &EnergyModel, family: DensityFamily) -> Result<BoundReport> {
    family_bound(model, family, BoundKind::Entropic)
}

/// `E_0 >= min_u (hbar^2 u^2 / 2m - Z q^2 u)`, using
/// `delta X^{-2} >= 4 <|x|^{-1}>^2` with `u = <|x|^{-1}>`.
pub fn coulomb_groundstate_bound(z: f64, q: f64, constants: &Constants) -> Result<BoundReport> {
    if !(z > 0.0 && q > 0.0) {
        return Err(Error::InvalidState("Coulomb bound needs Z, q > 0".into()));
    }
    let h2 = constants.hbar * constants.hbar;
    let m = constants.mass;
    let (u, value) = minimize_positive(|u| h2 * u * u / (2.0 * m) - z * q * q * u, 1.0)?;
    Ok(BoundReport {
        kind: BoundKind::CoulombClosedForm,
        value,
        coefficient: None,
        minimizer: Some(Parameter {
            name: "inverse_abs_mean".into(),
            value: u,
        }),
        comparison: Some(-z * z * q.powi(4) * m / (2.0 * h2)),
        comparison_coefficient: None,
        flag: DivergenceFlag::Finite,
    })
}

/// Both sides of `delta X^{-2} >= 4 <|x|^{-1}>^2` for a line density. The
/// inequality needs `p` to vanish at the origin, where `sqrt p` has a kink,
/// so the information is taken from `p'^2 / p` directly. Samples where `p`
/// is exactly zero are masked, so grids should straddle the zero.
pub fn romera_check(density: &ProbabilityDensity) -> Result<(f64, f64)> {
    let g = match density.support {
        Support::Line(g) => g,
        _ => return Err(Error::Unsupported("inverse-distance moment of a non-line density")),
    };
    let d = spectral::derivative_real(&density.values, g.length());
    let (info, _) = fisher::masked_information(&density.values, &d, g.dx());
    let values: Vec<Complex64> = density.values.iter().map(|p| Complex64::new(*p, 0.0)).collect();
    let spec = spectral::spectrum(&values);
    let f = |x: f64| spectral::interpolate_spectrum(&spec, g.x_min, g.length(), x).re;
    let u = inverse_abs_moment(f, g.x_max.abs().max(g.x_min.abs()));
    Ok((info, 4.0 * u * u))
}

// ---------------------------------------------------------------------------
// Quadrature, minimization and the Airy zero
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite 32-point Gauss-Legendre on `panels` equal panels.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(32);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in nodes.iter().zip(&weights) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// `int_{|x| > eps} p(x)/|x| dx` over geometric panels out to `reach`.
fn excluded_moment(p: &impl Fn(f64) -> f64, eps: f64, reach: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = eps;
    while lo < reach {
        let hi = (2.0 * lo).min(reach);
        acc += integrate(|x| (p(x) + p(-x)) / x, lo, hi, 2);
        lo = hi;
    }
    acc
}

/// `<|x|^{-1}>`, excluding `(-eps, eps)` for three halvings of `eps` and
/// extrapolating the limit. A logarithmically divergent sequence (density
/// nonzero at the origin) gives infinity.
pub fn inverse_abs_moment(p: impl Fn(f64) -> f64, reach: f64) -> f64 {
    let eps = 1e-3 * reach;
    let s: Vec<f64> = (0..3)
        .map(|k| excluded_moment(&p, eps / f64::powi(2.0, k), reach))
        .collect();
    let d1 = s[1] - s[0];
    let d2 = s[2] - s[1];
    if d2.abs() <= 1e-15 * s[2].abs() {
        return s[2];
    }
    let r = d2 / d1;
    if !(r < 0.75) {
        return f64::INFINITY;
    }
    s[2] + d2 * r / (1.0 - r)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes a unimodal function of a positive parameter: the bracket is
/// found by doubling steps in `ln s` from `start`, then refined by golden
/// section. Returns `(argmin, min)`.
pub fn minimize_positive(f: impl Fn(f64) -> f64, start: f64) -> Result<(f64, f64)> {
    let g = |t: f64| f(t.exp());
    let t0 = start.ln();
    let mut step = 0.5;
    let (mut a, mut b) = (t0, t0 + step);
    let (mut fa, mut fb) = (g(a), g(b));
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
        step = -step;
    }
    let mut c = b + step;
    let mut fc = g(c);
    let mut guard = 0;
    while fc < fb {
        step *= 2.0;
        a = b;
        b = c;
        fb = fc;
        c = b + step;
        fc = g(c);
        guard += 1;
        if guard > 200 {
            return Err(Error::Unsupported("minimizer bracket not found"));
        }
    }
    let (mut lo, mut hi) = if a < c { (a, c) } else { (c, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > 1e-11 * (1.0 + lo.abs().max(hi.abs())) {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t.exp(), g(t)))
}

/// `Ai` at `x0 <= x_start`, integrating `y'' = x y` backwards from the
/// asymptotic form at `x_start`. Backwards is the stable direction for `Ai`.
fn airy_backward(x0: f64) -> f64 {
    let xs: f64 = 6.0;
    let zeta = 2.0 / 3.0 * xs.powf(1.5);
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    // leading corrections of the large-argument expansions
    let y = pre * xs.powf(-0.25) * (1.0 - 5.0 / (72.0 * zeta) + 385.0 / (10368.0 * zeta * zeta));
    let dy = -pre * xs.powf(0.25) * (1.0 + 7.0 / (72.0 * zeta) - 455.0 / (10368.0 * zeta * zeta));
    let steps = ((xs - x0) / 1e-3).ceil() as usize;
    let h = -(xs - x0) / steps as f64;
    let (mut x, mut u, mut v) = (xs, y, dy);
    for _ in 0..steps {
        let k1u = v;
        let k1v = x * u;
        let k2u = v + 0.5 * h * k1v;
        let k2v = (x + 0.5 * h) * (u + 0.5 * h * k1u);
        let k3u = v + 0.5 * h * k2v;
        let k3v = (x + 0.5 * h) * (u + 0.5 * h * k2u);
        let k4u = v + h * k3v;
        let k4v = (x + h) * (u + h * k3u);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        x += h;
    }
    u
}

/// `a_0 > 0` with `Ai(-a_0) = 0`, by bisection on the integrated Airy
/// function over `[1, 3]`.
pub fn airy_first_zero() -> f64 {
    let (mut lo, mut hi) = (1.0, 3.0);
    let f_lo = airy_backward(-lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = airy_backward(-mid);
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Constants {
        Constants::default()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        assert!((integrate(|x| x.sin(), 0.0, PI, 4) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn airy_zero() {
        assert!((airy_first_zero() - 2.338_107_410_459_767).abs() < 1e-8);
    }

    #[test]
    fn golden_section_finds_closed_form() {
        let (s, v) = minimize_positive(|s| 1.0 / (8.0 * s * s) + s * s / 2.0, 3.0).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-8);
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn harmonic_ground_state_identity() {
        let c = Constants::new(0.8, 1.3, 2.0, 1.0).unwrap();
        let s = (c.hbar / (2.0 * c.mass * c.omega)).sqrt();
        let g = GridSpec::centered(256, 16.0).unwrap();
        let psi = GridPureState::gaussian(g, 0.0, s, 0.0).unwrap();
        let model = EnergyModel::harmonic(c);
        let e = energy_identity(&psi, &model).unwrap();
        let q = c.hbar * c.omega / 4.0;
        assert!((e.fisher_term - q).abs() < 1e-10);
        assert!(e.classical_term.abs() < 1e-20);
        assert!((e.potential_term - q).abs() < 1e-10);
        assert!(e.relative_residual < 1e-10);

        let boosted = GridPureState::gaussian(g, 0.0, s, 1.5).unwrap();
        let e = energy_identity(&boosted, &model).unwrap();
        assert!((e.classical_term - (c.hbar * 1.5).powi(2) / (2.0 * c.mass)).abs() < 1e-9);
        assert!(e.relative_residual < 1e-10);
    }

    #[test]
    fn fisher_bound_is_saturated_by_real_states() {
        let c = unit();
        let g = GridSpec::centered(256, 20.0).unwrap();
        let psi = GridPureState::from_fn(g, |x| {
            Complex64::new(
                (-(x - 1.0f64).powi(2)).exp() + 0.5 * (-(x + 1.0f64).powi(2) / 2.0).exp(),
                0.0,
            )
        })
        .unwrap();
        let model = EnergyModel::harmonic(c);
        let b = fisher_bound(&psi.density(), &model).unwrap();
        assert!(b.gap().unwrap().abs() < 1e-8 * b.value.abs());
        let e = entropic_bound_density(&psi.density(), &model).unwrap();
        assert!(e.value <= b.value + 1e-8);
    }

    #[test]
    fn family_bounds() {
        let c = Constants::new(1.0, 2.0, 0.7, 1.0).unwrap();
        let h = entropic_bound(&EnergyModel::harmonic(c), DensityFamily::Gaussian).unwrap();
        assert!((h.value - 0.35).abs() < 1e-9);
        let f = fisher_bound_family(&EnergyModel::harmonic(c), DensityFamily::Gaussian).unwrap();
        assert!((f.value - 0.35).abs() < 1e-9);

        let b = entropic_bound(&EnergyModel::bouncer(1.0, unit()), DensityFamily::Exponential).unwrap();
        let exact = 1.5 * (PI / (2.0 * E)).cbrt();
        assert!((b.coefficient.unwrap() - exact).abs() < 1e-9);
        assert!((b.comparison_coefficient.unwrap() - 1.855_757).abs() < 1e-5);
        let lambda = (PI / (2.0 * E)).cbrt();
        assert!((b.minimizer.unwrap().value - lambda).abs() < 1e-6);

        let fb = fisher_bound_family(&EnergyModel::bouncer(1.0, unit()), DensityFamily::Exponential).unwrap();
        assert!((fb.coefficient.unwrap() - 1.5 * 0.25f64.cbrt()).abs() < 1e-9);
    }

    #[test]
    fn coulomb_bound() {
        let b = coulomb_groundstate_bound(1.0, 1.0, &unit()).unwrap();
        assert!((b.value + 0.5).abs() < 1e-12);
        let b = coulomb_groundstate_bound(2.0, 1.0, &unit()).unwrap();
        assert!((b.value + 2.0).abs() < 1e-11);
        assert!((b.minimizer.unwrap().value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn romera_on_density_vanishing_at_origin() {
        let s = 1.2;
        // a sample exactly at the zero would be masked and lose 2 p''(0) dx
        let h = 30.0 / 1024.0;
        let g = GridSpec::new(512, -15.0 + h, 15.0 + h).unwrap();
        let d = ProbabilityDensity::line_from_fn(g, |x| x * x * (-x * x / (2.0 * s * s)).exp()).unwrap();
        let (lhs, rhs) = romera_check(&d).unwrap();
        assert!((lhs - 3.0 / (s * s)).abs() < 1e-8);
        assert!((rhs - 8.0 / (PI * s * s)).abs() < 1e-8);
        let gauss = ProbabilityDensity::line_from_fn(g, |x| (-x * x).exp()).unwrap();
        assert!(romera_check(&gauss).unwrap().1.is_infinite());
    }

    #[test]
    fn compact_support_kinetic_term_grows() {
        let model = EnergyModel::harmonic(unit());
        let kinetic = |n: usize, f: fn(f64) -> f64| {
            let g = GridSpec::centered(n, 8.0).unwrap();
            let d = ProbabilityDensity::line_from_fn(g, f).unwrap();
            let b = fisher_bound(&d, &model).unwrap();
            b.value - model.potential_mean(&d).unwrap()
        };
        // sqrt p jumps at the edges: linear growth in 1/dx
        let boxed: fn(f64) -> f64 = |x| if x.abs() < 1.0 { 1.0 } else { 0.0 };
        // sqrt p has infinite slope at the edges: logarithmic growth
        let parabola: fn(f64) -> f64 = |x| if x.abs() < 1.0 { 1.0 - x * x } else { 0.0 };
        for f in [boxed, parabola] {
            let k: Vec<f64> = [256, 512, 1024, 2048].iter().map(|n| kinetic(*n, f)).collect();
            assert!(k.windows(2).all(|w| w[1] > w[0] * 1.05), "{k:?}");
        }
        // sqrt p Lipschitz at the edges: the term converges
        let bump: fn(f64) -> f64 = |x| {
            if x.abs() < 1.0 {
                (PI * x / 2.0).cos().powi(2)
            } else {
                0.0
            }
        };
        let k: Vec<f64> = [1024, 2048, 4096].iter().map(|n| kinetic(*n, bump)).collect();
        assert!((k[2] - PI * PI / 8.0).abs() < 1e-2 && (k[2] - k[1]).abs() < (k[1] - k[0]).abs());
    }
}
