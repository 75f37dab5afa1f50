//! Both sides of each exact uncertainty relation, and the Heisenberg-type
//! inequalities they imply, packaged as [`RelationReport`]s.
//!
//! Nonclassical spreads are always `Var B - Var B_cl`, with `Var B` taken
//! from the observable's own representation. Fisher lengths of grid states
//! use `p' = 2 Re psi* psi'`. Inequalities are one-sided:
//! `lhs >= rhs - tol |rhs|`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{self, CircleProfile, PhaseSign};
use crate::decomposition::{classical_estimate, decomposition_summary, Basis, StateRef};
use crate::error::{Error, Result};
use crate::fisher::{
    self, collision_length, information_matrix, invert_information, masked_information, periodic_metrics, study_from,
    DivergenceFlag, RefinementStudy,
};
use crate::mub::{complementarity_check, measurement_distribution, MubSet};
use crate::spectral;
use crate::state::{
    Constants, FiniteState, FockState, GridMixedState, GridPureState, GridPureState2, GridSpec, ModeContent,
    Observable, PeriodicState, ProbabilityDensity,
};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationId {
    PositionMomentum,
    Conjugate,
    PhaseAngular,
    PhaseNumber,
    General,
    Multidim,
    Ivanovic,
    TimeFrequency,
}

impl RelationId {
    pub fn name(self) -> &'static str {
        match self {
            RelationId::PositionMomentum => "position-momentum",
            RelationId::Conjugate => "conjugate",
            RelationId::PhaseAngular => "phase-angular",
            RelationId::PhaseNumber => "phase-number",
            RelationId::General => "general",
            RelationId::Multidim => "multidim",
            RelationId::Ivanovic => "ivanovic",
            RelationId::TimeFrequency => "time-frequency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equality,
    InequalitySatisfied,
    /// One side is infinite and its partner is zero (pure states) or
    /// divergent under refinement.
    FlaggedInfinite,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Equality,
    AtLeast,
}

/// A named scalar; `None` stands for a flagged (zero or infinite) value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: Option<f64>,
}

fn q(name: &str, value: f64) -> Quantity {
    Quantity {
        name: name.to_string(),
        value: Some(value),
    }
}

fn flagged(name: &str) -> Quantity {
    Quantity {
        name: name.to_string(),
        value: None,
    }
}

/// An auxiliary identity or inequality evaluated alongside a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// Relative deviation for equalities; relative shortfall `(rhs - lhs)/|rhs|`
    /// for inequalities (negative means slack).
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn scale_of(rhs: f64) -> f64 {
    if rhs.abs() > 0.0 {
        rhs.abs()
    } else {
        1.0
    }
}

impl Check {
    pub fn equality(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (lhs - rhs).abs() / scale_of(rhs);
        Check {
            name: name.to_string(),
            kind: CheckKind::Equality,
            lhs,
            rhs,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// `lhs >= rhs`, accepted down to `rhs - tolerance |rhs|`.
    pub fn at_least(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = (rhs - lhs) / scale_of(rhs);
        Check {
            name: name.to_string(),
            kind: CheckKind::AtLeast,
            lhs,
            rhs,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// `lhs - rhs` for inequality checks.
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

/// Grid sizes, cutoffs and masking behind a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid_points: Option<usize>,
    pub cutoff: Option<usize>,
    pub masked_mass: f64,
    /// Fisher lengths under refinement, when a refinement study was run.
    pub refinement: Option<RefinementStudy>,
    /// The partner spread (total, not nonclassical) at the same refinements.
    pub partner_spreads: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: RelationId,
    pub left: Vec<Quantity>,
    pub right: Vec<Quantity>,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub provenance: Provenance,
}

impl RelationReport {
    /// Verdict is not `Violated` and every auxiliary check passed.
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Violated && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn left_value(&self, name: &str) -> Option<f64> {
        self.left.iter().find(|v| v.name == name).and_then(|v| v.value)
    }
}

/// How the Fisher side of a relation came out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum FisherSide {
    Length(f64),
    Infinite,
    Zero { partner_divergent: bool },
}

/// Shared verdict logic for `length * spread = constant` (pure) or
/// `>= constant` (mixed).
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    relation: RelationId,
    names: (&str, &str),
    side: FisherSide,
    spread: f64,
    constant: f64,
    pure: bool,
    tolerance: f64,
    checks: Vec<Check>,
    provenance: Provenance,
) -> RelationReport {
    let (len_name, spread_name) = names;
    let (left, residual, verdict) = match side {
        FisherSide::Length(len) => {
            let product = len * spread;
            let left = vec![q(len_name, len), q(spread_name, spread), q("product", product)];
            if pure {
                let r = (product - constant).abs() / constant;
                let v = if r <= tolerance {
                    Verdict::Equality
                } else {
                    Verdict::Violated
                };
                (left, r, v)
            } else {
                let r = (constant - product) / constant;
                let v = if r <= tolerance {
                    Verdict::InequalitySatisfied
                } else {
                    Verdict::Violated
                };
                (left, r, v)
            }
        }
        FisherSide::Infinite => {
            let left = vec![flagged(len_name), q(spread_name, spread), flagged("product")];
            // a pure state must pair an infinite length with a vanishing
            // spread; compared at the level of variances
            let r = (spread / constant).powi(2);
            let v = if !pure || r <= tolerance {
                Verdict::FlaggedInfinite
            } else {
                Verdict::Violated
            };
            (left, if pure { r } else { 0.0 }, v)
        }
        FisherSide::Zero { partner_divergent } => {
            let left = vec![flagged(len_name), flagged(spread_name), flagged("product")];
            let v = if partner_divergent {
                Verdict::FlaggedInfinite
            } else {
                Verdict::Violated
            };
            (left, 0.0, v)
        }
    };
    RelationReport {
        relation,
        left,
        right: vec![q("constant", constant)],
        residual,
        tolerance,
        verdict,
        checks,
        provenance,
    }
}

pub(crate) fn heisenberg(name: &str, a: f64, b: f64, constant: f64, tolerance: f64) -> Check {
    Check::at_least(name, a * b, constant, tolerance)
}

/// Fisher information of `|psi|^2` with `p' = 2 Re psi* psi'`.
pub(crate) fn pure_information(psi: &GridPureState) -> (f64, f64) {
    let d = psi.derivative();
    let grad: Vec<f64> = psi
        .amplitudes()
        .iter()
        .zip(&d)
        .map(|(a, v)| 2.0 * (a.conj() * v).re)
        .collect();
    masked_information(&psi.density_values(), &grad, psi.grid().dx())
}

pub(crate) fn check_masked(masked: f64) -> Result<()> {
    if masked > tolerances::MAX_MASKED_FRACTION {
        return Err(Error::VanishingDensity {
            masked_fraction: masked,
        });
    }
    Ok(())
}

/// `hbar^2/4 dX^-2 + <B_cl^2> = int |<x|B rho|x>|^2 / <x|rho|x> <= <B^2>` for a
/// density matrix expressed in the measured basis. `rho` must be sampled in
/// that basis, so `<x|B rho|x> = -+ i hbar d_x rho(x, x')`.
fn mixed_chain(
    rho: &GridMixedState,
    classical_second: f64,
    total_second: f64,
    hbar: f64,
    tolerance: f64,
    labels: (&str, &str),
) -> Result<(f64, f64, Vec<Check>)> {
    let metrics = fisher::fisher_length_mixed(rho)?;
    let d = rho.diagonal_row_derivative();
    let p = rho.density_values();
    let max = p.iter().cloned().fold(0.0, f64::max);
    let floor = tolerances::DENSITY_MASK * max;
    let middle: f64 = p
        .iter()
        .zip(&d)
        .filter(|(v, _)| **v >= floor && **v > 0.0)
        .map(|(v, dv)| hbar * hbar * dv.norm_sqr() / v)
        .sum::<f64>()
        * rho.grid().dx();
    let left = hbar * hbar * metrics.fisher_information / 4.0 + classical_second;
    let checks = vec![
        Check::equality(labels.0, left, middle, tolerance),
        Check::at_least(labels.1, total_second, middle, tolerance),
    ];
    Ok((metrics.fisher_information, metrics.masked_mass, checks))
}

/// `delta X . Delta P_nc = hbar/2` for pure grid states, and
/// `>= hbar/2` together with its chain of inequalities for density matrices.
/// Also checks `Delta X . Delta P >= hbar/2`.
pub fn verify_position_momentum<'a>(
    state: impl Into<StateRef<'a>>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let state = state.into();
    let hbar = constants.hbar;
    let summary = decomposition_summary(state, Basis::Position, Observable::P, constants)?;
    let var_nc = (summary.var_total - summary.var_classical).max(0.0);
    let (info, masked, var_x, pure, n, mut checks) = match state {
        StateRef::GridPure(psi) => {
            let (info, masked) = pure_information(psi);
            (
                info,
                masked,
                psi.density().variance(),
                true,
                psi.grid().n_points,
                vec![],
            )
        }
        StateRef::GridMixed(rho) => {
            let comp = classical_estimate(rho, Basis::Position, Observable::P, constants)?;
            let mom = rho.momentum_density(hbar);
            let (info, masked, checks) = mixed_chain(
                rho,
                comp.second_moment(),
                mom.raw_moment(2),
                hbar,
                tolerance,
                ("fisher-plus-classical-equals-local", "local-below-second-moment"),
            )?;
            (
                info,
                masked,
                rho.density().variance(),
                false,
                rho.grid().n_points,
                checks,
            )
        }
        _ => return Err(Error::Unsupported("position-momentum relation needs a grid state")),
    };
    check_masked(masked)?;
    checks.push(heisenberg(
        "heisenberg",
        var_x.sqrt(),
        summary.var_total.max(0.0).sqrt(),
        hbar / 2.0,
        tolerance,
    ));
    checks.push(Check::equality(
        "variance-additivity",
        summary.var_classical + summary.var_nonclassical,
        summary.var_total,
        tolerance,
    ));
    let provenance = Provenance {
        grid_points: Some(n),
        masked_mass: masked,
        ..Default::default()
    };
    Ok(assemble(
        RelationId::PositionMomentum,
        ("delta_x", "spread_p_nc"),
        FisherSide::Length(info.powf(-0.5)),
        var_nc.sqrt(),
        hbar / 2.0,
        pure,
        tolerance,
        checks,
        provenance,
    ))
}

/// `Delta X_nc . delta P = hbar/2` (pure) or `>= hbar/2` (mixed), with the
/// momentum representation playing the role of the measured basis.
pub fn verify_conjugate<'a>(
    state: impl Into<StateRef<'a>>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let state = state.into();
    let hbar = constants.hbar;
    let summary = decomposition_summary(state, Basis::Momentum, Observable::X, constants)?;
    let var_nc = (summary.var_total - summary.var_classical).max(0.0);
    let (info, masked, var_p, pure, n, mut checks) = match state {
        StateRef::GridPure(psi) => {
            let mom = psi.to_momentum(hbar);
            let (info, masked) = pure_information(&mom.state);
            (
                info,
                masked,
                mom.density().variance(),
                true,
                psi.grid().n_points,
                vec![],
            )
        }
        StateRef::GridMixed(rho) => {
            let pgrid = rho.grid().momentum_grid(hbar);
            let rho_p = GridMixedState::from_matrix(pgrid, rho.momentum_matrix(hbar))?;
            let comp = classical_estimate(rho, Basis::Momentum, Observable::X, constants)?;
            let (info, masked, checks) = mixed_chain(
                &rho_p,
                comp.second_moment(),
                rho.density().raw_moment(2),
                hbar,
                tolerance,
                ("fisher-plus-classical-equals-local", "local-below-second-moment"),
            )?;
            (
                info,
                masked,
                rho_p.density().variance(),
                false,
                rho.grid().n_points,
                checks,
            )
        }
        _ => return Err(Error::Unsupported("conjugate relation needs a grid state")),
    };
    check_masked(masked)?;
    checks.push(heisenberg(
        "heisenberg",
        var_p.sqrt(),
        summary.var_total.max(0.0).sqrt(),
        hbar / 2.0,
        tolerance,
    ));
    let provenance = Provenance {
        grid_points: Some(n),
        masked_mass: masked,
        ..Default::default()
    };
    Ok(assemble(
        RelationId::Conjugate,
        ("delta_p", "spread_x_nc"),
        FisherSide::Length(info.powf(-0.5)),
        var_nc.sqrt(),
        hbar / 2.0,
        pure,
        tolerance,
        checks,
        provenance,
    ))
}

/// Number of refinement levels (three refinements of the starting grid).
pub const REFINEMENT_LEVELS: usize = 4;

/// Runs `single` on each level and flags the Fisher side as zero when the
/// lengths keep shrinking; the partner must then grow at every step.
pub(crate) fn refined(
    levels: &[GridSpec],
    single: impl Fn(&GridSpec) -> Result<(RelationReport, f64, f64)>,
) -> Result<RelationReport> {
    let mut lengths = Vec::with_capacity(levels.len());
    let mut partners = Vec::with_capacity(levels.len());
    let mut last = None;
    for g in levels {
        let (report, len, partner) = single(g)?;
        lengths.push(len);
        partners.push(partner);
        last = Some(report);
    }
    let mut report = last.expect("at least one level");
    let study = study_from(levels.iter().map(|g| g.n_points).collect(), lengths);
    if study.vanishing {
        let divergent = partners.windows(2).all(|w| w[1] > w[0]);
        let names = (report.left[0].name.clone(), report.left[1].name.clone());
        let constant = report.right[0].value.unwrap_or(0.0);
        let rebuilt = assemble(
            report.relation,
            (&names.0, &names.1),
            FisherSide::Zero {
                partner_divergent: divergent,
            },
            0.0,
            constant,
            true,
            report.tolerance,
            vec![],
            Provenance::default(),
        );
        report.left = rebuilt.left;
        report.residual = rebuilt.residual;
        report.verdict = rebuilt.verdict;
        // on the finest grid the discrete identities still hold, but they
        // are not statements about the continuum state
        report.checks.clear();
        report
            .provenance
            .notes
            .push("Fisher length vanishes under refinement; partner spread diverges".into());
    }
    report.provenance.refinement = Some(study);
    report.provenance.partner_spreads = Some(partners);
    Ok(report)
}

/// [`verify_position_momentum`] for a pure state rebuilt on `grid` and
/// three successive halvings of `dx`. A position density with a jump gives
/// a vanishing `delta X` and a growing `Delta P`, reported as flagged.
pub fn verify_position_momentum_refined(
    grid: &GridSpec,
    build: impl Fn(&GridSpec) -> Result<GridPureState>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let mut levels = vec![*grid];
    for _ in 1..REFINEMENT_LEVELS {
        let next = levels.last().expect("nonempty").refined();
        levels.push(next);
    }
    refined(&levels, |g| {
        let psi = build(g)?;
        let report = verify_position_momentum(&psi, constants, tolerance)?;
        let len = pure_information(&psi).0.powf(-0.5);
        let spread = psi.to_momentum(constants.hbar).density().variance().sqrt();
        Ok((report, len, spread))
    })
}

/// Same box centre, twice the length and twice the points.
fn extended(grid: &GridSpec) -> Result<GridSpec> {
    let c = 0.5 * (grid.x_min + grid.x_max);
    let l = grid.length();
    GridSpec::new(2 * grid.n_points, c - l, c + l)
}

/// [`verify_conjugate`] under refinement of the momentum lattice (the box
/// doubles at fixed `dx`). A momentum density with a jump gives a vanishing
/// `delta P` and a growing `Delta X`.
pub fn verify_conjugate_refined(
    grid: &GridSpec,
    build: impl Fn(&GridSpec) -> Result<GridPureState>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let mut levels = vec![*grid];
    for _ in 1..REFINEMENT_LEVELS {
        let next = extended(levels.last().expect("nonempty"))?;
        levels.push(next);
    }
    refined(&levels, |g| {
        let psi = build(g)?;
        let report = verify_conjugate(&psi, constants, tolerance)?;
        let mom = psi.to_momentum(constants.hbar);
        let len = pure_information(&mom.state).0.powf(-0.5);
        let spread = psi.density().variance().sqrt();
        Ok((report, len, spread))
    })
}

fn circle_density(prof: &CircleProfile) -> Result<ProbabilityDensity> {
    ProbabilityDensity::circle(prof.grid, prof.density.clone())
}

fn content_is_pure(content: &ModeContent) -> bool {
    match content {
        ModeContent::Pure(_) => true,
        ModeContent::Mixed(m) => ((m * m).trace().re - 1.0).abs() < 1e-12,
    }
}

/// Circle relation `delta Phi . Delta L_nc = c` with the corollary
/// `Delta_theta Phi . Delta L >= |1 - 2 pi p(theta + pi)| c` at the
/// circular mean.
#[allow(clippy::too_many_arguments)]
fn circle_relation(
    relation: RelationId,
    prof: &CircleProfile,
    var_total: f64,
    var_classical: f64,
    constant: f64,
    pure: bool,
    tolerance: f64,
    names: (&str, &str),
    provenance: Provenance,
) -> Result<RelationReport> {
    let (info, masked) = masked_information(&prof.density, &prof.derivative, prof.grid.spacing());
    check_masked(masked)?;
    let metrics = periodic_metrics(info, masked);
    let spread = (var_total - var_classical).max(0.0).sqrt();
    let density = circle_density(prof)?;
    let theta = fisher::circular_mean(&density);
    let delta_theta = fisher::phase_variance(&density, theta)?.max(0.0).sqrt();
    let factor = (1.0 - 2.0 * PI * fisher::circle_value(&density, theta + PI)?).abs();
    let checks = vec![Check::at_least(
        "heisenberg-phase",
        delta_theta * var_total.max(0.0).sqrt(),
        factor * constant,
        tolerance,
    )];
    let side = match metrics.flag {
        DivergenceFlag::InfiniteByUniformity => FisherSide::Infinite,
        _ => FisherSide::Length(metrics.raw_length()),
    };
    let mut provenance = provenance;
    provenance.masked_mass = masked;
    Ok(assemble(
        relation, names, side, spread, constant, pure, tolerance, checks, provenance,
    ))
}

/// `delta Phi . Delta J_nc = hbar/2` for a plane rotator.
pub fn verify_phase_angular(state: &PeriodicState, constants: &Constants, tolerance: f64) -> Result<RelationReport> {
    let summary = decomposition_summary(state, Basis::Phase, Observable::J, constants)?;
    let prof = circle::profile(state.content(), state.j_min(), PhaseSign::Rotator);
    let provenance = Provenance {
        grid_points: Some(prof.grid.n_points),
        cutoff: Some(state.content().len()),
        ..Default::default()
    };
    circle_relation(
        RelationId::PhaseAngular,
        &prof,
        summary.var_total,
        summary.var_classical,
        constants.hbar / 2.0,
        content_is_pure(state.content()),
        tolerance,
        ("delta_phi", "spread_j_nc"),
        provenance,
    )
}

/// [`verify_phase_angular`] on states rebuilt with mode bound `bound`,
/// `2 bound`, `4 bound`, `8 bound`. A phase density with a jump gives a
/// vanishing `delta Phi` and a growing `Delta J`.
pub fn verify_phase_angular_refined(
    bound: i64,
    build: impl Fn(i64) -> Result<PeriodicState>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let mut lengths = Vec::new();
    let mut partners = Vec::new();
    let mut sizes = Vec::new();
    let mut last = None;
    for k in 0..REFINEMENT_LEVELS {
        let st = build(bound << k)?;
        let prof = circle::profile(st.content(), st.j_min(), PhaseSign::Rotator);
        let (info, _) = masked_information(&prof.density, &prof.derivative, prof.grid.spacing());
        lengths.push(info.powf(-0.5));
        partners.push(
            decomposition_summary(&st, Basis::Phase, Observable::J, constants)?
                .var_total
                .max(0.0)
                .sqrt(),
        );
        sizes.push(st.content().len());
        last = Some(verify_phase_angular(&st, constants, tolerance)?);
    }
    let mut report = last.expect("levels");
    let study = study_from(sizes, lengths);
    if study.vanishing {
        let divergent = partners.windows(2).all(|w| w[1] > w[0]);
        let rebuilt = assemble(
            RelationId::PhaseAngular,
            ("delta_phi", "spread_j_nc"),
            FisherSide::Zero {
                partner_divergent: divergent,
            },
            0.0,
            constants.hbar / 2.0,
            true,
            tolerance,
            vec![],
            Provenance::default(),
        );
        report.left = rebuilt.left;
        report.residual = rebuilt.residual;
        report.verdict = rebuilt.verdict;
        report.checks.clear();
    }
    report.provenance.refinement = Some(study);
    report.provenance.partner_spreads = Some(partners);
    Ok(report)
}

fn phase_number_once(state: &FockState, tolerance: f64) -> Result<RelationReport> {
    let unit = Constants::default();
    let summary = decomposition_summary(state, Basis::Phase, Observable::N, &unit)?;
    let prof = circle::profile(state.content(), 0, PhaseSign::Number);
    let provenance = Provenance {
        grid_points: Some(prof.grid.n_points),
        cutoff: Some(state.cutoff()),
        ..Default::default()
    };
    circle_relation(
        RelationId::PhaseNumber,
        &prof,
        summary.var_total,
        summary.var_classical,
        0.5,
        state.is_pure() || content_is_pure(state.content()),
        tolerance,
        ("delta_phi", "spread_n_nc"),
        provenance,
    )
}

/// `delta Phi . Delta N_nc = 1/2` for the canonical phase of a single mode,
/// with `Delta N_nc^2 = Var N - Var N_cl`. The relation is re-evaluated at
/// twice the cutoff; a relative shift above `tolerance` is `CutoffTooSmall`.
pub fn verify_phase_number(state: &FockState, tolerance: f64) -> Result<RelationReport> {
    let mut report = phase_number_once(state, tolerance)?;
    let doubled = phase_number_once(&state.with_cutoff(2 * state.cutoff().max(1))?, tolerance)?;
    // the product is 1/2 for any truncation of a pure state, so the cutoff
    // study looks at the two factors separately
    let mut shift: Option<f64> = None;
    for name in ["delta_phi", "spread_n_nc"] {
        if let (Some(a), Some(b)) = (report.left_value(name), doubled.left_value(name)) {
            let s = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            shift = Some(shift.map_or(s, |t: f64| t.max(s)));
        }
    }
    if let Some(shift) = shift {
        if shift > tolerance {
            return Err(Error::CutoffTooSmall {
                cutoff: state.cutoff(),
                relative_shift: shift,
            });
        }
        report
            .provenance
            .notes
            .push(format!("relative shift under cutoff doubling: {shift:.3e}"));
    }
    Ok(report)
}

fn hermitian_check(m: &DMatrix<Complex64>, d: usize, what: &'static str) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: m.nrows(),
        });
    }
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    if (m - m.adjoint()).iter().any(|v| v.norm() > 1e-12 * scale) {
        return Err(Error::InvalidState(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// Spectral projectors of a Hermitian matrix, grouping eigenvalues that
/// agree to `1e-10` of the spectral radius.
fn projectors(a: &DMatrix<Complex64>) -> Vec<(f64, DMatrix<Complex64>)> {
    let d = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let radius = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut out: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in order {
        let lambda = eig.eigenvalues[i];
        let v = eig.eigenvectors.column(i);
        let proj = v * v.adjoint();
        if lambda - last > 1e-10 * radius || out.is_empty() {
            out.push((lambda, proj));
        } else {
            let entry = out.last_mut().expect("nonempty");
            entry.1 += proj;
        }
        last = lambda;
    }
    out
}

/// `(delta_B A) . Delta B^A_nc >= hbar/2`, equality for pure states, where
/// `(delta_B A)^-2 = sum_a <a|(i/hbar)[B, rho]|a>^2 / <a|rho|a>` over the
/// spectral projectors of `A`.
pub fn verify_general(
    state: &FiniteState,
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    constants: &Constants,
    tolerance: f64,
) -> Result<RelationReport> {
    let d = state.dimension();
    hermitian_check(a, d, "A")?;
    hermitian_check(b, d, "B")?;
    let hbar = constants.hbar;
    let rho = state.matrix();
    let br = b * rho;
    let comm = (&br - rho * b) * Complex64::new(0.0, 1.0 / hbar);
    let b_scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);

    let mut info = 0.0;
    let mut mean_cl = 0.0;
    let mut second_cl = 0.0;
    let mut masked = 0.0;
    for (_, proj) in projectors(a) {
        let p = (&proj * rho).trace().re;
        let pb = &proj * &br;
        if p < tolerances::ZERO_NORM {
            if pb.norm() > 1e-10 * b_scale {
                return Err(Error::VanishingDensity {
                    masked_fraction: p.max(0.0),
                });
            }
            masked += p.max(0.0);
            continue;
        }
        let num = pb.trace().re;
        let c = (&proj * &comm).trace().re;
        let bcl = num / p;
        mean_cl += p * bcl;
        second_cl += p * bcl * bcl;
        info += c * c / p;
    }
    let mean_b = br.trace().re;
    let var_b = (b * &br).trace().re - mean_b * mean_b;
    let var_cl = second_cl - mean_cl * mean_cl;
    let spread = (var_b - var_cl).max(0.0).sqrt();
    let pure = (state.purity() - 1.0).abs() < 1e-12;
    let side = if info * hbar * hbar <= 1e-20 * b_scale * b_scale {
        FisherSide::Infinite
    } else {
        FisherSide::Length(info.powf(-0.5))
    };
    let checks = vec![Check::at_least("classical-below-total", var_b, var_cl, tolerance)];
    let provenance = Provenance {
        grid_points: Some(d),
        masked_mass: masked,
        ..Default::default()
    };
    Ok(assemble(
        RelationId::General,
        ("delta_b_a", "spread_b_nc"),
        side,
        spread,
        hbar / 2.0,
        pure,
        tolerance,
        checks,
        provenance,
    ))
}

/// Position and momentum second-order statistics of a two-particle pure
/// state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceCovariances {
    pub mean_x: [f64; 2],
    pub mean_p: [f64; 2],
    pub cov_x: DMatrix<f64>,
    /// From the momentum-space density.
    pub cov_p: DMatrix<f64>,
    pub cov_p_cl: DMatrix<f64>,
    /// `cov_p - cov_p_cl`.
    pub cov_p_nc: DMatrix<f64>,
    /// `<(P - P_cl)(P - P_cl)^T>` evaluated directly in position space.
    pub cov_p_nc_direct: DMatrix<f64>,
    /// Inverse Fisher information matrix of the position density.
    pub fisher_cov: DMatrix<f64>,
    pub masked_mass: f64,
}

fn lattice_momentum(m: usize, n: usize, length: f64, hbar: f64) -> f64 {
    let k = spectral::mode_index(m, n);
    let k = if n.is_multiple_of(2) && k == (n / 2) as i64 {
        -k
    } else {
        k
    };
    2.0 * PI * hbar * k as f64 / length
}

/// Moments, classical components and Fisher covariance of a 2D pure state.
pub fn phase_space_covariances(psi: &GridPureState2, hbar: f64) -> Result<PhaseSpaceCovariances> {
    let g = *psi.grid();
    let (r, c) = (g.axis1.n_points, g.axis2.n_points);
    let amps = psi.amplitudes();
    let p = psi.density_values();
    let cell = g.cell();
    let d = [psi.partial(0), psi.partial(1)];
    let grads: Vec<Vec<f64>> = d
        .iter()
        .map(|dk| amps.iter().zip(dk).map(|(a, v)| 2.0 * (a.conj() * v).re).collect())
        .collect();
    let (j, masked) = information_matrix(&p, &grads, cell);
    check_masked(masked)?;
    let fisher_cov = invert_information(&j)?;

    let x1 = g.axis1.points();
    let x2 = g.axis2.points();
    let coord = |idx: usize, k: usize| if k == 0 { x1[idx / c] } else { x2[idx % c] };
    let max = p.iter().cloned().fold(0.0, f64::max);
    let floor = tolerances::DENSITY_MASK * max;
    let retained: Vec<bool> = p.iter().map(|v| *v >= floor && *v > 0.0).collect();

    let mut mean_x = [0.0; 2];
    let mut mean_cl = [0.0; 2];
    let pcl: Vec<[f64; 2]> = (0..p.len())
        .map(|idx| {
            if retained[idx] {
                let f = |k: usize| hbar * (amps[idx].conj() * d[k][idx]).im / p[idx];
                [f(0), f(1)]
            } else {
                [0.0, 0.0]
            }
        })
        .collect();
    for idx in 0..p.len() {
        let w = p[idx] * cell;
        for k in 0..2 {
            mean_x[k] += w * coord(idx, k);
            mean_cl[k] += w * pcl[idx][k];
        }
    }
    let mut cov_x = DMatrix::zeros(2, 2);
    let mut cov_cl = DMatrix::zeros(2, 2);
    let mut direct = DMatrix::zeros(2, 2);
    for idx in 0..p.len() {
        let w = p[idx] * cell;
        for a in 0..2 {
            for b in 0..2 {
                cov_x[(a, b)] += w * (coord(idx, a) - mean_x[a]) * (coord(idx, b) - mean_x[b]);
                if retained[idx] {
                    cov_cl[(a, b)] += w * (pcl[idx][a] - mean_cl[a]) * (pcl[idx][b] - mean_cl[b]);
                    // (P - P_cl) psi = -i hbar (Re psi* d psi / |psi|^2) psi
                    let ra = (amps[idx].conj() * d[a][idx]).re;
                    let rb = (amps[idx].conj() * d[b][idx]).re;
                    direct[(a, b)] += hbar * hbar * ra * rb / p[idx] * cell;
                }
            }
        }
    }

    let mut work = amps.to_vec();
    spectral::grid2::fft_cols(&mut work, r, c, false);
    spectral::grid2::fft_rows(&mut work, c, false);
    let dens: Vec<f64> = work.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = dens.iter().sum();
    let (l1, l2) = (g.axis1.length(), g.axis2.length());
    let mom = |idx: usize, k: usize| {
        if k == 0 {
            lattice_momentum(idx / c, r, l1, hbar)
        } else {
            lattice_momentum(idx % c, c, l2, hbar)
        }
    };
    let mut mean_p = [0.0; 2];
    for (idx, w) in dens.iter().enumerate() {
        for k in 0..2 {
            mean_p[k] += w / total * mom(idx, k);
        }
    }
    let mut cov_p = DMatrix::zeros(2, 2);
    for (idx, w) in dens.iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                cov_p[(a, b)] += w / total * (mom(idx, a) - mean_p[a]) * (mom(idx, b) - mean_p[b]);
            }
        }
    }
    let cov_p_nc = &cov_p - &cov_cl;
    Ok(PhaseSpaceCovariances {
        mean_x,
        mean_p,
        cov_x,
        cov_p,
        cov_p_cl: cov_cl,
        cov_p_nc,
        cov_p_nc_direct: direct,
        fisher_cov,
        masked_mass: masked,
    })
}

/// `FCov(X) Cov(P_nc) = (hbar/2)^2 I` for a two-particle pure state, with
/// the volume equality, the additivity `Cov P = Cov P_cl + Cov P_nc` and the
/// matrix inequality `Cov X >= (hbar/2)^2 (Cov P)^-1`.
pub fn verify_multidim(psi: &GridPureState2, constants: &Constants, tolerance: f64) -> Result<RelationReport> {
    let hbar = constants.hbar;
    let cov = phase_space_covariances(psi, hbar)?;
    let target = (hbar / 2.0).powi(2);
    let product = &cov.fisher_cov * &cov.cov_p_nc;
    let residual = (&product - DMatrix::<f64>::identity(2, 2) * target).norm() / target;

    let volume = (cov.fisher_cov.determinant() * cov.cov_p_nc.determinant())
        .max(0.0)
        .sqrt();
    let additivity =
        (&cov.cov_p - &cov.cov_p_cl - &cov.cov_p_nc_direct).norm() / cov.cov_p.norm().max(f64::MIN_POSITIVE);
    let cov_p_inv = cov.cov_p.clone().try_inverse().ok_or(Error::SingularInformation {
        condition: f64::INFINITY,
    })?;
    let slack = &cov.cov_x - cov_p_inv * target;
    let slack = (&slack + slack.transpose()) * 0.5;
    let min_eig = slack.symmetric_eigenvalues().iter().cloned().fold(f64::MAX, f64::min);
    let scale = cov.cov_x.norm();

    let checks = vec![
        Check::equality("volume", volume, target, tolerance),
        Check {
            name: "covariance-additivity".into(),
            kind: CheckKind::Equality,
            lhs: additivity,
            rhs: 0.0,
            residual: additivity,
            tolerance,
            passed: additivity <= tolerance,
        },
        Check::at_least("heisenberg-matrix-min-eigenvalue", min_eig / scale, 0.0, tolerance),
    ];
    let flat = |name: &str, m: &DMatrix<f64>| {
        vec![
            q(&format!("{name}_11"), m[(0, 0)]),
            q(&format!("{name}_12"), m[(0, 1)]),
            q(&format!("{name}_22"), m[(1, 1)]),
        ]
    };
    let mut left = flat("fisher_cov", &cov.fisher_cov);
    left.extend(flat("cov_p_nc", &cov.cov_p_nc));
    left.push(q("volume", volume));
    let g = psi.grid();
    Ok(RelationReport {
        relation: RelationId::Multidim,
        left,
        right: vec![q("constant", target)],
        residual,
        tolerance,
        verdict: if residual <= tolerance {
            Verdict::Equality
        } else {
            Verdict::Violated
        },
        checks,
        provenance: Provenance {
            grid_points: Some(g.len()),
            masked_mass: cov.masked_mass,
            notes: vec![format!("grid {}x{}", g.axis1.n_points, g.axis2.n_points)],
            ..Default::default()
        },
    })
}

/// `sum_i 1/L_i = 1 + tr rho^2` over a complete set of complementary bases,
/// with `L_i` the collision length of the outcome distribution in basis `i`.
pub fn verify_ivanovic(state: &FiniteState, set: &MubSet, tolerance: f64) -> Result<RelationReport> {
    let report = complementarity_check(&set.bases)?;
    if set.bases.len() != state.dimension() + 1 {
        return Err(Error::DimensionMismatch {
            expected: state.dimension() + 1,
            actual: set.bases.len(),
        });
    }
    let mut left = Vec::new();
    let mut sum = 0.0;
    for (i, basis) in set.bases.iter().enumerate() {
        let l = collision_length(&measurement_distribution(state, basis)?);
        left.push(q(&format!("collision_length_{i}"), l));
        sum += 1.0 / l;
    }
    left.push(q("inverse_sum", sum));
    let purity = state.purity();
    let rhs = 1.0 + purity;
    let residual = (sum - rhs).abs();
    Ok(RelationReport {
        relation: RelationId::Ivanovic,
        left,
        right: vec![q("one_plus_purity", rhs)],
        residual,
        tolerance,
        verdict: if residual <= tolerance {
            Verdict::Equality
        } else {
            Verdict::Violated
        },
        checks: vec![Check::at_least("at-most-two", 2.0, sum, tolerance)],
        provenance: Provenance {
            grid_points: Some(state.dimension()),
            notes: vec![format!("complementarity deviation {:.3e}", report.deviation())],
            ..Default::default()
        },
    })
}
