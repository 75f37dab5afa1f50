use std::io::Write;
use std::path::Path;

use exact_uncertainty::decomposition::{classical_estimate, decomposition_summary, energy_split, Basis, StateRef};
use exact_uncertainty::energy::{
    airy_first_zero, coulomb_groundstate_bound, entropic_bound, fisher_bound_family, BoundReport, DensityFamily,
    EnergyModel,
};
use exact_uncertainty::entanglement::{
    build_epr, collapse_momentum, collapse_position, correlation_relation, particle1_summary, EprParams,
};
use exact_uncertainty::fisher::diffusion_entropy_rate;
use exact_uncertainty::mub::{complementarity_check, mub_construct};
use exact_uncertainty::relations::{
    phase_space_covariances, verify_conjugate, verify_general, verify_ivanovic, verify_multidim, verify_phase_angular,
    verify_phase_number, verify_position_momentum, RelationReport,
};
use exact_uncertainty::schema::AnyState;
use exact_uncertainty::signal::{instantaneous_frequency, verify_time_frequency};
use exact_uncertainty::state::{FiniteState, GridSpec, Observable, ProbabilityDensity};
use exact_uncertainty::suite;
use exact_uncertainty::wigner::{wigner_average_momentum, wigner_transform};
use exact_uncertainty::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::{load_signal, load_state};
use crate::{BasisArg, Failure, ModelArg, Outcome, RelationArg, RunConfig};

/// Box length of generated grid states.
const SUITE_BOX: f64 = 64.0;
/// Dimension of the random finite-dimensional pairs in the suite.
const GENERAL_DIMENSION: usize = 5;
/// Dimension of the random states checked against the sum rule.
const IVANOVIC_DIMENSION: usize = 3;
/// Finite-state draws use stream indices above this offset so they never
/// share a stream with grid states.
const FINITE_STREAMS: u64 = 1 << 32;
/// Allowed relative error of the entropy rate at the first step and over the run.
const DIFFUSION_FIRST: f64 = 0.01;
const DIFFUSION_RUN: f64 = 0.02;

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::Input(format!("{}: {e}", path.display()));
    let file = std::fs::File::create(path).map_err(fail)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "{header}").map_err(fail)?;
    for r in rows {
        writeln!(w, "{r}").map_err(fail)?;
    }
    w.flush().map_err(fail)
}

fn grid_meta(g: &GridSpec) -> Value {
    json!({ "n_points": g.n_points, "x_min": g.x_min, "x_max": g.x_max, "dx": g.dx() })
}

fn all_passed<'a>(reports: impl IntoIterator<Item = &'a RelationReport>) -> bool {
    reports.into_iter().all(|r| r.passed())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Entry {
    index: u64,
    family: &'static str,
    report: RelationReport,
}

fn suite_families(relation: Option<RelationArg>) -> Result<Vec<RelationArg>, Failure> {
    let all = vec![
        RelationArg::Xp,
        RelationArg::Px,
        RelationArg::General,
        RelationArg::Ivanovic,
    ];
    match relation {
        None => Ok(all),
        Some(r) if all.contains(&r) => Ok(vec![r]),
        Some(_) => Err(Failure::Input("the random suite has no rotator or Fock states".into())),
    }
}

fn suite_member(cfg: &RunConfig, index: u64, family: RelationArg) -> Result<Entry, Error> {
    let c = cfg.constants()?;
    let tol = cfg.tolerances;
    let grid = || GridSpec::centered(cfg.grid_n, SUITE_BOX);
    let (name, report) = match family {
        RelationArg::Xp => {
            let psi = suite::random_grid_state(cfg.seed, index, grid()?)?;
            ("grid-pure/xp", verify_position_momentum(&psi, &c, tol.grid)?)
        }
        RelationArg::Px => {
            let psi = suite::random_grid_state(cfg.seed, index, grid()?)?;
            ("grid-pure/px", verify_conjugate(&psi, &c, tol.grid)?)
        }
        RelationArg::General => {
            let k = FINITE_STREAMS + 3 * index;
            let st = suite::random_pure_finite(cfg.seed, k, GENERAL_DIMENSION)?;
            let a = suite::random_hermitian(cfg.seed, k + 1, GENERAL_DIMENSION);
            let b = suite::random_hermitian(cfg.seed, k + 2, GENERAL_DIMENSION);
            ("finite/general", verify_general(&st, &a, &b, &c, tol.finite)?)
        }
        RelationArg::Ivanovic => {
            let st = suite::random_pure_finite(cfg.seed, 2 * FINITE_STREAMS + index, IVANOVIC_DIMENSION)?;
            let set = mub_construct(IVANOVIC_DIMENSION)?;
            ("finite/ivanovic", verify_ivanovic(&st, &set, tol.finite)?)
        }
        RelationArg::PhaseAngular | RelationArg::PhaseNumber => unreachable!("filtered by suite_families"),
    };
    Ok(Entry {
        index,
        family: name,
        report,
    })
}

/// Random suite: for each index, the x-p and p-x relations on a random grid
/// state, the generalized relation for a random pair of Hermitian matrices
/// and the sum rule for a random qutrit.
pub fn verify_suite(cfg: &RunConfig, n: usize, relation: Option<RelationArg>) -> Result<Outcome, Failure> {
    let families = suite_families(relation)?;
    let jobs: Vec<(u64, RelationArg)> = (0..n as u64)
        .flat_map(|i| families.iter().map(move |f| (i, *f)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|(i, f)| suite_member(cfg, *i, *f))
        .collect::<Result<Vec<_>, Error>>()?;
    let failed = entries.iter().filter(|e| !e.report.passed()).count();
    Ok(Outcome {
        passed: failed == 0,
        body: json!({
            "suite": "gaussian-random",
            "members": n,
            "reports": to_value(&entries),
            "failed": failed,
        }),
    })
}

fn default_relation(state: &AnyState) -> RelationArg {
    match state {
        AnyState::GridPure(_) | AnyState::GridMixed(_) => RelationArg::Xp,
        AnyState::Periodic(_) => RelationArg::PhaseAngular,
        AnyState::Fock(_) => RelationArg::PhaseNumber,
        AnyState::Finite(_) => RelationArg::Ivanovic,
    }
}

fn verify_state(cfg: &RunConfig, state: &AnyState, relation: RelationArg) -> Result<RelationReport, Failure> {
    let c = cfg.constants()?;
    let tol = cfg.tolerances;
    let mismatch = || {
        Failure::Input(format!(
            "relation {} does not apply to a {:?} state",
            serde_json::to_string(&relation).expect("serializes"),
            state.family()
        ))
    };
    let report = match (relation, state) {
        (RelationArg::Xp, AnyState::GridPure(s)) => verify_position_momentum(s, &c, tol.grid)?,
        (RelationArg::Xp, AnyState::GridMixed(s)) => verify_position_momentum(s, &c, tol.grid)?,
        (RelationArg::Px, AnyState::GridPure(s)) => verify_conjugate(s, &c, tol.grid)?,
        (RelationArg::Px, AnyState::GridMixed(s)) => verify_conjugate(s, &c, tol.grid)?,
        (RelationArg::PhaseAngular, AnyState::Periodic(s)) => verify_phase_angular(s, &c, tol.grid)?,
        (RelationArg::PhaseNumber, AnyState::Fock(s)) => verify_phase_number(s, tol.fock)?,
        (RelationArg::Ivanovic, AnyState::Finite(s)) => verify_ivanovic(s, &mub_construct(s.dimension())?, tol.finite)?,
        _ => return Err(mismatch()),
    };
    Ok(report)
}

pub fn verify_files(
    cfg: &RunConfig,
    paths: &[std::path::PathBuf],
    relation: Option<RelationArg>,
) -> Result<Outcome, Failure> {
    let mut entries = Vec::new();
    for path in paths {
        let state = load_state(path)?;
        let rel = relation.unwrap_or_else(|| default_relation(&state));
        let report = verify_state(cfg, &state, rel)?;
        entries.push((path.display().to_string(), rel, report));
    }
    let passed = all_passed(entries.iter().map(|e| &e.2));
    let reports: Vec<Value> = entries
        .iter()
        .map(|(p, rel, r)| json!({ "source": p, "relation": to_value(rel), "report": to_value(r) }))
        .collect();
    Ok(Outcome {
        passed,
        body: json!({ "reports": reports }),
    })
}

// ---------------------------------------------------------------------------
// decompose, wigner
// ---------------------------------------------------------------------------

fn state_meta(state: &AnyState) -> Value {
    match state {
        AnyState::GridPure(s) => json!({ "family": "grid", "pure": true, "grid": grid_meta(s.grid()) }),
        AnyState::GridMixed(s) => json!({ "family": "grid", "pure": false, "grid": grid_meta(s.grid()) }),
        AnyState::Periodic(s) => json!({ "family": "periodic", "j_min": s.j_min(), "j_max": s.j_max() }),
        AnyState::Fock(s) => json!({ "family": "fock", "cutoff": s.cutoff() }),
        AnyState::Finite(s) => json!({ "family": "finite", "dimension": s.dimension() }),
    }
}

pub fn decompose(cfg: &RunConfig, path: &Path, basis: BasisArg, csv: Option<&Path>) -> Result<Outcome, Failure> {
    let c = cfg.constants()?;
    let state = load_state(path)?;
    let view: StateRef = state
        .as_ref()
        .ok_or(Error::Unsupported("decomposition of a finite-dimensional state"))?;
    let (b, o) = match (&state, basis) {
        (AnyState::GridPure(_) | AnyState::GridMixed(_), BasisArg::Position) => (Basis::Position, Observable::P),
        (AnyState::GridPure(_) | AnyState::GridMixed(_), BasisArg::Momentum) => (Basis::Momentum, Observable::X),
        (AnyState::Periodic(_), _) => (Basis::Phase, Observable::J),
        _ => (Basis::Phase, Observable::N),
    };
    let comp = classical_estimate(view, b, o, &c)?;
    let summary = decomposition_summary(view, b, o, &c)?;
    let energy = match &state {
        AnyState::Fock(s) => Some(to_value(energy_split(s, &c)?)),
        _ => None,
    };
    if let Some(p) = csv {
        let rows = (0..comp.labels.len()).map(|k| {
            format!(
                "{},{},{},{}",
                comp.labels[k], comp.values[k], comp.weights[k], comp.retained[k]
            )
        });
        write_csv(p, "label,value,weight,retained", rows)?;
    }
    Ok(Outcome {
        passed: true,
        body: json!({
            "state": state_meta(&state),
            "basis": to_value(b),
            "observable": to_value(o),
            "classical_mean": comp.mean,
            "classical_variance": comp.variance,
            "source_mean": comp.source_mean,
            "masked_mass": comp.masked_mass,
            "summary": to_value(summary),
            "energy": energy,
        }),
    })
}

pub fn wigner(cfg: &RunConfig, path: &Path, csv: Option<&Path>) -> Result<Outcome, Failure> {
    let c = cfg.constants()?;
    let state = load_state(path)?;
    let view = match &state {
        AnyState::GridPure(s) => StateRef::from(s),
        AnyState::GridMixed(s) => StateRef::from(s),
        _ => return Err(Error::Unsupported("Wigner function of a non-grid state").into()),
    };
    let w = wigner_transform(view, c.hbar)?;
    let pav = wigner_average_momentum(&w)?;
    let pcl = classical_estimate(view, Basis::Position, Observable::P, &c)?;
    let wmax = pcl.weights.iter().cloned().fold(0.0, f64::max);
    let deviation = (0..pav.values.len())
        .filter(|k| pav.retained[*k] && pcl.retained[*k])
        .map(|k| (pav.values[k] - pcl.values[k]).abs() * pcl.weights[k] / wmax)
        .fold(0.0, f64::max);
    if let Some(p) = csv {
        let (xs, ps) = (w.x_grid.points(), w.p_grid.points());
        let np = ps.len();
        let rows = (0..xs.len() * np).map(|k| format!("{},{},{}", xs[k / np], ps[k % np], w.values[k]));
        write_csv(p, "x,p,w", rows)?;
    }
    Ok(Outcome {
        passed: deviation <= cfg.tolerances.grid,
        body: json!({
            "state": state_meta(&state),
            "x_grid": grid_meta(&w.x_grid),
            "p_grid": grid_meta(&w.p_grid),
            "total": w.total(),
            "min": w.min(),
            "imaginary_residue": w.imaginary_residue,
            "box_too_small": w.box_too_small,
            "average_momentum_vs_classical": deviation,
            "masked_mass": pcl.masked_mass,
        }),
    })
}

// ---------------------------------------------------------------------------
// energy-bound, epr-demo
// ---------------------------------------------------------------------------

/// A bound passes when it does not exceed its comparison energy.
fn bound_holds(b: &BoundReport, tol: f64) -> bool {
    b.gap().is_none_or(|g| g >= -tol * b.value.abs().max(1.0))
}

pub fn energy_bound(cfg: &RunConfig, model: ModelArg, g: f64, z: f64, q: f64) -> Result<Outcome, Failure> {
    let c = cfg.constants()?;
    let tol = cfg.tolerances.grid;
    let (bounds, extra) = match model {
        ModelArg::Bouncer => {
            let m = EnergyModel::bouncer(g, c);
            let b = entropic_bound(&m, DensityFamily::Exponential)?;
            (
                vec![b],
                json!({ "airy_first_zero": airy_first_zero(), "energy_unit": m.bouncer_unit() }),
            )
        }
        ModelArg::Harmonic => {
            let m = EnergyModel::harmonic(c);
            let f = fisher_bound_family(&m, DensityFamily::Gaussian)?;
            let e = entropic_bound(&m, DensityFamily::Gaussian)?;
            (vec![f, e], json!({ "ground_energy": c.hbar * c.omega / 2.0 }))
        }
        ModelArg::Coulomb => {
            let b = coulomb_groundstate_bound(z, q, &c)?;
            (vec![b], json!({ "z": z, "q": q }))
        }
    };
    Ok(Outcome {
        passed: bounds.iter().all(|b| bound_holds(b, tol)),
        body: json!({ "model": to_value(model), "bounds": to_value(&bounds), "details": extra }),
    })
}

pub fn epr_demo(cfg: &RunConfig, sigma: f64, tau: f64, p0: f64, a: f64, p: f64, x: f64) -> Result<Outcome, Failure> {
    let c = cfg.constants()?;
    let params = EprParams { a, sigma, tau, p0 };
    let grid = params.default_grid()?;
    let psi = build_epr(&params, grid, &c)?;
    let cov = phase_space_covariances(&psi, c.hbar)?;
    let particle = particle1_summary(&psi, &c)?;
    let corr = correlation_relation(&psi, &c)?;
    let multidim = verify_multidim(&psi, &c, cfg.tolerances.grid)?;
    let by_p = collapse_momentum(&psi, p, &c)?;
    let by_x = collapse_position(&psi, x, &c)?;
    let xd = by_x.state.density();
    Ok(Outcome {
        passed: multidim.passed(),
        body: json!({
            "params": to_value(params),
            "warnings": params.warnings(),
            "grid": { "axis1": grid_meta(&grid.axis1), "axis2": grid_meta(&grid.axis2) },
            "moments": {
                "mean_x": cov.mean_x,
                "mean_p": cov.mean_p,
                "cov_x": to_value(&cov.cov_x),
                "cov_p": to_value(&cov.cov_p),
                "cov_p_cl": to_value(&cov.cov_p_cl),
                "cov_p_nc": to_value(&cov.cov_p_nc),
                "fisher_cov": to_value(&cov.fisher_cov),
                "masked_mass": cov.masked_mass,
            },
            "particle1": to_value(particle),
            "correlations": to_value(&corr),
            "relation": to_value(&multidim),
            "collapse_momentum": {
                "p2": p,
                "mean_p1": by_p.classical.mean,
                "formula": params.collapsed_momentum(p),
                "relative_density": by_p.relative_density,
            },
            "collapse_position": {
                "x2": x,
                "mean_x1": xd.mean(),
                "var_x1": xd.variance(),
                "mean_p1": by_x.classical.mean,
                "relative_density": by_x.relative_density,
            },
        }),
    })
}

// ---------------------------------------------------------------------------
// mub, signal, diffusion
// ---------------------------------------------------------------------------

pub fn mub(cfg: &RunConfig, d: usize, state: &str) -> Result<Outcome, Failure> {
    let set = mub_construct(d)?;
    let st = match state {
        "random" => suite::random_pure_finite(cfg.seed, 0, d)?,
        "mixed" => FiniteState::maximally_mixed(d),
        path => match load_state(Path::new(path))? {
            AnyState::Finite(s) => s,
            other => {
                return Err(Failure::Input(format!(
                    "{path}: expected a finite state, found {:?}",
                    other.family()
                )))
            }
        },
    };
    let comp = complementarity_check(&set.bases)?;
    let report = verify_ivanovic(&st, &set, cfg.tolerances.finite)?;
    Ok(Outcome {
        passed: report.passed() && comp.deviation() <= cfg.tolerances.finite,
        body: json!({
            "dimension": d,
            "bases": set.bases.len(),
            "purity": st.purity(),
            "complementarity": to_value(comp),
            "inverse_sum": report.left_value("inverse_sum"),
            "report": to_value(&report),
        }),
    })
}

pub fn signal(cfg: &RunConfig, path: &Path) -> Result<Outcome, Failure> {
    let record = load_signal(path)?;
    let report = verify_time_frequency(&record, cfg.tolerances.grid)?;
    let inst = instantaneous_frequency(&record)?;
    Ok(Outcome {
        passed: report.passed(),
        body: json!({
            "grid": grid_meta(&record.grid),
            "parseval_residual": record.parseval_residual(),
            "instantaneous_frequency": { "mean": inst.mean, "variance": inst.variance, "masked_mass": inst.masked_mass },
            "report": to_value(&report),
        }),
    })
}

pub fn diffusion(
    cfg: &RunConfig,
    gamma: f64,
    drift: f64,
    dt: f64,
    steps: usize,
    width: f64,
) -> Result<Outcome, Failure> {
    if !(width > 0.0) {
        return Err(Error::InvalidState(format!("width must be positive, got {width}")).into());
    }
    let grid = GridSpec::centered(cfg.grid_n, 40.0 * width)?;
    let p = ProbabilityDensity::line_from_fn(grid, |x| (-x * x / (2.0 * width * width)).exp())?.normalized()?;
    let run = diffusion_entropy_rate(&p, gamma, drift, dt, steps)?;
    let first = run.max_relative_error(1);
    let along = run.max_relative_error(run.rates.len());
    Ok(Outcome {
        passed: first <= DIFFUSION_FIRST && along <= DIFFUSION_RUN,
        body: json!({
            "grid": grid_meta(&grid),
            "initial_width": width,
            "rate_error_first": first,
            "rate_error_run": along,
            "run": to_value(&run),
        }),
    })
}
