//! `exu`: verification suites and demos for the exact uncertainty relations.
//!
//! Every command writes one JSON document (to stdout or `--out`). Exit codes:
//! 0 pass, 1 relation violated, 2 unreadable input, 3 computation error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exact_uncertainty::state::Constants;
use exact_uncertainty::tolerances::Tolerances;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "exu", version, about = "Exact uncertainty relations: verification and demos")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long, global = true, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    mass: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, global = true, default_value_t = 1.0)]
    inertia: f64,
    /// Points per axis of generated grid states.
    #[arg(long, global = true, default_value_t = 1024)]
    grid_n: usize,
    #[arg(long, global = true, default_value_t = exact_uncertainty::tolerances::GRID_RELATIVE)]
    tol_grid: f64,
    #[arg(long, global = true, default_value_t = exact_uncertainty::tolerances::FINITE)]
    tol_finite: f64,
    #[arg(long, global = true, default_value_t = exact_uncertainty::tolerances::FOCK)]
    tol_fock: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationArg {
    /// Position measured, momentum split.
    Xp,
    /// Momentum measured, position split.
    Px,
    PhaseAngular,
    PhaseNumber,
    /// Random pair of Hermitian matrices on a random finite state (suite only).
    General,
    Ivanovic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    GaussianRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Bouncer,
    Harmonic,
    Coulomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Position,
    Momentum,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check relations on state files or on a built-in random suite.
    Verify {
        states: Vec<PathBuf>,
        #[arg(long, conflicts_with = "states")]
        suite: Option<SuiteArg>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        /// Relation to check; inferred from the state family when omitted.
        #[arg(long)]
        relation: Option<RelationArg>,
    },
    /// Classical component and variance split of a state file.
    Decompose {
        state: PathBuf,
        /// Measured basis for grid states.
        #[arg(long, value_enum, default_value = "position")]
        basis: BasisArg,
        /// Also write label,value,weight,retained rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Wigner function of a grid state and its average momentum.
    Wigner {
        state: PathBuf,
        /// Also write x,p,w rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ground state energy bounds.
    EnergyBound {
        #[arg(long, value_enum)]
        model: ModelArg,
        /// Gravitational acceleration for the bouncer.
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
    },
    /// Two-particle EPR state: moments, correlations and collapse.
    EprDemo {
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 10.0)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        p0: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        a: f64,
        /// Momentum found for particle 2.
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        p: f64,
        /// Position found for particle 2.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        x: f64,
    },
    /// Complementary bases and the Ivanovic sum rule.
    Mub {
        #[arg(long)]
        d: usize,
        /// `random`, `mixed`, or a path to a finite state file.
        #[arg(long, default_value = "random")]
        state: String,
    },
    /// Time-frequency relation for a CSV signal with columns t,re,im.
    Signal { csv: PathBuf },
    /// Entropy production of a diffusing Gaussian.
    Diffusion {
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        drift: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Initial standard deviation.
        #[arg(long, default_value_t = 1.0)]
        width: f64,
    },
}

/// Settings recorded at the top of every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    pub inertia: f64,
    pub grid_n: usize,
    pub tolerances: Tolerances,
    pub seed: u64,
}

impl RunConfig {
    fn from_args(a: &ConfigArgs) -> Self {
        RunConfig {
            hbar: a.hbar,
            mass: a.mass,
            omega: a.omega,
            inertia: a.inertia,
            grid_n: a.grid_n,
            tolerances: Tolerances {
                grid: a.tol_grid,
                finite: a.tol_finite,
                fock: a.tol_fock,
            },
            seed: a.seed,
        }
    }

    pub fn constants(&self) -> exact_uncertainty::Result<Constants> {
        Constants::new(self.hbar, self.mass, self.omega, self.inertia)
    }
}

/// Why a command could not produce a report.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Compute(exact_uncertainty::Error),
}

impl From<exact_uncertainty::Error> for Failure {
    fn from(e: exact_uncertainty::Error) -> Self {
        Failure::Compute(e)
    }
}

/// A finished report and whether every relation in it held.
pub struct Outcome {
    pub passed: bool,
    pub body: serde_json::Value,
}

#[derive(Serialize)]
struct Document<'a> {
    command: &'a str,
    config: &'a RunConfig,
    passed: bool,
    result: serde_json::Value,
}

fn run(cfg: &RunConfig, command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Verify {
            states,
            suite,
            n,
            relation,
        } => match suite {
            Some(SuiteArg::GaussianRandom) => commands::verify_suite(cfg, *n, *relation),
            None if states.is_empty() => Err(Failure::Input("give state files or --suite".into())),
            None => commands::verify_files(cfg, states, *relation),
        },
        Command::Decompose { state, basis, csv } => commands::decompose(cfg, state, *basis, csv.as_deref()),
        Command::Wigner { state, csv } => commands::wigner(cfg, state, csv.as_deref()),
        Command::EnergyBound { model, g, z, q } => commands::energy_bound(cfg, *model, *g, *z, *q),
        Command::EprDemo {
            sigma,
            tau,
            p0,
            a,
            p,
            x,
        } => commands::epr_demo(cfg, *sigma, *tau, *p0, *a, *p, *x),
        Command::Mub { d, state } => commands::mub(cfg, *d, state),
        Command::Signal { csv } => commands::signal(cfg, csv),
        Command::Diffusion {
            gamma,
            drift,
            dt,
            steps,
            width,
        } => commands::diffusion(cfg, *gamma, *drift, *dt, *steps, *width),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Verify { .. } => "verify",
        Command::Decompose { .. } => "decompose",
        Command::Wigner { .. } => "wigner",
        Command::EnergyBound { .. } => "energy-bound",
        Command::EprDemo { .. } => "epr-demo",
        Command::Mub { .. } => "mub",
        Command::Signal { .. } => "signal",
        Command::Diffusion { .. } => "diffusion",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig::from_args(&cli.config);
    let outcome = match run(&cfg, &cli.command) {
        Ok(o) => o,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {}: {e}", e.name());
            return ExitCode::from(3);
        }
    };
    let doc = Document {
        command: command_name(&cli.command),
        config: &cfg,
        passed: outcome.passed,
        result: outcome.body,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    text.push('\n');
    match &cli.config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(3);
            }
        }
        None => print!("{text}"),
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
