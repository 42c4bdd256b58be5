//! rotator-lab: scenario-driven simulations, invariant verification,
//! parameter sweeps, and rank diagnostics for relativistic rotators.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigMap, Scenario, ScenarioInputs};

#[derive(Parser)]
#[command(
    name = "rotator-lab",
    about = "Constrained-Hamiltonian laboratory for relativistic rotators",
    version
)]
struct Cli {
    /// Flat key = value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (also settable via ROTATOR_OUT_DIR).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct ScenarioFlags {
    /// Rotator family: quadratic, fundamental+, fundamental-, or poly:c0,c1,...
    #[arg(long)]
    family: Option<String>,

    /// Mass parameter m.
    #[arg(long)]
    m: Option<f64>,

    /// Length parameter l.
    #[arg(long)]
    ell: Option<f64>,

    /// Operating point Q (phenomenological rotators).
    #[arg(long = "Q", short = 'Q')]
    q: Option<f64>,

    /// Gauge frequency profile (fundamental rotators):
    /// const:c | sin:offset,amplitude,frequency | spline:t0:w0,t1:w1,...
    #[arg(long)]
    profile: Option<String>,

    /// Total integration time.
    #[arg(long = "T", short = 'T')]
    t_final: Option<f64>,

    /// Fixed RK4 step.
    #[arg(long)]
    dt: Option<f64>,

    /// Project (k, chi) back to the constraint surface after each step.
    #[arg(long)]
    stabilize: bool,

    /// Spatial direction of the null vector k, as x,y,z.
    #[arg(long)]
    axis: Option<String>,

    /// Orientation of chi in the plane orthogonal to the axis.
    #[arg(long)]
    phase: Option<f64>,

    /// Seed for the randomized suites and the manifest.
    #[arg(long)]
    seed: Option<u64>,

    /// Record every n-th step.
    #[arg(long)]
    stride: Option<usize>,
}

impl ScenarioFlags {
    fn into_inputs(self, out_dir: Option<PathBuf>) -> ScenarioInputs {
        ScenarioInputs {
            family: self.family,
            m: self.m,
            ell: self.ell,
            q: self.q,
            profile: self.profile,
            t_final: self.t_final,
            dt: self.dt,
            stabilize: self.stabilize.then_some(true),
            axis: self.axis,
            phase: self.phase,
            seed: self.seed,
            stride: self.stride,
            out_dir,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and export CSV plus a JSON manifest.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Trajectory CSV file name (inside the output directory).
        #[arg(long, default_value = "trajectory.csv")]
        csv: String,
        /// Manifest file name.
        #[arg(long, default_value = "run_manifest.json")]
        manifest: String,
    },
    /// Run the invariant suite (constraint algebra, first-class reports,
    /// regularity, oracles, ranks) and write a JSON report.
    Verify {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Corrupt a state before checking, to exercise the failure path.
        #[arg(long)]
        inject_corruption: bool,
        /// Report file name.
        #[arg(long, default_value = "verify_report.json")]
        report: String,
    },
    /// Observables over a parameter grid, as plot-ready CSV.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Lower Q bound (phenomenological sweep).
        #[arg(long)]
        q_min: Option<f64>,
        /// Upper Q bound.
        #[arg(long)]
        q_max: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Semicolon-separated gauge profiles (fundamental sweep).
        #[arg(long, value_delimiter = ';')]
        profiles: Vec<String>,
        /// Output CSV name.
        #[arg(long, default_value = "sweep.csv")]
        out: String,
    },
    /// Velocity-Hessian rank diagnostics with singular-value spectra.
    Hessian {
        #[command(flatten)]
        scenario: ScenarioFlags,
        /// Report file name.
        #[arg(long, default_value = "hessian_report.json")]
        out: String,
    },
}

fn build_scenario(
    flags: ScenarioFlags,
    config: &Option<PathBuf>,
    out_dir: &Option<PathBuf>,
) -> Result<Scenario, config::ConfigError> {
    let base = match config {
        Some(path) => ScenarioInputs::from_config(&ConfigMap::from_file(path)?)?,
        None => ScenarioInputs::default(),
    };
    flags.into_inputs(out_dir.clone()).over(base).build()
}

/// Like `build_scenario` but tolerates a missing family (commands with
/// built-in defaults).
fn build_optional_scenario(
    flags: ScenarioFlags,
    config: &Option<PathBuf>,
    out_dir: &Option<PathBuf>,
) -> Result<Option<Scenario>, config::ConfigError> {
    let base = match config {
        Some(path) => ScenarioInputs::from_config(&ConfigMap::from_file(path)?)?,
        None => ScenarioInputs::default(),
    };
    let merged = flags.into_inputs(out_dir.clone()).over(base);
    if merged.family.is_none() {
        return Ok(None);
    }
    merged.build().map(Some)
}

fn resolve_out_dir(explicit: &Option<PathBuf>) -> PathBuf {
    explicit
        .clone()
        .or_else(|| std::env::var_os("ROTATOR_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let result: anyhow::Result<bool> = (|| {
        match cli.command {
            Command::Simulate { scenario, csv, manifest } => {
                let scenario = build_scenario(scenario, &cli.config, &cli.out_dir)?;
                commands::simulate(&scenario, &csv, &manifest)?;
                Ok(true)
            }
            Command::Verify { scenario, inject_corruption, report } => {
                let seed = scenario.seed.unwrap_or(20120055);
                let scenario = build_optional_scenario(scenario, &cli.config, &cli.out_dir)?;
                let out_dir = scenario
                    .as_ref()
                    .map(|s| s.out_dir.clone())
                    .unwrap_or_else(|| resolve_out_dir(&cli.out_dir));
                commands::verify(scenario.as_ref(), seed, inject_corruption, &report, &out_dir)
            }
            Command::Sweep { scenario, q_min, q_max, points, profiles, out } => {
                let scenario = build_scenario(scenario, &cli.config, &cli.out_dir)?;
                if !profiles.is_empty() {
                    commands::sweep_profiles(&scenario, &profiles, &out)?;
                } else {
                    let lo = q_min.unwrap_or(0.1);
                    let hi = q_max.unwrap_or(0.9);
                    commands::sweep_q(&scenario, lo, hi, points, &out)?;
                }
                Ok(true)
            }
            Command::Hessian { scenario, out } => {
                let scenario = build_optional_scenario(scenario, &cli.config, &cli.out_dir)?;
                let out_dir = scenario
                    .as_ref()
                    .map(|s| s.out_dir.clone())
                    .unwrap_or_else(|| resolve_out_dir(&cli.out_dir));
                commands::hessian(scenario.as_ref(), &out_dir, &out)
            }
        }
    })();

    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            // Configuration problems exit 2; runtime check failures exit 1.
            if e.downcast_ref::<config::ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
