//! Batch front end: `solve`, `evolve`, `verify`, `sweep-epsilon`.
//!
//! Configuration is resolved as defaults, then the `--config` file, then
//! [`OUTPUT_DIR_ENV`], then command-line flags and `--set KEY=VALUE` in the
//! order given. Exit codes are listed in [`ExitStatus`].

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

pub use config::{InitialSpec, RunConfig, KEYS, OUTPUT_DIR_ENV};

use crate::diagnostics::{
    a_qn_parseval, oracle_dense_solve, verify_b_bound, verify_b_bound_first_order, verify_brt_bound, verify_cos_bound,
    verify_mode_coupling_bounds, verify_resolvent_bound, BoundReport,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, fit_decay, DecayFit, Trajectory};
use crate::galerkin::GalerkinOperators;
use crate::modal::ModalField;
use crate::sphere::{build_grid, KappaTensor};
use crate::stationary::{continue_with, max_mode_l1, NewtonSolver, SolveReport};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Usage, configuration or input-file error.
    Usage = 1,
    /// Newton, Picard or a time step failed.
    NoConvergence = 2,
    /// `verify` ran to completion but some verdict is false.
    VerdictFailed = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::NoConvergence { .. }
            | Error::SingularOperator { .. }
            | Error::StepRejected { .. }
            | Error::PicardDiverged { .. }
            | Error::LinearSolver(_) => Self::NoConvergence,
            _ => Self::Usage,
        }
    }
}

/// Bound checks run by `verify all`, in order.
pub const VERIFY_ALL: &[&str] = &["resolvent", "b-operator", "cos", "brt", "mode-coupling", "parseval"];
/// Every name `verify` accepts besides `all`.
pub const VERIFY_NAMES: &[&str] = &["resolvent", "b-operator", "cos", "brt", "mode-coupling", "parseval", "oracle"];

/// Relative `L¹` gap accepted between the spectral and finite-volume
/// stationary solutions in `verify oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-3;

pub const SOLUTION_FILE: &str = "solution.txt";
pub const SOLVE_REPORT_FILE: &str = "solve_report.json";
pub const MODE_NORMS_FILE: &str = "mode_norms.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVOLVE_SUMMARY_FILE: &str = "evolve_summary.json";
pub const VERIFY_DIR: &str = "verify";
pub const VERIFY_SUMMARY_FILE: &str = "verify_summary.csv";
pub const SWEEP_FILE: &str = "sweep_epsilon.csv";
pub const RESOLVED_CONFIG_FILE: &str = "run_config.txt";

#[derive(Debug, Parser)]
#[command(name = "doi-edwards", version, about = "Stationary solutions and relaxation of the Doi-Edwards equation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true, value_name = "DIR")]
    pub output_dir: Option<PathBuf>,
    /// Nine row-major entries, space or comma separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub n_modes: Option<usize>,
    #[arg(long, global = true)]
    pub sphere_degree: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary solution by Newton continuation in epsilon.
    Solve,
    /// Time evolution towards the stationary solution.
    Evolve {
        /// Fail instead of computing a missing stationary reference.
        #[arg(long)]
        require_ref: bool,
        /// Stationary container to compare against.
        #[arg(long, value_name = "PATH")]
        stationary_ref: Option<PathBuf>,
    },
    /// Run bound checks and write one report per check.
    Verify {
        /// Check name or `all`.
        #[arg(default_value = "all")]
        which: String,
    },
    /// Solve over an epsilon grid and tabulate solution norms.
    SweepEpsilon,
}

/// Log verbosity requested on the command line, if the arguments parse.
pub fn verbosity<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map(|c| c.global.verbose).unwrap_or(0)
}

/// Resolves the configuration in precedence order.
pub fn resolve_config(global: &GlobalArgs, env_output_dir: Option<&str>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &global.config {
        cfg.apply_file(path)?;
    }
    if let Some(dir) = env_output_dir.filter(|d| !d.is_empty()) {
        cfg.set("output_dir", dir)?;
    }
    if let Some(dir) = &global.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(k) = &global.kappa {
        cfg.set("kappa", k)?;
    }
    if let Some(e) = global.epsilon {
        cfg.epsilon = e;
    }
    if let Some(n) = global.n_modes {
        cfg.n_modes = n;
    }
    if let Some(l) = global.sphere_degree {
        cfg.sphere_degree = l;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    for a in &global.set {
        cfg.apply_assignment(a)?;
    }
    Ok(cfg)
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage.code() } else { ExitStatus::Success.code() };
        }
    };
    let env_dir = std::env::var(OUTPUT_DIR_ENV).ok();
    let outcome = resolve_config(&cli.global, env_dir.as_deref()).and_then(|mut cfg| {
        if let Command::Evolve { require_ref, stationary_ref } = &cli.command {
            cfg.require_ref |= *require_ref;
            if stationary_ref.is_some() {
                cfg.stationary_ref = stationary_ref.clone();
            }
        }
        cfg.validate()?;
        match &cli.command {
            Command::Solve => cmd_solve(&cfg),
            Command::Evolve { .. } => cmd_evolve(&cfg),
            Command::Verify { which } => cmd_verify(&cfg, which),
            Command::SweepEpsilon => cmd_sweep_epsilon(&cfg),
        }
    });
    match outcome {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::for_error(&e).code()
        }
    }
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join(RESOLVED_CONFIG_FILE), cfg.to_text())?;
    Ok(())
}

fn write_mode_norms(report: &SolveReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in &report.mode_norm_table {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_solution(dir: &Path, f: &ModalField, kappa: &KappaTensor, report: &SolveReport) -> Result<()> {
    f.write_container(&dir.join(SOLUTION_FILE), kappa)?;
    report.write_json(&dir.join(SOLVE_REPORT_FILE))?;
    write_mode_norms(report, &dir.join(MODE_NORMS_FILE))
}

/// Writes the solution container, `SolveReport` and mode-norm CSV. On
/// continuation failure the last converged branch point is written with
/// `converged = false` and the error is returned.
pub fn cmd_solve(cfg: &RunConfig) -> Result<ExitStatus> {
    prepare_output(cfg)?;
    let kappa = cfg.kappa();
    let solver_cfg = cfg.solver_config(cfg.epsilon);
    let solver = NewtonSolver::new(&kappa, &solver_cfg)?;
    match continue_with(&solver, &kappa, &solver_cfg) {
        Ok((f, report)) => {
            write_solution(&cfg.output_dir, &f, &kappa, &report)?;
            info!("solved at eps={} with X1 norm {:.6e}", cfg.epsilon, report.xr_norm);
            Ok(ExitStatus::Success)
        }
        Err(Error::NoConvergence { epsilon, last }) => {
            let (f, report) = *last;
            write_solution(&cfg.output_dir, &f, &kappa, &report)?;
            eprintln!(
                "continuation stopped at epsilon = {epsilon}; last converged epsilon = {} saved to {}",
                report.final_epsilon(),
                cfg.output_dir.join(SOLUTION_FILE).display()
            );
            Ok(ExitStatus::NoConvergence)
        }
        Err(e) => Err(e),
    }
}

fn kappa_matches(a: &KappaTensor, b: &KappaTensor) -> bool {
    a.row_major().iter().zip(b.row_major()).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
}

/// Where the stationary reference came from.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum ReferenceSource {
    File(PathBuf),
    /// A previous `solve` in the output directory at the same `κ`, `ε`
    /// and degree.
    OutputDir(PathBuf),
    Computed,
}

fn load_reference(path: &Path, kappa: &KappaTensor, degree: usize) -> Result<ModalField> {
    let (f, k) = ModalField::read_container(path)?;
    if !kappa_matches(&k, kappa) {
        return Err(Error::Config {
            key: "stationary_ref".into(),
            message: format!("{} was computed for a different kappa", path.display()),
        });
    }
    if f.grid().degree() != degree {
        return Err(Error::Config {
            key: "stationary_ref".into(),
            message: format!("{} has sphere degree {}, config has {degree}", path.display(), f.grid().degree()),
        });
    }
    Ok(f)
}

/// A previous solve in the output directory qualifies when its report
/// converged at the configured `ε`, `κ` and degree.
fn previous_solve(cfg: &RunConfig, kappa: &KappaTensor) -> Option<PathBuf> {
    let path = cfg.output_dir.join(SOLUTION_FILE);
    let text = std::fs::read_to_string(cfg.output_dir.join(SOLVE_REPORT_FILE)).ok()?;
    let report: SolveReport = serde_json::from_str(&text).ok()?;
    let ok = report.converged
        && report.final_epsilon() == cfg.epsilon
        && report.sphere_degree == cfg.sphere_degree
        && kappa_matches(&report.kappa, kappa)
        && path.exists();
    ok.then_some(path)
}

/// Loads the configured reference, reuses a matching previous solve, or
/// computes one. With `require_ref` a missing file is a config error.
pub fn stationary_reference(cfg: &RunConfig, ops: &Arc<GalerkinOperators>) -> Result<(ModalField, ReferenceSource)> {
    let kappa = cfg.kappa();
    if let Some(path) = &cfg.stationary_ref {
        if path.exists() {
            return Ok((load_reference(path, &kappa, cfg.sphere_degree)?, ReferenceSource::File(path.clone())));
        }
        if cfg.require_ref {
            return Err(Error::Config {
                key: "stationary_ref".into(),
                message: format!("{} does not exist", path.display()),
            });
        }
    } else if let Some(path) = previous_solve(cfg, &kappa) {
        return Ok((load_reference(&path, &kappa, cfg.sphere_degree)?, ReferenceSource::OutputDir(path)));
    } else if cfg.require_ref {
        return Err(Error::Config {
            key: "stationary_ref".into(),
            message: "required but not given, and no matching solve in output_dir".into(),
        });
    }
    let solver_cfg = cfg.solver_config(cfg.epsilon);
    let solver = NewtonSolver::with_operators(ops.clone(), &solver_cfg)?;
    let (f, _) = continue_with(&solver, &kappa, &solver_cfg)?;
    Ok((f, ReferenceSource::Computed))
}

#[derive(Debug, Serialize)]
pub struct EvolveSummary {
    pub epsilon: f64,
    pub kappa: KappaTensor,
    pub reference: ReferenceSource,
    pub fit_t_min: f64,
    pub decay: DecayFit,
    pub final_dist_sup_l1: Option<f64>,
    pub max_mass_error: f64,
    pub min_min_f: f64,
    pub max_l1_sup: f64,
    pub max_lambda_sup: f64,
    pub max_lambda_ds_sup: f64,
}

fn run_evolution(cfg: &RunConfig, keep_snapshots: bool) -> Result<(Trajectory, ModalField, ReferenceSource)> {
    let kappa = cfg.kappa();
    let grid = build_grid(cfg.sphere_degree)?;
    let ops = Arc::new(GalerkinOperators::new(&grid, &kappa));
    let (reference, source) = stationary_reference(cfg, &ops)?;
    let mut evo = cfg.evolution_config();
    evo.keep_snapshots = keep_snapshots;
    let traj = evolve_with(ops, &evo, cfg.epsilon, Some(&reference))?;
    Ok((traj, reference, source))
}

/// Writes the trajectory CSV and a JSON summary with the fitted decay rate.
pub fn cmd_evolve(cfg: &RunConfig) -> Result<ExitStatus> {
    prepare_output(cfg)?;
    let (traj, _, source) = run_evolution(cfg, false)?;
    traj.write_csv(&cfg.output_dir.join(TRAJECTORY_FILE))?;
    let decay = fit_decay(&traj, cfg.fit_t_min)?;
    let rows = traj.rows();
    let fold_max = |g: fn(&crate::evolution::TrajectoryRow) -> f64| rows.iter().map(g).fold(0.0, f64::max);
    let summary = EvolveSummary {
        epsilon: cfg.epsilon,
        kappa: cfg.kappa(),
        reference: source,
        fit_t_min: cfg.fit_t_min,
        decay,
        final_dist_sup_l1: rows.last().and_then(|r| r.dist_sup_l1),
        max_mass_error: fold_max(|r| r.mass_error),
        min_min_f: rows.iter().map(|r| r.min_f).fold(f64::INFINITY, f64::min),
        max_l1_sup: fold_max(|r| r.l1_sup),
        max_lambda_sup: fold_max(|r| r.lambda_sup),
        max_lambda_ds_sup: fold_max(|r| r.lambda_ds_sup),
    };
    std::fs::write(cfg.output_dir.join(EVOLVE_SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    info!("fitted decay rate {:.4}", summary.decay.rate);
    Ok(ExitStatus::Success)
}

#[derive(Debug, Serialize)]
struct OracleSummary {
    bound_name: &'static str,
    epsilon: f64,
    relative_l1: f64,
    tolerance: f64,
    picard_iterations: usize,
    cells: usize,
    verdict: bool,
}

fn verify_one(cfg: &RunConfig, name: &str) -> Result<Vec<BoundReport>> {
    let kappa = cfg.kappa();
    let opts = cfg.verify_options();
    Ok(match name {
        "resolvent" => {
            let (a, b) = verify_resolvent_bound(&kappa, cfg.verify_n_max, cfg.verify_r, &opts)?;
            vec![a, b]
        }
        "b-operator" => vec![
            verify_b_bound(&kappa, cfg.verify_modes, cfg.verify_trials, &opts)?,
            verify_b_bound_first_order(&kappa, cfg.verify_modes, cfg.verify_trials, &opts)?,
        ],
        "cos" => vec![verify_cos_bound(cfg.cos_n_max, cfg.verify_trials, &opts)?],
        "brt" => vec![verify_brt_bound(cfg.brt_q_max, cfg.brt_n_max, cfg.verify_trials, &opts)?],
        "mode-coupling" => {
            let (traj, reference, _) = run_evolution(cfg, true)?;
            let (a, b) = verify_mode_coupling_bounds(traj.snapshots(), &reference, &kappa)?;
            vec![a, b]
        }
        "parseval" => {
            let grid = build_grid(cfg.sphere_degree)?;
            let ops = Arc::new(GalerkinOperators::new(&grid, &kappa));
            let (reference, _) = stationary_reference(cfg, &ops)?;
            vec![a_qn_parseval(&reference, &kappa, cfg.brt_q_max, cfg.parseval_terms).0]
        }
        other => unreachable!("unchecked verify name {other}"),
    })
}

fn verify_oracle(cfg: &RunConfig, dir: &Path) -> Result<(String, bool)> {
    let kappa = cfg.kappa();
    let grid = build_grid(cfg.sphere_degree)?;
    let ops = Arc::new(GalerkinOperators::new(&grid, &kappa));
    let (reference, _) = stationary_reference(cfg, &ops)?;
    let dense = oracle_dense_solve(&kappa, cfg.epsilon, &cfg.oracle_options())?;
    let rel = dense.relative_l1_to(&reference);
    let summary = OracleSummary {
        bound_name: "oracle",
        epsilon: cfg.epsilon,
        relative_l1: rel,
        tolerance: ORACLE_TOLERANCE,
        picard_iterations: dense.picard_iterations,
        cells: dense.n_cells(),
        verdict: rel <= ORACLE_TOLERANCE,
    };
    std::fs::write(dir.join("oracle.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok((format!("oracle,{},{rel:e},{ORACLE_TOLERANCE:e}", summary.verdict), summary.verdict))
}

/// Runs one named check or all of [`VERIFY_ALL`]. Every report is written
/// under `<output_dir>/verify/` before the verdicts are combined.
pub fn cmd_verify(cfg: &RunConfig, which: &str) -> Result<ExitStatus> {
    let names: Vec<&str> = match which {
        "all" => VERIFY_ALL.to_vec(),
        name if VERIFY_NAMES.contains(&name) => vec![name],
        other => {
            return Err(Error::Config {
                key: "verify".into(),
                message: format!("unknown check `{other}` (all | {})", VERIFY_NAMES.join(" | ")),
            })
        }
    };
    prepare_output(cfg)?;
    let dir = cfg.output_dir.join(VERIFY_DIR);
    std::fs::create_dir_all(&dir)?;
    let mut lines = vec!["bound_name,verdict,trend_slope,max_normalized".to_string()];
    let mut all_pass = true;
    for name in names {
        if name == "oracle" {
            let (line, pass) = verify_oracle(cfg, &dir)?;
            println!("{line}");
            lines.push(line);
            all_pass &= pass;
            continue;
        }
        for report in verify_one(cfg, name)? {
            report.write(&dir)?;
            let line = format!(
                "{},{},{:e},{:e}",
                report.bound_name, report.verdict, report.trend_slope, report.max_normalized
            );
            println!("{line}");
            lines.push(line);
            all_pass &= report.verdict;
        }
    }
    lines.push(String::new());
    std::fs::write(dir.join(VERIFY_SUMMARY_FILE), lines.join("\n"))?;
    Ok(if all_pass { ExitStatus::Success } else { ExitStatus::VerdictFailed })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    converged: bool,
    newton_iters: usize,
    xr_norm: f64,
    max_mode_l1: f64,
    mass_error: f64,
    #[serde(rename = "min_F")]
    min_f: f64,
}

/// Solves at every `ε` of the sweep grid and writes one CSV row each.
/// Points that fail are recorded with `converged = false` and the last
/// converged branch point; the exit status is then 2.
pub fn cmd_sweep_epsilon(cfg: &RunConfig) -> Result<ExitStatus> {
    prepare_output(cfg)?;
    let kappa = cfg.kappa();
    let solver = NewtonSolver::new(&kappa, &cfg.solver_config(0.0))?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join(SWEEP_FILE))?;
    let mut status = ExitStatus::Success;
    for eps in cfg.sweep_grid() {
        let solver_cfg = cfg.solver_config(eps);
        let (f, report) = match continue_with(&solver, &kappa, &solver_cfg) {
            Ok(v) => v,
            Err(Error::NoConvergence { epsilon, last }) => {
                eprintln!("sweep: no convergence at epsilon = {epsilon}");
                status = ExitStatus::NoConvergence;
                *last
            }
            Err(e) => return Err(e),
        };
        w.serialize(SweepRow {
            epsilon: eps,
            converged: report.converged,
            newton_iters: report.epsilon_path.iter().map(|s| s.newton_iters).sum(),
            xr_norm: report.xr_norm,
            max_mode_l1: max_mode_l1(&f),
            mass_error: report.mass_error,
            min_f: report.min_f,
        })?;
    }
    w.flush()?;
    Ok(status)
}
