//! Flat `key = value` run configuration.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{OracleOptions, VerifyOptions};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, InitialData, Scheme};
use crate::sphere::KappaTensor;
use crate::stationary::{LinearSolver, StationarySolverConfig};

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "DOI_EDWARDS_OUTPUT_DIR";

/// Every key accepted in a config file or by `--set`.
pub const KEYS: &[&str] = &[
    "kappa",
    "epsilon",
    "n_modes",
    "sphere_degree",
    "seed",
    "output_dir",
    "epsilon_step",
    "newton_tol",
    "max_newton_iters",
    "linear_solver",
    "dt",
    "t_final",
    "scheme",
    "snapshot_stride",
    "initial_data",
    "s_samples",
    "fit_t_min",
    "stationary_ref",
    "require_ref",
    "verify_n_max",
    "verify_r",
    "verify_trials",
    "verify_modes",
    "cos_n_max",
    "brt_q_max",
    "brt_n_max",
    "parseval_terms",
    "oracle_s_points",
    "oracle_n_lat",
    "oracle_n_lon",
    "sweep_min",
    "sweep_max",
    "sweep_count",
];

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSpec {
    Zero,
    Random,
    File(PathBuf),
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    /// Row-major entries as given; [`RunConfig::kappa`] projects out the trace.
    pub kappa_entries: [f64; 9],
    pub epsilon: f64,
    pub n_modes: usize,
    pub sphere_degree: usize,
    pub seed: u64,
    pub output_dir: PathBuf,

    pub epsilon_step: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub linear_solver: LinearSolver,

    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_stride: usize,
    pub initial_data: InitialSpec,
    pub s_samples: usize,
    pub fit_t_min: f64,
    pub stationary_ref: Option<PathBuf>,
    pub require_ref: bool,

    pub verify_n_max: usize,
    pub verify_r: f64,
    pub verify_trials: usize,
    pub verify_modes: usize,
    pub cos_n_max: usize,
    pub brt_q_max: usize,
    pub brt_n_max: usize,
    pub parseval_terms: usize,
    pub oracle_s_points: usize,
    pub oracle_n_lat: usize,
    pub oracle_n_lon: usize,

    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = StationarySolverConfig::default();
        let evo = EvolutionConfig::default();
        let oracle = OracleOptions::default();
        Self {
            kappa_entries: KappaTensor::simple_shear(1.0).row_major(),
            epsilon: 0.05,
            n_modes: solver.n_modes,
            sphere_degree: solver.sphere_degree,
            seed: VerifyOptions::default().seed,
            output_dir: PathBuf::from("out"),
            epsilon_step: solver.epsilon_step,
            newton_tol: solver.newton_tol,
            max_newton_iters: solver.max_newton_iters,
            linear_solver: solver.linear_solver,
            dt: evo.dt,
            t_final: evo.t_final,
            scheme: evo.scheme,
            snapshot_stride: evo.snapshot_stride,
            initial_data: InitialSpec::Zero,
            s_samples: evo.s_samples,
            fit_t_min: 0.2,
            stationary_ref: None,
            require_ref: false,
            verify_n_max: 20,
            verify_r: 2.0,
            verify_trials: 20,
            verify_modes: 32,
            cos_n_max: 32,
            brt_q_max: 16,
            brt_n_max: 16,
            parseval_terms: 8192,
            oracle_s_points: oracle.s_points,
            oracle_n_lat: oracle.n_lat,
            oracle_n_lon: oracle.n_lon,
            sweep_min: -0.05,
            sweep_max: 0.05,
            sweep_count: 11,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| config_err(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(config_err(key, format!("expected true/false, got `{other}`"))),
    }
}

fn parse_kappa(value: &str) -> Result<[f64; 9]> {
    let parts: Vec<&str> = value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
    if parts.len() != 9 {
        return Err(config_err("kappa", format!("expected 9 row-major entries, got {}", parts.len())));
    }
    let mut out = [0.0; 9];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_value::<f64>("kappa", p)?;
        if !o.is_finite() {
            return Err(config_err("kappa", "entries must be finite"));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn kappa(&self) -> KappaTensor {
        KappaTensor::from_row_major(&self.kappa_entries)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "kappa" => self.kappa_entries = parse_kappa(v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            "n_modes" => self.n_modes = parse_value(key, v)?,
            "sphere_degree" => self.sphere_degree = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "epsilon_step" => self.epsilon_step = parse_value(key, v)?,
            "newton_tol" => self.newton_tol = parse_value(key, v)?,
            "max_newton_iters" => self.max_newton_iters = parse_value(key, v)?,
            "linear_solver" => self.linear_solver = v.parse().map_err(|e: String| config_err(key, e))?,
            "dt" => self.dt = parse_value(key, v)?,
            "t_final" => self.t_final = parse_value(key, v)?,
            "scheme" => self.scheme = v.parse().map_err(|e: String| config_err(key, e))?,
            "snapshot_stride" => self.snapshot_stride = parse_value(key, v)?,
            "initial_data" => {
                self.initial_data = match v {
                    "zero" | "uniform" => InitialSpec::Zero,
                    "random" => InitialSpec::Random,
                    "" => return Err(config_err(key, "empty value")),
                    path => InitialSpec::File(PathBuf::from(path)),
                }
            }
            "s_samples" => self.s_samples = parse_value(key, v)?,
            "fit_t_min" => self.fit_t_min = parse_value(key, v)?,
            "stationary_ref" => self.stationary_ref = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "require_ref" => self.require_ref = parse_bool(key, v)?,
            "verify_n_max" => self.verify_n_max = parse_value(key, v)?,
            "verify_r" => self.verify_r = parse_value(key, v)?,
            "verify_trials" => self.verify_trials = parse_value(key, v)?,
            "verify_modes" => self.verify_modes = parse_value(key, v)?,
            "cos_n_max" => self.cos_n_max = parse_value(key, v)?,
            "brt_q_max" => self.brt_q_max = parse_value(key, v)?,
            "brt_n_max" => self.brt_n_max = parse_value(key, v)?,
            "parseval_terms" => self.parseval_terms = parse_value(key, v)?,
            "oracle_s_points" => self.oracle_s_points = parse_value(key, v)?,
            "oracle_n_lat" => self.oracle_n_lat = parse_value(key, v)?,
            "oracle_n_lon" => self.oracle_n_lon = parse_value(key, v)?,
            "sweep_min" => self.sweep_min = parse_value(key, v)?,
            "sweep_max" => self.sweep_max = parse_value(key, v)?,
            "sweep_count" => self.sweep_count = parse_value(key, v)?,
            other => return Err(config_err(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("config", format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies a `KEY=VALUE` override.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(assignment, "expected KEY=VALUE"))?;
        self.set(key.trim(), value)
    }

    /// Writes the config back as `key = value` lines.
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for key in KEYS {
            let text = match *key {
                "kappa" => self.kappa_entries.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                "initial_data" => match &self.initial_data {
                    InitialSpec::Zero => "zero".into(),
                    InitialSpec::Random => "random".into(),
                    InitialSpec::File(p) => p.display().to_string(),
                },
                "stationary_ref" => self.stationary_ref.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                other => match &v[other] {
                    serde_json::Value::String(s) => s.clone(),
                    x => x.to_string(),
                },
            };
            out.push_str(&format!("{key} = {text}\n"));
        }
        out
    }

    pub fn solver_config(&self, epsilon_target: f64) -> StationarySolverConfig {
        StationarySolverConfig {
            n_modes: self.n_modes,
            sphere_degree: self.sphere_degree,
            epsilon_target,
            epsilon_step: self.epsilon_step,
            newton_tol: self.newton_tol,
            max_newton_iters: self.max_newton_iters,
            linear_solver: self.linear_solver,
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            t_final: self.t_final,
            scheme: self.scheme,
            snapshot_stride: self.snapshot_stride,
            initial_data: match &self.initial_data {
                InitialSpec::Zero => InitialData::Zero,
                InitialSpec::Random => InitialData::RandomizedAdmissible { seed: self.seed },
                InitialSpec::File(p) => InitialData::ModalFile(p.clone()),
            },
            n_modes: self.n_modes,
            sphere_degree: self.sphere_degree,
            s_samples: self.s_samples,
            keep_snapshots: false,
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions { sphere_degree: self.sphere_degree, seed: self.seed, trials: self.verify_trials }
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions {
            s_points: self.oracle_s_points,
            n_lat: self.oracle_n_lat,
            n_lon: self.oracle_n_lon,
            ..OracleOptions::default()
        }
    }

    /// Checks every numeric field before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.solver_config(self.epsilon).validate().map_err(|e| match e {
            Error::Config { key, message } if key == "epsilon_target" => Error::Config { key: "epsilon".into(), message },
            other => other,
        })?;
        self.evolution_config().validate()?;
        let pos = |key: &str, v: usize| if v == 0 { Err(config_err(key, "must be >= 1")) } else { Ok(()) };
        pos("verify_n_max", self.verify_n_max)?;
        if self.verify_n_max > crate::diagnostics::RESOLVENT_MAX_MODE {
            return Err(config_err("verify_n_max", format!("must be <= {}", crate::diagnostics::RESOLVENT_MAX_MODE)));
        }
        if !(self.verify_r >= 1.0 && self.verify_r.is_finite()) {
            return Err(config_err("verify_r", format!("must be finite and >= 1, got {}", self.verify_r)));
        }
        pos("verify_trials", self.verify_trials)?;
        pos("verify_modes", self.verify_modes)?;
        pos("cos_n_max", self.cos_n_max)?;
        pos("brt_q_max", self.brt_q_max)?;
        pos("brt_n_max", self.brt_n_max)?;
        pos("parseval_terms", self.parseval_terms)?;
        pos("sweep_count", self.sweep_count)?;
        if !(self.oracle_s_points >= 2 && self.oracle_s_points <= crate::diagnostics::ORACLE_MAX_S_POINTS) {
            return Err(config_err("oracle_s_points", "must lie in 2..=64"));
        }
        if self.oracle_n_lat < 4 || self.oracle_n_lon < 8 {
            return Err(config_err("oracle_n_lat", "lat-lon mesh needs n_lat >= 4 and n_lon >= 8"));
        }
        if !(self.fit_t_min >= 0.0) {
            return Err(config_err("fit_t_min", "must be >= 0"));
        }
        for (key, v) in [("sweep_min", self.sweep_min), ("sweep_max", self.sweep_max)] {
            if !v.is_finite() || v.abs() > crate::stationary::MAX_EPSILON {
                return Err(config_err(key, format!("|{key}| must be <= 1, got {v}")));
            }
        }
        if self.sweep_min > self.sweep_max {
            return Err(config_err("sweep_min", "must not exceed sweep_max"));
        }
        Ok(())
    }

    /// The `ε` values of a sweep, evenly spaced and including both ends.
    pub fn sweep_grid(&self) -> Vec<f64> {
        if self.sweep_count == 1 {
            return vec![self.sweep_min];
        }
        let h = (self.sweep_max - self.sweep_min) / (self.sweep_count - 1) as f64;
        (0..self.sweep_count).map(|i| self.sweep_min + i as f64 * h).collect()
    }
}
