//! Verification harness: brute-force oracles and empirical checks of the
//! decay estimates the solvers rely on.
//!
//! Each check produces a [`BoundReport`]: a measured quantity over a
//! parameter grid, the same values multiplied by the expected growth
//! factor, and a verdict. A finite grid cannot certify a supremum, so the
//! verdict asks for the absence of a trend: the log-log least-squares slope
//! of the normalized values against the grid parameter, over the upper half
//! of the grid in log scale, must not exceed [`TREND_TOLERANCE`]. The lower
//! half is left out because the first few points sit below the asymptotic
//! level by construction (`N²·x` at `N = 1`), which tilts a bounded sequence
//! upwards. The full-grid slope is reported alongside.

mod bounds;
mod coupling;
mod oracle;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bounds::{
    b_ratios, cos_partial_fraction_check, cos_partial_fraction_sum, verify_b_bound, verify_b_bound_first_order,
    verify_brt_bound, verify_cos_bound, verify_resolvent_bound, CosWorstCase, RESOLVENT_MAX_MODE,
};
pub use coupling::{a_qn_coefficients, a_qn_parseval, lambda_profile_ds_norm_sq, verify_mode_coupling_bounds, ParsevalRow};
pub use oracle::{oracle_dense_solve, resolvent_by_characteristics, DenseField, OracleOptions, ORACLE_MAX_S_POINTS};

use crate::error::Result;
use crate::modal::ModalField;
use crate::sphere::{harmonic_degree_order, lp_norm, SphereField, SphereGrid};

/// Largest accepted log-log slope for a "bounded" verdict.
pub const TREND_TOLERANCE: f64 = 0.1;

/// Shared settings of the randomized checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub sphere_degree: usize,
    pub seed: u64,
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { sphere_degree: 8, seed: 20_240_611, trials: 20 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub parameter_names: Vec<String>,
    /// One row per grid point, matching `parameter_names`.
    pub parameter_grid: Vec<Vec<f64>>,
    pub measured: Vec<f64>,
    /// `measured` times the expected growth factor.
    pub normalized: Vec<f64>,
    pub max_normalized: f64,
    /// Slope over the upper half of the grid; decides the verdict.
    pub trend_slope: f64,
    pub full_grid_slope: f64,
    pub verdict: bool,
    pub seed: Option<u64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Builds a report. `trend_parameter` maps a grid row to the scalar the
    /// trend is fitted against; rows sharing a value are reduced to their
    /// maximum first.
    pub fn new(
        bound_name: &str,
        parameter_names: &[&str],
        parameter_grid: Vec<Vec<f64>>,
        measured: Vec<f64>,
        growth: &[f64],
        trend_parameter: impl Fn(&[f64]) -> f64,
    ) -> Self {
        assert_eq!(parameter_grid.len(), measured.len());
        assert_eq!(growth.len(), measured.len());
        let normalized: Vec<f64> = measured.iter().zip(growth).map(|(m, g)| m * g).collect();
        let xs: Vec<f64> = parameter_grid.iter().map(|row| trend_parameter(row)).collect();
        let trend_slope = tail_slope(&xs, &normalized);
        let full_grid_slope = envelope_slope(&xs, &normalized);
        let max_normalized = normalized.iter().cloned().fold(0.0, f64::max);
        let finite = normalized.iter().all(|v| v.is_finite());
        Self {
            bound_name: bound_name.into(),
            parameter_names: parameter_names.iter().map(|s| s.to_string()).collect(),
            parameter_grid,
            measured,
            normalized,
            max_normalized,
            trend_slope,
            full_grid_slope,
            verdict: finite && trend_slope <= TREND_TOLERANCE,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.parameter_names.clone();
        header.push("measured".into());
        header.push("normalized".into());
        w.write_record(&header)?;
        for ((row, m), n) in self.parameter_grid.iter().zip(&self.measured).zip(&self.normalized) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(format!("{m:e}"));
            rec.push(format!("{n:e}"));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `<dir>/<bound_name>.json` and `<dir>/<bound_name>.csv`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.bound_name));
        let csv = dir.join(format!("{}.csv", self.bound_name));
        std::fs::write(&json, self.to_json()?)?;
        std::fs::write(&csv, self.to_csv_string()?)?;
        Ok((json, csv))
    }
}

/// Log-log least-squares slope of the per-`x` maxima of `y`. Points with
/// `x ≤ 0` or `y ≤ 0` carry no trend information and are dropped; fewer
/// than two remaining abscissae give slope 0.
pub fn envelope_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mut env: Vec<(f64, f64)> = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        if !(*x > 0.0 && *y > 0.0 && y.is_finite()) {
            continue;
        }
        match env.iter_mut().find(|(ex, _)| ex == x) {
            Some(e) => e.1 = e.1.max(*y),
            None => env.push((*x, *y)),
        }
    }
    if env.len() < 2 {
        return 0.0;
    }
    let n = env.len() as f64;
    let mx = env.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = env.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = env.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    let sxy: f64 = env.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    sxy / sxx
}

/// [`envelope_slope`] restricted to `x ≥ √(x_min·x_max)` over the positive
/// abscissae.
pub fn tail_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pos = xs.iter().cloned().filter(|x| *x > 0.0);
    let (lo, hi) = pos.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !(lo < hi) {
        return 0.0;
    }
    let cut = (lo * hi).sqrt();
    let (tx, ty): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(x, _)| **x >= cut).map(|(x, y)| (*x, *y)).unzip();
    envelope_slope(&tx, &ty)
}

/// Random smooth field: coefficients uniform in `[−1, 1]` damped by
/// `(1+ℓ)⁻²`, zero mean.
pub fn random_sphere_field(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng) -> SphereField {
    let c = (0..grid.n_harmonics())
        .map(|i| {
            let l = harmonic_degree_order(i).0;
            if l == 0 {
                0.0
            } else {
                rng.gen_range(-1.0..1.0) / ((1 + l) * (1 + l)) as f64
            }
        })
        .collect();
    SphereField::from_coeffs(grid, c).expect("length matches grid")
}

/// Random modal field with `‖f_p‖_{L^r} = p⁻³`.
pub fn random_modal_field(grid: &Arc<SphereGrid>, n_modes: usize, r: f64, rng: &mut ChaCha8Rng) -> ModalField {
    let modes: Vec<SphereField> = (1..=n_modes)
        .map(|p| {
            let h = random_sphere_field(grid, rng);
            let norm = lp_norm(&h, r);
            h.scaled((p as f64).powi(-3) / norm)
        })
        .collect();
    ModalField::from_modes(&modes).expect("non-empty")
}

#[cfg(test)]
mod tests;
