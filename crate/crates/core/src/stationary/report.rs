use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::modal::{mass_error, min_density, xr_norm, ModalField, XrNorm};
use crate::sphere::{drift_derivative_values, lp_norm, lp_norm_values, KappaTensor};

/// Number of `s` samples used for mass and positivity checks.
pub const S_SAMPLES: usize = 65;

/// Exponents at which the `X_r` norm is reported.
pub const REPORTED_EXPONENTS: [f64; 3] = [1.0, 1.1, 2.0];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonStep {
    pub epsilon: f64,
    pub newton_iters: usize,
    pub final_residual: f64,
    /// Residual before each Newton update and after the last one.
    pub residual_history: Vec<f64>,
    /// Inner iterations per Newton step (1 per step for direct solves).
    pub linear_iters: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeNormRow {
    pub n: usize,
    /// `‖fₙ‖_{L¹}`.
    pub l1: f64,
    /// `n³‖fₙ‖_{L¹}`.
    pub weighted_l1: f64,
    /// `n‖𝒢·∂fₙ/∂u‖_{L¹}`.
    pub drift_l1: f64,
    /// `‖fₙ‖_{L²}`.
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XrEntry {
    pub r: f64,
    #[serde(flatten)]
    pub norm: XrNorm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub epsilon_path: Vec<EpsilonStep>,
    #[serde(rename = "mode_norms")]
    pub mode_norm_table: Vec<ModeNormRow>,
    /// `X₁` norm of the returned field.
    pub xr_norm: f64,
    pub xr_norms: Vec<XrEntry>,
    pub mass_error: f64,
    #[serde(rename = "min_F")]
    pub min_f: f64,
    /// `max ‖fₙ‖_{L¹}` over even `n`.
    pub even_mode_max_l1: f64,
    pub n_modes: usize,
    pub sphere_degree: usize,
    pub kappa: KappaTensor,
}

impl SolveReport {
    pub fn build(f: &ModalField, kappa: &KappaTensor, epsilon_path: Vec<EpsilonStep>, converged: bool) -> Self {
        let mut table = Vec::with_capacity(f.n_modes());
        let mut even = 0.0f64;
        for n in 1..=f.n_modes() {
            let mode = f.mode(n);
            let l1 = lp_norm(&mode, 1.0);
            let drift = lp_norm_values(f.grid(), &drift_derivative_values(kappa, &mode), 1.0);
            if n % 2 == 0 {
                even = even.max(l1);
            }
            table.push(ModeNormRow {
                n,
                l1,
                weighted_l1: (n as f64).powi(3) * l1,
                drift_l1: n as f64 * drift,
                l2: lp_norm(&mode, 2.0),
            });
        }
        let xr_norms: Vec<XrEntry> =
            REPORTED_EXPONENTS.iter().map(|&r| XrEntry { r, norm: xr_norm(f, kappa, r) }).collect();
        Self {
            converged,
            epsilon_path,
            mode_norm_table: table,
            xr_norm: xr_norms[0].norm.value,
            xr_norms,
            mass_error: mass_error(f, S_SAMPLES),
            min_f: min_density(f, S_SAMPLES),
            even_mode_max_l1: even,
            n_modes: f.n_modes(),
            sphere_degree: f.grid().degree(),
            kappa: *kappa,
        }
    }

    pub fn final_epsilon(&self) -> f64 {
        self.epsilon_path.last().map(|s| s.epsilon).unwrap_or(0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
