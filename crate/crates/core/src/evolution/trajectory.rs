use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modal::ModalField;

/// `ξ` values below this are treated as converged to roundoff and left out
/// of decay fits.
pub const XI_FLOOR: f64 = 1e-20;

/// Minimum number of samples a decay fit needs.
const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub mass_error: f64,
    #[serde(rename = "min_F")]
    pub min_f: f64,
    pub xi: f64,
    pub chi: f64,
    #[serde(rename = "dist_sup_L1")]
    pub dist_sup_l1: Option<f64>,
    /// `sup_s ∫|fᵉ| dμ`.
    #[serde(skip)]
    pub l1_sup: f64,
    /// `sup_s ‖λ(fᵉ)‖_F`.
    #[serde(skip)]
    pub lambda_sup: f64,
    /// `sup_s ‖∂λ(fᵉ)/∂s‖_F`.
    #[serde(skip)]
    pub lambda_ds_sup: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    rows: Vec<TrajectoryRow>,
    snapshots: Vec<(f64, ModalField)>,
    final_state: Option<ModalField>,
    has_reference: bool,
}

impl Trajectory {
    pub fn new(has_reference: bool) -> Self {
        Self { rows: Vec::new(), snapshots: Vec::new(), final_state: None, has_reference }
    }

    pub fn push(&mut self, row: TrajectoryRow, snapshot: Option<ModalField>) {
        if let Some(last) = self.rows.last() {
            debug_assert!(row.t > last.t, "times must increase");
        }
        if let Some(s) = snapshot {
            self.snapshots.push((row.t, s));
        }
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TrajectoryRow] {
        &self.rows
    }

    pub fn snapshots(&self) -> &[(f64, ModalField)] {
        &self.snapshots
    }

    pub(crate) fn set_final_state(&mut self, f: ModalField) {
        self.final_state = Some(f);
    }

    pub fn final_state(&self) -> Option<&ModalField> {
        self.final_state.as_ref()
    }

    pub fn has_reference(&self) -> bool {
        self.has_reference
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn xi(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.xi).collect()
    }

    /// CSV with columns `t, mass_error, min_F, xi, chi, dist_sup_L1`; the
    /// last column is empty without a stationary reference.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record(["t", "mass_error", "min_F", "xi", "chi", "dist_sup_L1"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Slope of `ln ξ` against `t`.
    pub rate: f64,
    /// `exp` of the intercept.
    pub amplitude: f64,
    /// RMS residual of the linear fit in `ln ξ`.
    pub fit_residual: f64,
    pub samples: usize,
}

/// Least-squares fit `ln ξ ≈ ln A + rate·t` over `t ≥ t_min`, skipping
/// `ξ ≤ XI_FLOOR`.
pub fn fit_decay(trajectory: &Trajectory, t_min: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = trajectory
        .rows
        .iter()
        .filter(|r| r.t >= t_min && r.xi > XI_FLOOR && r.xi.is_finite())
        .map(|r| (r.t, r.xi.ln()))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable samples with t >= {t_min} and xi > {XI_FLOOR:e}, need {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all samples at one time".into()));
    }
    let rate = sxy / sxx;
    let intercept = my - rate * mt;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum();
    Ok(DecayFit { rate, amplitude: intercept.exp(), fit_residual: (rss / n).sqrt(), samples: pts.len() })
}
