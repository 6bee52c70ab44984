use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::BoundReport;
use crate::error::{Error, Result};
use crate::modal::{b_coefficients, lambda_profile, sin_cos_integral, CosProfile, ModalField};
use crate::sphere::quadrature::composite_gauss;
use crate::sphere::KappaTensor;

fn weighted_ratio(fd_norms: &[f64], coupling_norms: &[f64]) -> f64 {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (i, (a, c)) in fd_norms.iter().zip(coupling_norms).enumerate() {
        let n2 = ((i + 1) * (i + 1)) as f64;
        lhs += n2 * a * c;
        rhs += n2 * n2 * a * a;
    }
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Along recorded states `fᵉ(t)` of an evolution towards the stationary
/// `f`, the ratios
///
/// - `Σ n²‖f^d_n‖ ‖I₁ₙ‖ / Σ n⁴‖f^d_n‖²`, `I₁ₙ = ∫ ∂/∂s[κ:λ(fᵉ) f^d] Hₙ`,
/// - `Σ n²‖f^d_n‖ ‖I₂ₙ‖ / Σ n⁴‖f^d_n‖²`, `I₂ₙ = ∫ ∂/∂s[κ:λ(f^d) f] Hₙ`,
///
/// all norms `L¹(S₂)`, `f^d = fᵉ − f`, and `0/0 = 0`. Verdict: no growth in `t`.
pub fn verify_mode_coupling_bounds(
    snapshots: &[(f64, ModalField)],
    stationary: &ModalField,
    kappa: &KappaTensor,
) -> Result<(BoundReport, BoundReport)> {
    if snapshots.is_empty() {
        return Err(Error::InsufficientData("mode coupling check needs a trajectory with snapshots".into()));
    }
    let mut rows = Vec::with_capacity(snapshots.len());
    let mut r1 = Vec::with_capacity(snapshots.len());
    let mut r2 = Vec::with_capacity(snapshots.len());
    for (t, fe) in snapshots {
        if fe.grid().degree() != stationary.grid().degree() {
            return Err(Error::GridMismatch { left: fe.grid().degree(), right: stationary.grid().degree() });
        }
        let n = fe.n_modes();
        let f = ModalField::from_flat(fe.grid(), stationary.n_modes(), stationary.as_flat().to_vec())?.resized(n);
        let fd = fe.sub(&f);
        let a = fd.mode_norms(1.0);
        let i1 = b_coefficients(kappa, &fd, fe, n).mode_norms(1.0);
        let i2 = b_coefficients(kappa, &f, &fd, n).mode_norms(1.0);
        rows.push(vec![*t]);
        r1.push(weighted_ratio(&a, &i1));
        r2.push(weighted_ratio(&a, &i2));
    }
    let ones = vec![1.0; rows.len()];
    let first = BoundReport::new("mode_coupling_lambda_fe", &["t"], rows.clone(), r1, &ones, |row| row[0]);
    let second = BoundReport::new("mode_coupling_lambda_fd", &["t"], rows, r2, &ones, |row| row[0]);
    Ok((first, second))
}

/// `a_{qn} = ∫₀¹ ∂/∂s[Λ H_q] Hₙ ds` for `n = 1..n_terms`, with `Λ` given by
/// its cosine profile.
pub fn a_qn_coefficients(profile: &CosProfile, q: usize, n_terms: usize) -> Vec<f64> {
    (1..=n_terms)
        .map(|n| {
            let mut k = profile.c0 * sin_cos_integral(q, n);
            for (ji, c) in profile.coeffs.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                let j = ji + 1;
                k += 0.5 * c * (sin_cos_integral(q, j + n) + sin_cos_integral(q, j.abs_diff(n)));
            }
            -2.0 * n as f64 * PI * k
        })
        .collect()
}

/// `‖∂/∂s(Λ H_q)‖²_{L²(0,1)}` by composite Gauss quadrature.
pub fn lambda_profile_ds_norm_sq(profile: &CosProfile, q: usize) -> f64 {
    let panels = 16 * (q + profile.len()).max(4);
    let (s, w) = composite_gauss(0.0, 1.0, panels, 8);
    let k = q as f64 * PI;
    s.iter()
        .zip(&w)
        .map(|(s, w)| {
            let h = SQRT_2 * (k * s).sin();
            let dh = SQRT_2 * k * (k * s).cos();
            let v = profile.eval_ds(*s) * h + profile.eval(*s) * dh;
            w * v * v
        })
        .sum()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParsevalRow {
    pub q: usize,
    /// `‖∂/∂s(κ:λ(fᵉ) H_q)‖²` by quadrature.
    pub direct: f64,
    /// `Σ_{n ≤ n_terms} a_{qn}²`.
    pub series: f64,
    pub relative_defect: f64,
}

/// Checks `Σₙ a_{qn}² = ‖∂/∂s(κ:λ(fᵉ)H_q)‖²` and reports the direct value
/// normalized by `q⁻²`. The sine coefficients of a function that does not
/// vanish at `s = 1` decay like `1/n`, so the partial sums carry a tail of
/// order `1/n_terms`.
pub fn a_qn_parseval(
    fe: &ModalField,
    kappa: &KappaTensor,
    q_max: usize,
    n_terms: usize,
) -> (BoundReport, Vec<ParsevalRow>) {
    let profile = lambda_profile(kappa, fe);
    let mut rows = Vec::with_capacity(q_max);
    for q in 1..=q_max {
        let direct = lambda_profile_ds_norm_sq(&profile, q);
        let series: f64 = a_qn_coefficients(&profile, q, n_terms).iter().map(|a| a * a).sum();
        let relative_defect = if direct > 0.0 { (direct - series).abs() / direct } else { series };
        rows.push(ParsevalRow { q, direct, series, relative_defect });
    }
    let grid = rows.iter().map(|r| vec![r.q as f64]).collect();
    let measured = rows.iter().map(|r| r.direct).collect();
    let growth: Vec<f64> = rows.iter().map(|r| 1.0 / (r.q * r.q) as f64).collect();
    let report = BoundReport::new("a_qn_parseval", &["q"], grid, measured, &growth, |row| row[0])
        .with_note(format!("{n_terms} series terms"));
    (report, rows)
}
