//! Sine-basis algebra in the arclength variable `s`.

mod field;
mod norms;
mod profile;

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

pub use field::ModalField;
pub use norms::{mass_error, min_density, sample_points, xi_chi, xr_norm, XrNorm};
pub use profile::{
    apply_b_weights, b_coefficients, b_from_profile, b_weights, brt_coefficient, cos_moment, cos_projection,
    lambda_full_vs_homogeneous_check, lambda_profile, mode_moments, segment_balance, sin_cos_integral, CosProfile,
    SegmentBalance,
};

use crate::error::{Error, Result};
use crate::sphere::{quadrature::composite_gauss, SphereGrid};

/// `1ₙ = ∫₀¹ Hₙ ds = √2(1 − (−1)ⁿ)/(nπ)`.
pub fn one_n(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("mode index must be >= 1".into()));
    }
    Ok(one_n_value(n))
}

#[inline]
pub(crate) fn one_n_value(n: usize) -> f64 {
    if n % 2 == 0 {
        0.0
    } else {
        2.0 * SQRT_2 / (n as f64 * PI)
    }
}

/// Gauss points per panel used by [`project_sine`].
const SINE_POINTS_PER_PANEL: usize = 8;

/// `gₙ(u) = ∫₀¹ g(s,u) Hₙ(s) ds` for `n = 1..N`, by composite Gauss in `s`
/// (`4N` panels) followed by harmonic analysis of each mode.
pub fn project_sine(grid: &Arc<SphereGrid>, n_modes: usize, g: impl Fn(f64, &[f64; 3]) -> f64) -> ModalField {
    let (s_nodes, s_w) = composite_gauss(0.0, 1.0, 4 * n_modes.max(1), SINE_POINTS_PER_PANEL);
    let nodes = grid.nodes();
    let mut nodal = vec![0.0; n_modes * nodes.len()];
    let mut basis = vec![0.0; n_modes];
    for (s, w) in s_nodes.iter().zip(&s_w) {
        for (n, b) in basis.iter_mut().enumerate() {
            *b = w * SQRT_2 * ((n + 1) as f64 * PI * s).sin();
        }
        for (j, u) in nodes.iter().enumerate() {
            let v = g(*s, u);
            for (n, b) in basis.iter().enumerate() {
                nodal[n * nodes.len() + j] += v * b;
            }
        }
    }
    let mut data = Vec::with_capacity(n_modes * grid.n_harmonics());
    for n in 0..n_modes {
        data.extend(grid.analyze(&nodal[n * nodes.len()..(n + 1) * nodes.len()]));
    }
    ModalField::from_flat(grid, n_modes, data).expect("sizes match")
}

/// Sine coefficients of a scalar function of `s`.
pub fn project_sine_scalar(n_modes: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let (s_nodes, s_w) = composite_gauss(0.0, 1.0, 4 * n_modes.max(1), SINE_POINTS_PER_PANEL);
    (1..=n_modes)
        .map(|n| {
            s_nodes
                .iter()
                .zip(&s_w)
                .map(|(s, w)| w * g(*s) * SQRT_2 * (n as f64 * PI * s).sin())
                .sum()
        })
        .collect()
}
