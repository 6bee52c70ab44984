use serde::{Deserialize, Serialize};

use super::field::ModalField;
use crate::sphere::{drift_derivative_values, lp_norm, lp_norm_values, KappaTensor};

/// Truncated `X_r` norm with the location of both suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XrNorm {
    pub value: f64,
    /// `max_n n³‖fₙ‖_{L^r}`.
    pub regularity: f64,
    pub regularity_argmax: usize,
    /// `max_n n‖𝒢·∂fₙ/∂u‖_{L^r}`.
    pub drift: f64,
    pub drift_argmax: usize,
    pub n_modes: usize,
}

impl XrNorm {
    /// True when either supremum sits on the last retained mode.
    pub fn at_truncation_boundary(&self) -> bool {
        (self.regularity > 0.0 && self.regularity_argmax == self.n_modes)
            || (self.drift > 0.0 && self.drift_argmax == self.n_modes)
    }
}

pub fn xr_norm(f: &ModalField, kappa: &KappaTensor, r: f64) -> XrNorm {
    let (mut reg, mut reg_arg, mut drift, mut drift_arg) = (0.0, 0, 0.0, 0);
    for n in 1..=f.n_modes() {
        let mode = f.mode(n);
        let nf = n as f64;
        let a = nf.powi(3) * lp_norm(&mode, r);
        if a > reg {
            reg = a;
            reg_arg = n;
        }
        if !kappa.is_zero() {
            let d = drift_derivative_values(kappa, &mode);
            let b = nf * lp_norm_values(f.grid(), &d, r);
            if b > drift {
                drift = b;
                drift_arg = n;
            }
        }
    }
    XrNorm {
        value: reg + drift,
        regularity: reg,
        regularity_argmax: reg_arg,
        drift,
        drift_argmax: drift_arg,
        n_modes: f.n_modes(),
    }
}

/// `ξ = Σ n²‖fₙ‖²_{L¹}`, `χ = Σ n⁴‖fₙ‖²_{L¹}`.
pub fn xi_chi(f: &ModalField) -> (f64, f64) {
    let mut xi = 0.0;
    let mut chi = 0.0;
    for (i, a) in f.mode_norms(1.0).iter().enumerate() {
        let n2 = ((i + 1) * (i + 1)) as f64;
        xi += n2 * a * a;
        chi += n2 * n2 * a * a;
    }
    (xi, chi)
}

/// `n` equally spaced points covering `[0, 1]` including both ends.
pub fn sample_points(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// `max_s |∫(f + 1/4π) dμ − 1|` over `samples` points in `s`.
pub fn mass_error(f: &ModalField, samples: usize) -> f64 {
    let masses: Vec<f64> = (1..=f.n_modes()).map(|n| f.mode(n).integral()).collect();
    sample_points(samples)
        .iter()
        .map(|s| {
            masses
                .iter()
                .enumerate()
                .map(|(i, m)| m * std::f64::consts::SQRT_2 * ((i + 1) as f64 * std::f64::consts::PI * s).sin())
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Minimum of `f + 1/4π` over the sphere nodes and `samples` points in `s`.
pub fn min_density(f: &ModalField, samples: usize) -> f64 {
    let base = 1.0 / (4.0 * std::f64::consts::PI);
    sample_points(samples)
        .iter()
        .map(|s| f.evaluate(*s).values().into_iter().fold(f64::INFINITY, f64::min) + base)
        .fold(f64::INFINITY, f64::min)
}
