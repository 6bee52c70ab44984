use std::f64::consts::{PI, SQRT_2};

use super::field::ModalField;
use crate::error::{Error, Result};
use crate::sphere::{quadratic_moment, KappaTensor, SphereField};

/// `∫₀¹ sin(pπs) cos(mπs) ds` for `p ≥ 1`, `m ≥ 0`.
#[inline]
pub fn sin_cos_integral(p: usize, m: usize) -> f64 {
    if p == m || (p + m) % 2 == 0 {
        return 0.0;
    }
    let (pf, mf) = (p as f64, m as f64);
    2.0 * pf / (PI * (pf * pf - mf * mf))
}

/// Scalar function of `s` held as `c₀ + Σ_{p=1..P} c_p cos(pπs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosProfile {
    pub c0: f64,
    /// `coeffs[p − 1] = c_p`.
    pub coeffs: Vec<f64>,
}

impl CosProfile {
    pub fn zero(len: usize) -> Self {
        Self { c0: 0.0, coeffs: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `c_p`, zero past the stored length.
    #[inline]
    pub fn coeff(&self, p: usize) -> f64 {
        if p == 0 {
            self.c0
        } else {
            self.coeffs.get(p - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.c0
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * ((i + 1) as f64 * PI * s).cos())
                .sum::<f64>()
    }

    /// `dΛ/ds`.
    pub fn eval_ds(&self, s: f64) -> f64 {
        -self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let q = (i + 1) as f64 * PI;
                c * q * (q * s).sin()
            })
            .sum::<f64>()
    }

    /// Profile of `∫₀ˢ Σ m_q H_q(s') ds'`, padded to `len` cosine terms.
    pub fn from_moments(moments: &[f64], len: usize) -> Self {
        let mut out = Self::zero(len.max(moments.len()));
        for (i, m) in moments.iter().enumerate() {
            let w = SQRT_2 * m / ((i + 1) as f64 * PI);
            out.c0 += w;
            out.coeffs[i] = -w;
        }
        out
    }
}

/// `m_q = ∫ κ:v⊗v ψ_q dμ` for every mode.
pub fn mode_moments(kappa: &KappaTensor, psi: &ModalField) -> Vec<f64> {
    (1..=psi.n_modes()).map(|q| quadratic_moment(kappa, &psi.mode(q))).collect()
}

/// `κ:λ(ψ)(s) = ∫₀ˢ ∫ κ:v⊗v ψ dμ ds'`, padded to `2N` cosine terms.
pub fn lambda_profile(kappa: &KappaTensor, psi: &ModalField) -> CosProfile {
    CosProfile::from_moments(&mode_moments(kappa, psi), 2 * psi.n_modes())
}

/// `max_s |κ:λ(ψ + 1/4π) − κ:λ(ψ)|` on a uniform `s` grid.
///
/// The uniform part contributes `s ∫ κ:v⊗v dμ / 4π = s tr(κ)/3`, which
/// vanishes for a traceless tensor. Evaluated on the sphere grid, so a
/// tensor built with [`KappaTensor::with_trace_unchecked`] shows the trace.
pub fn lambda_full_vs_homogeneous_check(kappa: &KappaTensor, psi: &ModalField) -> f64 {
    let uniform = SphereField::constant(psi.grid(), 1.0 / (4.0 * PI));
    let slope = quadratic_moment(kappa, &uniform);
    let base = lambda_profile(kappa, psi);
    let samples = 201;
    (0..samples)
        .map(|i| {
            let s = i as f64 / (samples - 1) as f64;
            let full = base.eval(s) + slope * s;
            (full - base.eval(s)).abs()
        })
        .fold(0.0, f64::max)
}

/// Weights `w_{np}` with `B(φ,ψ)_n = Σ_p w_{np} φ_p` for a fixed profile
/// `Λ = κ:λ(ψ)`: `w_{np} = −2nπ K_{np}`,
/// `K_{np} = c₀S(p,n) + ½Σ_q c_q (S(p,q+n) + S(p,|q−n|))`.
pub fn b_weights(profile: &CosProfile, n_in: usize, n_out: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_out * n_in];
    for n in 1..=n_out {
        for p in 1..=n_in {
            let mut k = profile.c0 * sin_cos_integral(p, n);
            for (qi, c) in profile.coeffs.iter().enumerate() {
                if *c == 0.0 {
                    continue;
                }
                let q = qi + 1;
                k += 0.5 * c * (sin_cos_integral(p, q + n) + sin_cos_integral(p, q.abs_diff(n)));
            }
            w[(n - 1) * n_in + (p - 1)] = -2.0 * n as f64 * PI * k;
        }
    }
    w
}

/// Applies precomputed [`b_weights`] to `φ`.
pub fn apply_b_weights(weights: &[f64], phi: &ModalField, n_out: usize) -> ModalField {
    let n_in = phi.n_modes();
    let h = phi.n_harmonics();
    let mut out = ModalField::zeros(phi.grid(), n_out);
    for n in 1..=n_out {
        let dst = &mut out.as_flat_mut()[(n - 1) * h..n * h];
        for p in 1..=n_in {
            let w = weights[(n - 1) * n_in + (p - 1)];
            if w == 0.0 {
                continue;
            }
            for (d, x) in dst.iter_mut().zip(phi.mode_coeffs(p)) {
                *d += w * x;
            }
        }
    }
    out
}

/// `bₙ = ∫₀¹ ∂/∂s[φ κ:λ(ψ)] Hₙ ds` for `n = 1..n_out`, by exact
/// sine×cosine convolution.
pub fn b_coefficients(kappa: &KappaTensor, phi: &ModalField, psi: &ModalField, n_out: usize) -> ModalField {
    let profile = lambda_profile(kappa, psi);
    b_from_profile(phi, &profile, n_out)
}

pub fn b_from_profile(phi: &ModalField, profile: &CosProfile, n_out: usize) -> ModalField {
    let w = b_weights(profile, phi.n_modes(), n_out);
    apply_b_weights(&w, phi, n_out)
}

/// `∫₀¹ f(s) cos(mπs) ds` for any `m ≥ 0`.
pub fn cos_moment(f: &ModalField, m: usize) -> SphereField {
    let mut c = vec![0.0; f.n_harmonics()];
    for p in 1..=f.n_modes() {
        let w = SQRT_2 * sin_cos_integral(p, m);
        if w == 0.0 {
            continue;
        }
        for (ci, x) in c.iter_mut().zip(f.mode_coeffs(p)) {
            *ci += w * x;
        }
    }
    SphereField::from_coeffs(f.grid(), c).expect("mode length")
}

/// `∫₀¹ f(s) cos(Nπs) ds`, `N ≥ 1`.
pub fn cos_projection(f: &ModalField, n: usize) -> Result<SphereField> {
    if n < 1 {
        return Err(Error::InvalidArgument("cosine projection needs N >= 1".into()));
    }
    Ok(cos_moment(f, n))
}

/// `∫₀¹ ∂/∂s[(∫₀ˢ H_q) f] Hₙ ds = (n/q)(−2E(n) + E(n+q) + E(|n−q|))`,
/// `E(m) = ∫₀¹ f cos(mπs) ds`.
pub fn brt_coefficient(f: &ModalField, q: usize, n: usize) -> Result<SphereField> {
    if q < 1 || n < 1 {
        return Err(Error::InvalidArgument("q and n must be >= 1".into()));
    }
    let mut out = cos_moment(f, n).scaled(-2.0);
    out.axpy(1.0, &cos_moment(f, n + q));
    out.axpy(1.0, &cos_moment(f, n.abs_diff(q)));
    Ok(out.scaled(n as f64 / q as f64))
}

/// Both sides of the segment-count balance for `F = 1/4π + φ`.
#[derive(Debug, Clone, Copy)]
pub struct SegmentBalance {
    /// `−∫₀¹∫ F κ:u⊗u dμ ds`, from the mode moments.
    pub creation: f64,
    /// `∫₀¹∫ ∂/∂s(F κ:λ(F)) dμ ds`, by dense `s` quadrature.
    pub retraction: f64,
}

impl SegmentBalance {
    pub fn residual(&self) -> f64 {
        self.creation + self.retraction
    }
}

/// Segment-count balance. The retraction side is integrated numerically
/// from `(∫F dμ)(s)` and `κ:λ(F)(s)`, independent of the convolution used
/// for `B`.
pub fn segment_balance(kappa: &KappaTensor, phi: &ModalField) -> SegmentBalance {
    let m = mode_moments(kappa, phi);
    let creation: f64 = -m
        .iter()
        .enumerate()
        .map(|(i, mq)| mq * super::one_n_value(i + 1))
        .sum::<f64>();

    let n = phi.n_modes();
    let mass: Vec<f64> = (1..=n).map(|q| phi.mode(q).integral()).collect();
    let (s_nodes, s_w) = crate::sphere::quadrature::composite_gauss(0.0, 1.0, 8 * n.max(4), 8);
    let profile = CosProfile::from_moments(&m, n);
    let mut retraction = 0.0;
    for (s, w) in s_nodes.iter().zip(&s_w) {
        let mut total = 1.0;
        let mut d_total = 0.0;
        for (i, a) in mass.iter().enumerate() {
            let k = (i + 1) as f64 * PI;
            total += a * SQRT_2 * (k * s).sin();
            d_total += a * SQRT_2 * k * (k * s).cos();
        }
        retraction += w * (d_total * profile.eval(*s) + total * profile.eval_ds(*s));
    }
    SegmentBalance { creation, retraction }
}
