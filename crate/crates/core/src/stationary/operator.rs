use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::galerkin::GalerkinOperators;
use crate::modal::{apply_b_weights, b_weights, one_n_value, CosProfile, ModalField};

/// Pivot ratio below which a mode matrix is declared singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// LU factorization of `n²π² I + A` (or a shifted variant) for one mode.
#[derive(Debug, Clone)]
pub struct ModeResolvent {
    n: usize,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl ModeResolvent {
    pub fn new(ops: &GalerkinOperators, n: usize) -> Result<Self> {
        Self::from_matrix(n, ops.mode_matrix(n))
    }

    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let lu = matrix.clone().lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(ratio > SINGULAR_PIVOT_RATIO) {
            return Err(Error::SingularOperator { mode: n, pivot_ratio: ratio });
        }
        Ok(Self { n, matrix, lu })
    }

    pub fn mode(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Solve with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        let mut x = self.lu.solve(&b).expect("factorization checked nonsingular");
        let r = &b - &self.matrix * &x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        x.as_slice().to_vec()
    }
}

/// The residual operator `𝒯(ε,·)` on `N` modes for fixed `κ`.
#[derive(Debug, Clone)]
pub struct StationaryOperator {
    ops: Arc<GalerkinOperators>,
    n_modes: usize,
}

impl StationaryOperator {
    pub fn new(ops: Arc<GalerkinOperators>, n_modes: usize) -> Self {
        Self { ops, n_modes }
    }

    pub fn ops(&self) -> &Arc<GalerkinOperators> {
        &self.ops
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        self.n_modes * self.ops.n_harmonics()
    }

    /// Per-mode factorizations of `𝒯₀`.
    pub fn resolvents(&self) -> Result<Vec<ModeResolvent>> {
        (1..=self.n_modes).map(|n| ModeResolvent::new(&self.ops, n)).collect()
    }

    fn profile(&self, g: &ModalField) -> CosProfile {
        let m: Vec<f64> = (1..=g.n_modes()).map(|q| self.ops.moment(g.mode_coeffs(q))).collect();
        CosProfile::from_moments(&m, 2 * g.n_modes())
    }

    /// `B(φ,ψ)` on `N` output modes using the cached moment vector.
    pub fn bilinear(&self, phi: &ModalField, psi: &ModalField) -> ModalField {
        let w = b_weights(&self.profile(psi), phi.n_modes(), self.n_modes);
        apply_b_weights(&w, phi, self.n_modes)
    }

    /// Mode-diagonal part: `n²π²hₙ + A hₙ − εC hₙ + (ε/4π)μ(hₙ)·1`.
    fn linear_part(&self, eps: f64, h: &ModalField, out: &mut ModalField) {
        let nh = self.ops.n_harmonics();
        let unit = GalerkinOperators::unit_coeff();
        for n in 1..=self.n_modes {
            let hn = h.mode_coeffs(n);
            let dst = &mut out.as_flat_mut()[(n - 1) * nh..n * nh];
            self.ops.apply_mode_operator(n, hn, dst);
            if eps != 0.0 {
                self.ops.add_product(-eps, hn, dst);
                dst[0] += eps / (4.0 * PI) * self.ops.moment(hn) * unit;
            }
        }
    }

    /// `𝒯(ε,g)`.
    pub fn residual(&self, eps: f64, g: &ModalField) -> ModalField {
        let mut out = ModalField::zeros(g.grid(), self.n_modes);
        self.linear_part(eps, g, &mut out);
        if eps != 0.0 {
            out.axpy(eps, &self.bilinear(g, g));
        }
        let nh = self.ops.n_harmonics();
        let c = self.ops.kappa_uu_coeffs();
        let src = (3.0 + eps) / (4.0 * PI);
        for n in 1..=self.n_modes {
            let one = one_n_value(n);
            if one == 0.0 {
                continue;
            }
            let dst = &mut out.as_flat_mut()[(n - 1) * nh..n * nh];
            for (d, ci) in dst.iter_mut().zip(c.iter()) {
                *d -= src * one * ci;
            }
        }
        out
    }

    /// Precomputes what [`StationaryOperator::jacobian_apply_with`] needs at `g`.
    pub fn linearize(&self, eps: f64, g: &ModalField) -> Linearization {
        let w_g = if eps != 0.0 { b_weights(&self.profile(g), self.n_modes, self.n_modes) } else { Vec::new() };
        Linearization { eps, g: g.clone(), w_g }
    }

    /// `J h = 𝒯₀-like linear part + ε[B(g,h) + B(h,g)]`.
    pub fn jacobian_apply_with(&self, lin: &Linearization, h: &ModalField) -> ModalField {
        let mut out = ModalField::zeros(h.grid(), self.n_modes);
        self.linear_part(lin.eps, h, &mut out);
        if lin.eps != 0.0 {
            out.axpy(lin.eps, &self.bilinear(&lin.g, h));
            out.axpy(lin.eps, &apply_b_weights(&lin.w_g, h, self.n_modes));
        }
        out
    }

    pub fn jacobian_apply(&self, eps: f64, g: &ModalField, h: &ModalField) -> ModalField {
        self.jacobian_apply_with(&self.linearize(eps, g), h)
    }

    /// Dense Jacobian, assembled column by column.
    pub fn jacobian_matrix(&self, lin: &Linearization) -> DMatrix<f64> {
        let dim = self.dim();
        let grid = self.ops.grid();
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = ModalField::zeros(grid, self.n_modes);
        for j in 0..dim {
            e.as_flat_mut()[j] = 1.0;
            let col = self.jacobian_apply_with(lin, &e);
            m.set_column(j, &DVector::from_column_slice(col.as_flat()));
            e.as_flat_mut()[j] = 0.0;
        }
        m
    }
}

/// State captured for repeated Jacobian products at a fixed point `g`.
#[derive(Debug, Clone)]
pub struct Linearization {
    pub eps: f64,
    g: ModalField,
    /// `B(·, g)` weights.
    w_g: Vec<f64>,
}

/// Applies `𝒯₀⁻¹` mode by mode.
pub fn apply_block_inverse(resolvents: &[ModeResolvent], x: &[f64], nh: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for (i, r) in resolvents.iter().enumerate() {
        out.extend(r.solve(&x[i * nh..(i + 1) * nh]));
    }
    out
}
