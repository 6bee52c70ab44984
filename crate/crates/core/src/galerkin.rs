//! Matrices of the sphere operators in the harmonic basis, built once per
//! `(grid, κ)` and shared by the stationary and time-dependent solvers.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::sphere::{advect, kappa_uu_field, KappaTensor, SphereField, SphereGrid};

#[derive(Debug, Clone)]
pub struct GalerkinOperators {
    grid: Arc<SphereGrid>,
    kappa: KappaTensor,
    /// Column `j` is `advect(κ, Y_j)`.
    advect: DMatrix<f64>,
    /// `C_ij = ∫ (κ:u⊗u) Y_i Y_j dμ`.
    product: DMatrix<f64>,
    /// `μ_j = ∫ (κ:u⊗u) Y_j dμ`.
    moments: DVector<f64>,
    /// Coefficients of `κ:u⊗u`.
    kappa_uu: DVector<f64>,
}

impl GalerkinOperators {
    pub fn new(grid: &Arc<SphereGrid>, kappa: &KappaTensor) -> Self {
        let h = grid.n_harmonics();
        let mut advect_m = DMatrix::zeros(h, h);
        let mut product = DMatrix::zeros(h, h);
        let c = kappa_uu_field(kappa, grid);
        let c_vals = c.values();
        if !kappa.is_zero() {
            let mut e = SphereField::zeros(grid);
            for j in 0..h {
                e.coeffs_mut()[j] = 1.0;
                let a = advect(kappa, &e);
                advect_m.set_column(j, &DVector::from_column_slice(a.coeffs()));
                let yj = grid.synthesize(e.coeffs());
                let prod: Vec<f64> = yj.iter().zip(&c_vals).map(|(y, c)| y * c).collect();
                product.set_column(j, &DVector::from_vec(grid.analyze(&prod)));
                e.coeffs_mut()[j] = 0.0;
            }
        }
        // ∫ c Y_j = ⟨c, Y_j⟩
        let moments = DVector::from_column_slice(c.coeffs());
        Self {
            grid: grid.clone(),
            kappa: *kappa,
            advect: advect_m,
            product,
            moments,
            kappa_uu: DVector::from_column_slice(c.coeffs()),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn kappa(&self) -> &KappaTensor {
        &self.kappa
    }

    pub fn n_harmonics(&self) -> usize {
        self.grid.n_harmonics()
    }

    pub fn advect_matrix(&self) -> &DMatrix<f64> {
        &self.advect
    }

    pub fn product_matrix(&self) -> &DMatrix<f64> {
        &self.product
    }

    pub fn moments(&self) -> &DVector<f64> {
        &self.moments
    }

    pub fn kappa_uu_coeffs(&self) -> &DVector<f64> {
        &self.kappa_uu
    }

    /// `∫ κ:v⊗v h dμ`.
    pub fn moment(&self, h: &[f64]) -> f64 {
        self.moments.iter().zip(h).map(|(a, b)| a * b).sum()
    }

    /// Coefficient of the constant function `1` on `Y₀₀`.
    pub fn unit_coeff() -> f64 {
        (4.0 * PI).sqrt()
    }

    /// `out = n²π² h + A h`.
    pub fn apply_mode_operator(&self, n: usize, h: &[f64], out: &mut [f64]) {
        let d = (n * n) as f64 * PI * PI;
        gemv(&self.advect, h, out);
        for (o, x) in out.iter_mut().zip(h) {
            *o += d * x;
        }
    }

    /// `out += alpha · A h`.
    pub fn add_advect(&self, alpha: f64, h: &[f64], out: &mut [f64]) {
        gemv_acc(&self.advect, alpha, h, out);
    }

    /// `out += alpha · C h`.
    pub fn add_product(&self, alpha: f64, h: &[f64], out: &mut [f64]) {
        gemv_acc(&self.product, alpha, h, out);
    }

    /// Dense `n²π² I + A`.
    pub fn mode_matrix(&self, n: usize) -> DMatrix<f64> {
        let d = (n * n) as f64 * PI * PI;
        let mut m = self.advect.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += d;
        }
        m
    }
}

fn gemv(m: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    gemv_acc(m, 1.0, x, out);
}

// Column-major walk: nalgebra stores columns contiguously.
fn gemv_acc(m: &DMatrix<f64>, alpha: f64, x: &[f64], out: &mut [f64]) {
    let n = m.nrows();
    for (j, xj) in x.iter().enumerate() {
        if *xj == 0.0 {
            continue;
        }
        let a = alpha * xj;
        let col = &m.as_slice()[j * n..(j + 1) * n];
        for (o, c) in out.iter_mut().zip(col) {
            *o += a * c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::build_grid;

    #[test]
    fn matrices_reproduce_field_operations() {
        let g = build_grid(5).unwrap();
        let k = KappaTensor::new([[0.2, 1.0, 0.0], [0.0, -0.5, 0.3], [0.1, 0.0, 0.3]]);
        let ops = GalerkinOperators::new(&g, &k);
        let f = SphereField::from_fn(&g, |u| 0.3 + u[0] - u[1] * u[2] + u[2].powi(4));
        let mut out = vec![0.0; g.n_harmonics()];
        ops.add_advect(1.0, f.coeffs(), &mut out);
        let a = advect(&k, &f);
        for (x, y) in out.iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut out = vec![0.0; g.n_harmonics()];
        ops.add_product(1.0, f.coeffs(), &mut out);
        let p = f.multiply(&kappa_uu_field(&k, &g));
        for (x, y) in out.iter().zip(p.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((ops.moment(f.coeffs()) - crate::sphere::quadratic_moment(&k, &f)).abs() < 1e-13);
        // mass row: ∫ advect = 0
        for j in 0..g.n_harmonics() {
            assert!(ops.advect_matrix()[(0, j)].abs() < 1e-13);
        }
    }
}
