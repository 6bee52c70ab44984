use std::sync::Arc;

use super::grid::SphereGrid;
use crate::error::{Error, Result};

/// Scalar field on the sphere: real harmonic coefficients up to the grid
/// degree.
#[derive(Debug, Clone)]
pub struct SphereField {
    grid: Arc<SphereGrid>,
    coeffs: Vec<f64>,
}

impl SphereField {
    pub fn zeros(grid: &Arc<SphereGrid>) -> Self {
        Self { grid: grid.clone(), coeffs: vec![0.0; grid.n_harmonics()] }
    }

    pub fn from_coeffs(grid: &Arc<SphereGrid>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.n_harmonics() {
            return Err(Error::InvalidArgument(format!(
                "expected {} harmonic coefficients for degree {}, got {}",
                grid.n_harmonics(),
                grid.degree(),
                coeffs.len()
            )));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    /// Galerkin projection of nodal values.
    pub fn from_values(grid: &Arc<SphereGrid>, values: &[f64]) -> Self {
        Self { grid: grid.clone(), coeffs: grid.analyze(values) }
    }

    /// Projection of a function of `u`, sampled at the nodes.
    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = grid.nodes().iter().map(f).collect();
        Self::from_values(grid, &values)
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        let mut out = Self::zeros(grid);
        out.coeffs[0] = c * (4.0 * std::f64::consts::PI).sqrt();
        out
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.grid.degree()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Nodal values.
    pub fn values(&self) -> Vec<f64> {
        self.grid.synthesize(&self.coeffs)
    }

    /// Value at an arbitrary unit vector.
    pub fn eval(&self, u: &[f64; 3]) -> f64 {
        self.grid.harmonics_at(u).iter().zip(&self.coeffs).map(|(y, c)| y * c).sum()
    }

    /// `∫ f dμ`.
    pub fn integral(&self) -> f64 {
        self.coeffs[0] * (4.0 * std::f64::consts::PI).sqrt()
    }

    /// `L²(S₂)` inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Highest degree carrying a coefficient above `tol` in magnitude.
    pub fn effective_degree(&self, tol: f64) -> usize {
        let mut deg = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.abs() > tol {
                deg = super::grid::harmonic_degree_order(i).0;
            }
        }
        deg
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.degree() == other.grid.degree() {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.grid.degree(), right: other.grid.degree() })
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { grid: self.grid.clone(), coeffs: self.coeffs.iter().map(|c| alpha * c).collect() }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise product, projected back to degree `L`.
    pub fn multiply(&self, other: &Self) -> Self {
        let a = self.values();
        let b = other.values();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_values(&self.grid, &prod)
    }
}

/// Tangent vector field, held as Cartesian components at the grid nodes.
///
/// Cartesian components of a degree-`L` gradient have degree `L + 1`, so
/// they are kept nodally rather than truncated.
#[derive(Debug, Clone)]
pub struct TangentField {
    grid: Arc<SphereGrid>,
    values: Vec<[f64; 3]>,
}

impl TangentField {
    /// Nodal values, taken as given.
    pub fn from_nodal(grid: &Arc<SphereGrid>, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal vectors, got {}",
                grid.n_nodes(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Samples `X(u)` at the nodes and removes the normal part.
    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> Self {
        let values = grid
            .nodes()
            .iter()
            .map(|u| {
                let x = f(u);
                let n = x[0] * u[0] + x[1] * u[1] + x[2] * u[2];
                [x[0] - n * u[0], x[1] - n * u[1], x[2] - n * u[2]]
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    /// Ambient field from three component fields, projected tangentially.
    pub fn from_components(components: [&SphereField; 3]) -> Self {
        let grid = components[0].grid().clone();
        let v: Vec<Vec<f64>> = components.iter().map(|c| c.values()).collect();
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let x = [v[0][j], v[1][j], v[2][j]];
                let n = x[0] * u[0] + x[1] * u[1] + x[2] * u[2];
                [x[0] - n * u[0], x[1] - n * u[1], x[2] - n * u[2]]
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    /// Cartesian component `k`, projected onto degree `L`.
    pub fn component(&self, k: usize) -> SphereField {
        let v: Vec<f64> = self.values.iter().map(|x| x[k]).collect();
        SphereField::from_values(&self.grid, &v)
    }

    /// `max_j |X(u_j)·u_j|`.
    pub fn tangency_defect(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.nodes())
            .map(|(x, u)| (x[0] * u[0] + x[1] * u[1] + x[2] * u[2]).abs())
            .fold(0.0, f64::max)
    }

    /// Nodal `X·Y`.
    pub fn dot_values(&self, other: &Self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt())
            .fold(0.0, f64::max)
    }
}
