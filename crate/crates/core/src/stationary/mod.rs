//! Stationary problem `𝒯(ε,f) = 0`: per-mode resolvents, the residual
//! operator and its Jacobian, Newton continuation in `ε`.

mod newton;
mod operator;
mod report;

use std::sync::Arc;

pub use newton::{
    continue_with, max_mode_l1, newton_continuation, LinearSolver, NewtonOutcome, NewtonSolver,
    StationarySolverConfig, MAX_EPSILON,
};
pub use operator::{apply_block_inverse, Linearization, ModeResolvent, StationaryOperator};
pub use report::{EpsilonStep, ModeNormRow, SolveReport, XrEntry, REPORTED_EXPONENTS, S_SAMPLES};

use crate::error::{Error, Result};
use crate::galerkin::GalerkinOperators;
use crate::modal::ModalField;
use crate::sphere::{advect, build_grid, KappaTensor, SphereField};

fn check_mode(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("mode index must be >= 1".into()));
    }
    Ok(())
}

/// `L_n h = n²π² h + ∂/∂u·(𝒢h)`.
pub fn apply_l(n: usize, kappa: &KappaTensor, h: &SphereField) -> Result<SphereField> {
    check_mode(n)?;
    let mut out = advect(kappa, h);
    out.axpy((n * n) as f64 * std::f64::consts::PI.powi(2), h);
    Ok(out)
}

/// `L_n⁻¹ rhs` via a dense LU of the mode matrix.
pub fn solve_l(n: usize, kappa: &KappaTensor, rhs: &SphereField) -> Result<SphereField> {
    check_mode(n)?;
    let ops = GalerkinOperators::new(rhs.grid(), kappa);
    let r = ModeResolvent::new(&ops, n)?;
    SphereField::from_coeffs(rhs.grid(), r.solve(rhs.coeffs()))
}

/// The `ε = 0` solution on `N` modes and degree `L`.
pub fn solve_epsilon_zero(kappa: &KappaTensor, n_modes: usize, degree: usize) -> Result<ModalField> {
    let grid = build_grid(degree)?;
    let ops = Arc::new(GalerkinOperators::new(&grid, kappa));
    let config = StationarySolverConfig { n_modes, sphere_degree: degree, ..Default::default() };
    Ok(NewtonSolver::with_operators(ops, &config)?.solve_epsilon_zero())
}

/// `𝒯(ε,g)`.
pub fn apply_t(epsilon: f64, g: &ModalField, kappa: &KappaTensor) -> ModalField {
    let ops = Arc::new(GalerkinOperators::new(g.grid(), kappa));
    StationaryOperator::new(ops, g.n_modes()).residual(epsilon, g)
}

/// `D𝒯(ε,g) h`.
pub fn apply_jacobian(epsilon: f64, g: &ModalField, h: &ModalField, kappa: &KappaTensor) -> ModalField {
    let ops = Arc::new(GalerkinOperators::new(g.grid(), kappa));
    StationaryOperator::new(ops, g.n_modes()).jacobian_apply(epsilon, g, h)
}

#[cfg(test)]
mod tests;
