use std::sync::Arc;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::operator::{apply_block_inverse, ModeResolvent, StationaryOperator};
use super::report::{EpsilonStep, SolveReport};
use crate::error::{Error, Result};
use crate::galerkin::GalerkinOperators;
use crate::krylov::{gmres, GmresOptions};
use crate::modal::ModalField;
use crate::sphere::{build_grid, lp_norm, KappaTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    DenseDirect,
    Iterative,
}

impl std::str::FromStr for LinearSolver {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dense-direct" => Ok(Self::DenseDirect),
            "iterative" => Ok(Self::Iterative),
            other => Err(format!("unknown linear solver `{other}` (dense-direct | iterative)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarySolverConfig {
    pub n_modes: usize,
    pub sphere_degree: usize,
    pub epsilon_target: f64,
    pub epsilon_step: f64,
    /// Tolerance on `max_n ‖𝒯(ε,f)ₙ‖_{L¹}`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub linear_solver: LinearSolver,
}

impl Default for StationarySolverConfig {
    fn default() -> Self {
        Self {
            n_modes: 32,
            sphere_degree: 8,
            epsilon_target: 0.0,
            epsilon_step: 0.01,
            newton_tol: 1e-10,
            max_newton_iters: 25,
            linear_solver: LinearSolver::Iterative,
        }
    }
}

/// Continuation refuses targets beyond this magnitude.
pub const MAX_EPSILON: f64 = 1.0;
/// Smallest step as a fraction of `epsilon_step` before giving up.
const MIN_STEP_FRACTION: f64 = 1.0 / 16.0;

impl StationarySolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        if self.n_modes < 1 {
            return bad("n_modes", "must be >= 1".into());
        }
        if !(crate::sphere::MIN_DEGREE..=crate::sphere::MAX_DEGREE).contains(&self.sphere_degree) {
            return bad("sphere_degree", format!("must lie in 2..=128, got {}", self.sphere_degree));
        }
        if !self.epsilon_target.is_finite() || self.epsilon_target.abs() > MAX_EPSILON {
            return bad("epsilon_target", format!("|epsilon_target| must be <= 1, got {}", self.epsilon_target));
        }
        if !(self.epsilon_step > 0.0) {
            return bad("epsilon_step", format!("must be > 0, got {}", self.epsilon_step));
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol", format!("must be > 0, got {}", self.newton_tol));
        }
        if self.max_newton_iters < 1 {
            return bad("max_newton_iters", "must be >= 1".into());
        }
        Ok(())
    }
}

/// `max_n ‖gₙ‖_{L¹(S₂)}`.
pub fn max_mode_l1(g: &ModalField) -> f64 {
    (1..=g.n_modes()).map(|n| lp_norm(&g.mode(n), 1.0)).fold(0.0, f64::max)
}

/// Outcome of Newton at a single `ε`.
#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub field: ModalField,
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub linear_iters: Vec<usize>,
}

/// Newton solver for `𝒯(ε,f) = 0` with cached `𝒯₀` factorizations.
pub struct NewtonSolver {
    op: StationaryOperator,
    resolvents: Vec<ModeResolvent>,
    tol: f64,
    max_iters: usize,
    linear_solver: LinearSolver,
}

impl NewtonSolver {
    pub fn new(kappa: &KappaTensor, config: &StationarySolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = build_grid(config.sphere_degree)?;
        let ops = Arc::new(GalerkinOperators::new(&grid, kappa));
        Self::with_operators(ops, config)
    }

    pub fn with_operators(ops: Arc<GalerkinOperators>, config: &StationarySolverConfig) -> Result<Self> {
        let op = StationaryOperator::new(ops, config.n_modes);
        let resolvents = op.resolvents()?;
        Ok(Self {
            op,
            resolvents,
            tol: config.newton_tol,
            max_iters: config.max_newton_iters,
            linear_solver: config.linear_solver,
        })
    }

    pub fn operator(&self) -> &StationaryOperator {
        &self.op
    }

    pub fn resolvents(&self) -> &[ModeResolvent] {
        &self.resolvents
    }

    /// `fₙ = L_n⁻¹((3/4π)(κ:u⊗u) 1ₙ)`.
    pub fn solve_epsilon_zero(&self) -> ModalField {
        let grid = self.op.ops().grid();
        let zero = ModalField::zeros(grid, self.op.n_modes());
        let rhs = self.op.residual(0.0, &zero).scaled(-1.0);
        let x = apply_block_inverse(&self.resolvents, rhs.as_flat(), grid.n_harmonics());
        ModalField::from_flat(grid, self.op.n_modes(), x).expect("sizes match")
    }

    fn linear_solve(&self, eps: f64, g: &ModalField, rhs: &ModalField) -> Result<(ModalField, usize)> {
        let grid = g.grid();
        let nh = grid.n_harmonics();
        let n = self.op.n_modes();
        if eps == 0.0 {
            let x = apply_block_inverse(&self.resolvents, rhs.as_flat(), nh);
            return Ok((ModalField::from_flat(grid, n, x)?, 1));
        }
        let lin = self.op.linearize(eps, g);
        match self.linear_solver {
            LinearSolver::DenseDirect => {
                let j = self.op.jacobian_matrix(&lin);
                let lu = j.clone().lu();
                let b = nalgebra::DVector::from_column_slice(rhs.as_flat());
                let mut x = lu
                    .solve(&b)
                    .ok_or_else(|| Error::LinearSolver("dense Jacobian is singular".into()))?;
                let r = &b - &j * &x;
                if let Some(dx) = lu.solve(&r) {
                    x += dx;
                }
                Ok((ModalField::from_flat(grid, n, x.as_slice().to_vec())?, 1))
            }
            LinearSolver::Iterative => {
                let apply = |v: &[f64]| {
                    let h = ModalField::from_flat(grid, n, v.to_vec()).expect("sizes match");
                    self.op.jacobian_apply_with(&lin, &h).into_flat()
                };
                let precond = |v: &[f64]| apply_block_inverse(&self.resolvents, v, nh);
                let opts = GmresOptions::default();
                let (x, out) = gmres(apply, precond, rhs.as_flat(), None, &opts);
                if !out.converged {
                    return Err(Error::LinearSolver(format!(
                        "GMRES stalled after {} iterations (residual {:.3e})",
                        out.iterations, out.residual_norm
                    )));
                }
                Ok((ModalField::from_flat(grid, n, x)?, out.iterations))
            }
        }
    }

    /// Newton iteration at fixed `ε` from `initial`.
    pub fn solve(&self, eps: f64, initial: &ModalField) -> NewtonOutcome {
        let mut f = initial.resized(self.op.n_modes());
        let mut res = self.op.residual(eps, &f);
        let mut norm = max_mode_l1(&res);
        let mut history = vec![norm];
        let mut linear_iters = Vec::new();
        let mut iterations = 0;
        while norm > self.tol && iterations < self.max_iters {
            let (delta, its) = match self.linear_solve(eps, &f, &res.scaled(-1.0)) {
                Ok(v) => v,
                Err(e) => {
                    debug!("Newton at eps={eps}: {e}");
                    break;
                }
            };
            f.axpy(1.0, &delta);
            iterations += 1;
            linear_iters.push(its);
            res = self.op.residual(eps, &f);
            norm = max_mode_l1(&res);
            history.push(norm);
            debug!("eps={eps:+.4} newton {iterations}: residual {norm:.3e} ({its} linear its)");
            if !norm.is_finite() {
                break;
            }
        }
        NewtonOutcome { converged: norm <= self.tol, field: f, iterations, residual_history: history, linear_iters }
    }
}

/// Walks `ε` from 0 to the target in fixed steps, halving on failure.
pub fn newton_continuation(kappa: &KappaTensor, config: &StationarySolverConfig) -> Result<(ModalField, SolveReport)> {
    let solver = NewtonSolver::new(kappa, config)?;
    continue_with(&solver, kappa, config)
}

pub fn continue_with(
    solver: &NewtonSolver,
    kappa: &KappaTensor,
    config: &StationarySolverConfig,
) -> Result<(ModalField, SolveReport)> {
    let start = solver.solve_epsilon_zero();
    let first = solver.solve(0.0, &start);
    let mut path = vec![step_record(0.0, &first)];
    if !first.converged {
        let report = SolveReport::build(&first.field, kappa, path, false);
        return Err(Error::NoConvergence { epsilon: 0.0, last: Box::new((first.field, report)) });
    }
    let mut f = first.field;
    let target = config.epsilon_target;
    let base = config.epsilon_step.copysign(if target < 0.0 { -1.0 } else { 1.0 });
    let mut step = base;
    let mut eps = 0.0;
    while eps != target {
        let mut next = eps + step;
        if (target - next) * base.signum() <= 0.0 {
            next = target;
        }
        let out = solver.solve(next, &f);
        if out.converged {
            info!("converged at eps={next:+.5} in {} Newton steps", out.iterations);
            path.push(step_record(next, &out));
            f = out.field;
            eps = next;
            step = (2.0 * step).abs().min(base.abs()).copysign(base);
        } else {
            step /= 2.0;
            info!("Newton failed at eps={next:+.5}; step reduced to {step:.3e}");
            if step.abs() < base.abs() * MIN_STEP_FRACTION * (1.0 - 1e-12) {
                let report = SolveReport::build(&f, kappa, path, false);
                return Err(Error::NoConvergence { epsilon: next, last: Box::new((f, report)) });
            }
        }
    }
    let report = SolveReport::build(&f, kappa, path, true);
    Ok((f, report))
}

fn step_record(eps: f64, out: &NewtonOutcome) -> EpsilonStep {
    EpsilonStep {
        epsilon: eps,
        newton_iters: out.iterations,
        final_residual: *out.residual_history.last().unwrap_or(&f64::NAN),
        residual_history: out.residual_history.clone(),
        linear_iters: out.linear_iters.clone(),
    }
}
