//! Newton continuation in ε in both directions, with the iteration counts
//! of each branch point.

use doi_edwards::stationary::{continue_with, max_mode_l1, NewtonSolver, StationarySolverConfig};
use doi_edwards::{KappaTensor, Result};

fn main() -> Result<()> {
    let kappa = KappaTensor::simple_shear(1.0);
    let base = StationarySolverConfig { n_modes: 24, epsilon_step: 0.02, ..Default::default() };
    let solver = NewtonSolver::new(&kappa, &base)?;

    for target in [-0.1, 0.1] {
        let config = StationarySolverConfig { epsilon_target: target, ..base.clone() };
        let (f, report) = continue_with(&solver, &kappa, &config)?;
        println!("target {target:+}:");
        for step in &report.epsilon_path {
            println!(
                "  eps {:+.3}  newton {}  gmres {:?}  residual {:.1e}",
                step.epsilon, step.newton_iters, step.linear_iters, step.final_residual
            );
        }
        println!("  max_n |f_n|_L1 = {:.6e}, min F = {:.6}", max_mode_l1(&f), report.min_f);
    }
    Ok(())
}
