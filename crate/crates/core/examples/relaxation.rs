//! Relaxation of the uniform density towards the stationary state in shear.

use doi_edwards::evolution::{evolve, fit_decay, EvolutionConfig, InitialData, Scheme};
use doi_edwards::stationary::{newton_continuation, StationarySolverConfig};
use doi_edwards::{KappaTensor, Result};

fn main() -> Result<()> {
    let kappa = KappaTensor::simple_shear(1.0);
    let eps = 0.05;
    let (stationary, _) = newton_continuation(
        &kappa,
        &StationarySolverConfig { n_modes: 32, epsilon_target: eps, ..Default::default() },
    )?;

    let config = EvolutionConfig {
        dt: 0.01,
        t_final: 3.0,
        scheme: Scheme::ImexCn,
        snapshot_stride: 20,
        initial_data: InitialData::Zero,
        n_modes: 32,
        ..Default::default()
    };
    let traj = evolve(&config, eps, &kappa, Some(&stationary))?;
    println!("{:>5} {:>12} {:>12} {:>10}", "t", "xi", "dist", "min F");
    for row in traj.rows() {
        println!("{:>5.2} {:>12.4e} {:>12.4e} {:>10.6}", row.t, row.xi, row.dist_sup_l1.unwrap_or(f64::NAN), row.min_f);
    }
    let fit = fit_decay(&traj, 0.2)?;
    println!("xi ~ {:.2e} exp({:.3} t), rms residual {:.2}", fit.amplitude, fit.rate, fit.fit_residual);
    Ok(())
}
