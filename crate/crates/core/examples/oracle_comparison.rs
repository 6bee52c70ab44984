//! Spectral stationary solution against the finite-volume oracle.

use doi_edwards::diagnostics::{oracle_dense_solve, OracleOptions};
use doi_edwards::stationary::{newton_continuation, StationarySolverConfig};
use doi_edwards::{KappaTensor, Result};

fn main() -> Result<()> {
    let kappa = KappaTensor::simple_shear(1.0);
    for eps in [0.0, 0.05] {
        let (spectral, _) = newton_continuation(
            &kappa,
            &StationarySolverConfig { epsilon_target: eps, ..Default::default() },
        )?;
        for s_points in [16, 32] {
            let opts = OracleOptions { s_points, n_lat: 3 * s_points / 2, n_lon: 3 * s_points, ..Default::default() };
            let dense = oracle_dense_solve(&kappa, eps, &opts)?;
            println!(
                "eps {eps:.2}  mesh {s_points} x {}x{}  picard {}  relative L1 gap {:.2e}",
                opts.n_lat,
                opts.n_lon,
                dense.picard_iterations,
                dense.relative_l1_to(&spectral)
            );
        }
    }
    Ok(())
}
