//! Stationary solution in simple shear with the modes decoupled (ε = 0).

use doi_edwards::stationary::{newton_continuation, StationarySolverConfig};
use doi_edwards::{KappaTensor, Result};

fn main() -> Result<()> {
    let kappa = KappaTensor::simple_shear(1.0);
    let config = StationarySolverConfig { n_modes: 32, sphere_degree: 8, ..Default::default() };
    let (f, report) = newton_continuation(&kappa, &config)?;

    println!("converged: {}", report.converged);
    println!("X_1 norm {:.6e}, mass error {:.1e}, min F {:.6}", report.xr_norm, report.mass_error, report.min_f);
    println!("largest even mode (L1): {:.1e}", report.even_mode_max_l1);
    println!("{:>3} {:>14} {:>14}", "n", "|f_n|_L1", "n^3 |f_n|_L1");
    for row in report.mode_norm_table.iter().take(9) {
        println!("{:>3} {:>14.6e} {:>14.6e}", row.n, row.l1, row.weighted_l1);
    }

    // density at the midpoint of the chain, in the flow direction and across it
    let mid = f.evaluate(0.5);
    let quarter_pi = 1.0 / (4.0 * std::f64::consts::PI);
    for u in [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0]] {
        println!("F(1/2, {u:?}) = {:.6}", quarter_pi + mid.eval(&u));
    }
    Ok(())
}
