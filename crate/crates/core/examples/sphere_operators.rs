//! Drift field, surface divergence and advection on the Gauss-Legendre grid.

use doi_edwards::sphere::{advect, build_grid, drift_field, kappa_uu_field, surface_divergence, KappaTensor};
use doi_edwards::{Result, SphereField};

fn main() -> Result<()> {
    let grid = build_grid(8)?;
    println!("degree {}: {} x {} nodes, {} harmonics", grid.degree(), grid.n_lat(), grid.n_lon(), grid.n_harmonics());

    let kappa = KappaTensor::new([[0.3, 1.0, 0.0], [0.0, -0.1, 0.4], [0.2, 0.0, -0.2]]);
    let div = surface_divergence(&drift_field(&kappa, &grid)).values();
    let quv = kappa_uu_field(&kappa, &grid).values();
    let defect = div.iter().zip(&quv).map(|(d, q)| (d + 3.0 * q).abs()).fold(0.0, f64::max);
    println!("max |div G + 3 k:uu| = {defect:.2e}");

    // a smooth test density, advected by the flow
    let phi = SphereField::from_fn(&grid, |u| (1.0 + u[0] * u[1]).exp());
    let a = advect(&kappa, &phi);
    println!("integral of phi        = {:.12}", phi.integral());
    println!("integral of div(G phi) = {:.2e}", a.integral());
    Ok(())
}
