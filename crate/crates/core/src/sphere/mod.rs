//! Discrete calculus on the unit sphere.

mod field;
mod grid;
mod kappa;
pub mod quadrature;

use std::sync::Arc;

pub use field::{SphereField, TangentField};
pub use grid::{harmonic_degree_order, harmonic_index, SphereGrid};
pub use kappa::KappaTensor;

use crate::error::{Error, Result};

pub const MIN_DEGREE: usize = 2;
pub const MAX_DEGREE: usize = 128;

/// Quadrature grid resolving harmonics through degree `degree`.
pub fn build_grid(degree: usize) -> Result<Arc<SphereGrid>> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
        return Err(Error::DegreeOutOfRange(degree));
    }
    Ok(Arc::new(SphereGrid::new(degree)))
}

/// Drift `𝒢 = κu − (κ:u⊗u)u`.
#[inline]
pub fn g_vector(kappa: &KappaTensor, u: &[f64; 3]) -> [f64; 3] {
    let ku = kappa.apply(u);
    let c = ku[0] * u[0] + ku[1] * u[1] + ku[2] * u[2];
    [ku[0] - c * u[0], ku[1] - c * u[1], ku[2] - c * u[2]]
}

/// `𝒢` sampled at the grid nodes.
pub fn drift_field(kappa: &KappaTensor, grid: &Arc<SphereGrid>) -> TangentField {
    let values = grid.nodes().iter().map(|u| g_vector(kappa, u)).collect();
    TangentField::from_nodal(grid, values).expect("node count matches")
}

/// `κ:u⊗u` as a field (exactly degree 2).
pub fn kappa_uu_field(kappa: &KappaTensor, grid: &Arc<SphereGrid>) -> SphereField {
    SphereField::from_fn(grid, |u| kappa.contract_uu(u))
}

pub fn surface_gradient(f: &SphereField) -> TangentField {
    let values = f.grid().synthesize_gradient(f.coeffs());
    TangentField::from_nodal(f.grid(), values).expect("node count matches")
}

/// Surface divergence, defined through `∫ (∂/∂u·X) Y dμ = −∫ X·∂Y/∂u dμ`
/// for every harmonic `Y` of degree ≤ `L`. Exact when the components of
/// `X` have degree ≤ `L − 1`; otherwise the `L²` projection of the
/// divergence onto degree `L` (up to quadrature aliasing).
pub fn surface_divergence(x: &TangentField) -> SphereField {
    let coeffs = x.grid().analyze_divergence(x.values());
    SphereField::from_coeffs(x.grid(), coeffs).expect("coefficient count matches")
}

/// `∂/∂u·(𝒢f) = 𝒢·∂f/∂u − 3(κ:u⊗u)f`, pseudospectrally.
pub fn advect(kappa: &KappaTensor, f: &SphereField) -> SphereField {
    let grid = f.grid();
    let grad = grid.synthesize_gradient(f.coeffs());
    let vals = grid.synthesize(f.coeffs());
    let nodal: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grad.iter().zip(&vals))
        .map(|(u, (g, v))| {
            let d = g_vector(kappa, u);
            d[0] * g[0] + d[1] * g[1] + d[2] * g[2] - 3.0 * kappa.contract_uu(u) * v
        })
        .collect();
    SphereField::from_values(grid, &nodal)
}

/// Nodal `𝒢·∂f/∂u`.
pub fn drift_derivative_values(kappa: &KappaTensor, f: &SphereField) -> Vec<f64> {
    let grid = f.grid();
    let grad = grid.synthesize_gradient(f.coeffs());
    grid.nodes()
        .iter()
        .zip(&grad)
        .map(|(u, g)| {
            let d = g_vector(kappa, u);
            d[0] * g[0] + d[1] * g[1] + d[2] * g[2]
        })
        .collect()
}

/// `∫ (κ:v⊗v) f(v) dμ(v)`.
pub fn quadratic_moment(kappa: &KappaTensor, f: &SphereField) -> f64 {
    let grid = f.grid();
    let vals = f.values();
    grid.nodes()
        .iter()
        .zip(vals.iter().zip(grid.weights()))
        .map(|(u, (v, w))| kappa.contract_uu(u) * v * w)
        .sum()
}

/// `‖f‖_{L^r(S₂)}` by plain quadrature of `|f|^r`; `r = ∞` takes the
/// nodal maximum.
pub fn lp_norm(f: &SphereField, r: f64) -> f64 {
    lp_norm_values(f.grid(), &f.values(), r)
}

pub fn lp_norm_values(grid: &SphereGrid, values: &[f64], r: f64) -> f64 {
    assert!(r >= 1.0, "L^r norm needs r >= 1, got {r}");
    if r.is_infinite() {
        return values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    if r == 1.0 {
        return values.iter().zip(grid.weights()).map(|(v, w)| v.abs() * w).sum();
    }
    let s: f64 = values.iter().zip(grid.weights()).map(|(v, w)| v.abs().powf(r) * w).sum();
    s.powf(1.0 / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_kappa(rng: &mut ChaCha8Rng) -> KappaTensor {
        let mut m = [[0.0; 3]; 3];
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        KappaTensor::new(m)
    }

    fn random_field(grid: &Arc<SphereGrid>, max_degree: usize, rng: &mut ChaCha8Rng) -> SphereField {
        let mut c = vec![0.0; grid.n_harmonics()];
        for (i, x) in c.iter_mut().enumerate() {
            if harmonic_degree_order(i).0 <= max_degree {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
        SphereField::from_coeffs(grid, c).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_degree_range() {
        assert!(matches!(build_grid(1), Err(Error::DegreeOutOfRange(1))));
        assert!(matches!(build_grid(129), Err(Error::DegreeOutOfRange(129))));
        let g = build_grid(2).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn second_moment_quadrature() {
        let g = build_grid(4).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|u| u[0] * u[0]).collect();
        assert!((g.integrate(&v) - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn degree_three_five_products_orthonormal() {
        let g = build_grid(8).unwrap();
        let nh = g.n_harmonics();
        let basis = |i: usize| {
            let mut e = vec![0.0; nh];
            e[i] = 1.0;
            g.synthesize(&e)
        };
        for m3 in -3i64..=3 {
            let a = basis(harmonic_index(3, m3));
            for m5 in -5i64..=5 {
                let b = basis(harmonic_index(5, m5));
                let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
                assert!(g.integrate(&prod).abs() < 1e-12);
            }
            let sq: Vec<f64> = a.iter().map(|x| x * x).collect();
            assert!((g.integrate(&sq) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_examples() {
        let u = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        assert_eq!(g_vector(&KappaTensor::zero(), &u), [0.0; 3]);
        let g = g_vector(&KappaTensor::simple_shear(1.0), &u);
        let h = 1.0 / (2.0 * 2f64.sqrt());
        assert!((g[0] - h).abs() < 1e-15 && (g[1] + h).abs() < 1e-15 && g[2].abs() < 1e-15);
        let k = KappaTensor::new([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]);
        assert_eq!(g_vector(&k, &[0.0, 0.0, 1.0]), [0.0; 3]);
    }

    #[test]
    fn gradient_examples() {
        let g = build_grid(6).unwrap();
        let c = surface_gradient(&SphereField::constant(&g, 2.5));
        assert!(c.max_norm() < 1e-13);

        let f = SphereField::from_fn(&g, |u| u[2]);
        let grad = surface_gradient(&f);
        for (x, u) in grad.values().iter().zip(g.nodes()) {
            let want = [-u[0] * u[2], -u[1] * u[2], 1.0 - u[2] * u[2]];
            for k in 0..3 {
                assert!((x[k] - want[k]).abs() < 1e-13);
            }
        }

        let f = SphereField::from_fn(&g, |u| u[0] * u[1]);
        let grad = surface_gradient(&f);
        let h = 1e-6;
        for (x, u) in grad.values().iter().zip(g.nodes()) {
            let ext = |p: [f64; 3]| p[0] * p[1];
            let mut fd = [0.0; 3];
            for k in 0..3 {
                let mut up = *u;
                let mut dn = *u;
                up[k] += h;
                dn[k] -= h;
                fd[k] = (ext(up) - ext(dn)) / (2.0 * h);
            }
            let n = fd[0] * u[0] + fd[1] * u[1] + fd[2] * u[2];
            for k in 0..3 {
                assert!((x[k] - (fd[k] - n * u[k])).abs() < 1e-8);
            }
            assert!((x[0] * u[0] + x[1] * u[1] + x[2] * u[2]).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_examples() {
        let g = build_grid(8).unwrap();
        let zero = TangentField::from_fn(&g, |_| [0.0; 3]);
        assert!(surface_divergence(&zero).coeffs().iter().all(|c| c.abs() < 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_kappa(&mut rng);
        let div = surface_divergence(&drift_field(&k, &g));
        let want: Vec<f64> = g.nodes().iter().map(|u| -3.0 * k.contract_uu(u)).collect();
        assert!(max_abs_diff(&div.values(), &want) < 1e-10);
    }

    #[test]
    fn advect_examples() {
        let g = build_grid(6).unwrap();
        let k = KappaTensor::simple_shear(0.7);
        let a = advect(&k, &SphereField::constant(&g, 1.5));
        let want: Vec<f64> = g.nodes().iter().map(|u| -4.5 * k.contract_uu(u)).collect();
        assert!(max_abs_diff(&a.values(), &want) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(&g, 5, &mut rng);
        assert!(advect(&KappaTensor::zero(), &f).coeffs().iter().all(|c| c.abs() < 1e-15));
        assert!(advect(&k, &f).integral().abs() < 1e-10);
    }

    #[test]
    fn quadratic_moment_examples() {
        let g = build_grid(6).unwrap();
        let k = KappaTensor::simple_shear(1.0);
        assert!(quadratic_moment(&k, &SphereField::constant(&g, 1.0)).abs() < 1e-14);
        // ∫ u₁²u₂² dμ = 4π/15
        let f = SphereField::from_fn(&g, |u| k.contract_uu(u));
        assert!((quadratic_moment(&k, &f) - 4.0 * PI / 15.0).abs() < 1e-13);
        let odd = SphereField::from_fn(&g, |u| u[0] - 2.0 * u[2]);
        assert!(quadratic_moment(&k, &odd).abs() < 1e-14);
    }

    #[test]
    fn lp_norm_examples() {
        let g = build_grid(6).unwrap();
        let one = SphereField::constant(&g, 1.0);
        assert!((lp_norm(&one, 1.0) - 4.0 * PI).abs() < 1e-12);
        let c = SphereField::constant(&g, -0.3);
        for r in [1.0, 1.5, 2.0, 3.0] {
            assert!((lp_norm(&c, r) - 0.3 * (4.0 * PI).powf(1.0 / r)).abs() < 1e-12);
        }
        assert!((lp_norm(&c, f64::INFINITY) - 0.3).abs() < 1e-14);
        let u3 = SphereField::from_fn(&g, |u| u[2]);
        assert!((lp_norm(&u3, 2.0) - (4.0 * PI / 3.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn divergence_identity_for_random_kappa() {
        let g = build_grid(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = random_kappa(&mut rng);
            let div = surface_divergence(&drift_field(&k, &g)).values();
            for (d, u) in div.iter().zip(g.nodes()) {
                assert!((d + 3.0 * k.contract_uu(u)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn divergence_agrees_with_strong_form() {
        // Σ_k e_k·∂X_k/∂u for components of degree ≤ L − 1
        let g = build_grid(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let comps: Vec<SphereField> = (0..3).map(|_| random_field(&g, 6, &mut rng)).collect();
        let x = TangentField::from_fn(&g, |u| {
            [comps[0].eval(u), comps[1].eval(u), comps[2].eval(u)]
        });
        let weak = surface_divergence(&x).values();
        // tangential projection of the ambient field changes the divergence by
        // −2(X·u); compute the strong form for the projected field directly
        let xu = SphereField::from_fn(&g, |u| {
            comps[0].eval(u) * u[0] + comps[1].eval(u) * u[1] + comps[2].eval(u) * u[2]
        });
        let xu_vals = xu.values();
        let mut strong = vec![0.0; g.n_nodes()];
        for (k, c) in comps.iter().enumerate() {
            let gr = surface_gradient(c);
            for (j, v) in gr.values().iter().enumerate() {
                strong[j] += v[k];
            }
        }
        for j in 0..g.n_nodes() {
            strong[j] -= 2.0 * xu_vals[j];
        }
        assert!(max_abs_diff(&weak, &strong) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn drift_is_tangent(k in prop::array::uniform9(-2.0f64..2.0),
                            v in prop::array::uniform3(-1.0f64..1.0)) {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            prop_assume!(n > 1e-3);
            let u = [v[0] / n, v[1] / n, v[2] / n];
            let g = g_vector(&KappaTensor::from_row_major(&k), &u);
            prop_assert!((g[0] * u[0] + g[1] * u[1] + g[2] * u[2]).abs() < 1e-13);
        }

        #[test]
        fn stokes_and_duality(seed in any::<u64>()) {
            let g = build_grid(8).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let comps: Vec<SphereField> = (0..3).map(|_| random_field(&g, 7, &mut rng)).collect();
            let x = TangentField::from_components([&comps[0], &comps[1], &comps[2]]);
            let div = surface_divergence(&x);
            prop_assert!(div.integral().abs() < 1e-10);

            let h = random_field(&g, 8, &mut rng);
            let lhs = g.integrate(&x.dot_values(&surface_gradient(&h)));
            prop_assert!((lhs + div.dot(&h)).abs() < 1e-9);

            let k = random_kappa(&mut rng);
            let phi = random_field(&g, 7, &mut rng);
            let psi = random_field(&g, 8, &mut rng);
            let left = advect(&k, &phi).dot(&psi);
            let dpsi = drift_derivative_values(&k, &psi);
            let prod: Vec<f64> = phi.values().iter().zip(&dpsi).map(|(a, b)| -a * b).collect();
            prop_assert!((left - g.integrate(&prod)).abs() < 1e-9);
        }

        #[test]
        fn chain_rule_for_positive_fields(seed in any::<u64>(), ri in 0usize..3) {
            let r = [1.1, 2.0, 3.0][ri];
            let g = build_grid(40).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = random_kappa(&mut rng);
            let a: [f64; 4] = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3),
                               rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            let phi_fn = |u: &[f64; 3]| 2.0 + a[0] * u[0] + a[1] * u[1] + a[2] * u[2] + a[3] * u[0] * u[2];
            let phi = SphereField::from_fn(&g, phi_fn);
            let phi_r = SphereField::from_fn(&g, |u| phi_fn(u).powf(r));
            let lhs = drift_derivative_values(&k, &phi);
            let rhs = drift_derivative_values(&k, &phi_r);
            for ((l, rr), u) in lhs.iter().zip(&rhs).zip(g.nodes()) {
                let p = phi_fn(u);
                prop_assert!((r * p.powf(r - 1.0) * l - rr).abs() < 1e-8);
            }
        }
    }
}
