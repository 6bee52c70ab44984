use super::*;
use crate::modal::{cos_projection, lambda_profile, xr_norm};
use crate::sphere::quadrature::composite_gauss;
use crate::sphere::{build_grid, KappaTensor};
use crate::stationary::{newton_continuation, solve_epsilon_zero, solve_l, StationarySolverConfig};
use rand::SeedableRng;
use std::f64::consts::{PI, SQRT_2};

fn shear() -> KappaTensor {
    KappaTensor::simple_shear(1.0)
}

fn quick() -> VerifyOptions {
    VerifyOptions { sphere_degree: 6, trials: 6, ..Default::default() }
}

#[test]
fn envelope_slope_cases() {
    let xs: Vec<f64> = (1..=10).map(|n| n as f64).collect();
    let flat = vec![3.0; 10];
    assert!(envelope_slope(&xs, &flat).abs() < 1e-14);
    let grow: Vec<f64> = xs.iter().map(|x| x * x).collect();
    assert!((envelope_slope(&xs, &grow) - 2.0).abs() < 1e-12);
    assert_eq!(envelope_slope(&xs, &vec![0.0; 10]), 0.0);
    // a low first point tilts the full fit but not the upper half
    let mut bump = vec![1.0; 10];
    bump[0] = 0.05;
    assert!(envelope_slope(&xs, &bump) > 0.5);
    assert!(tail_slope(&xs, &bump).abs() < 1e-14);
    assert!((tail_slope(&xs, &grow) - 2.0).abs() < 1e-12);
    // duplicate abscissae reduce to the max
    let xs2 = [1.0, 1.0, 2.0, 2.0];
    let ys2 = [1.0, 0.5, 2.0, 0.1];
    assert!((envelope_slope(&xs2, &ys2) - 1.0).abs() < 1e-12);
}

#[test]
fn report_serializes() {
    let r = BoundReport::new("demo", &["n"], vec![vec![1.0], vec![2.0]], vec![1.0, 0.25], &[1.0, 4.0], |r| r[0])
        .with_seed(3);
    assert!(r.verdict);
    assert_eq!(r.normalized, vec![1.0, 1.0]);
    let csv = r.to_csv_string().unwrap();
    assert!(csv.starts_with("n,measured,normalized\n"));
    let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    for key in ["bound_name", "parameter_grid", "measured", "normalized", "max_normalized", "verdict", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let dir = tempfile::tempdir().unwrap();
    let (j, c) = r.write(dir.path()).unwrap();
    assert!(j.exists() && c.exists());
}

#[test]
fn resolvent_without_flow_is_scalar() {
    for r in [2.0, 1.0] {
        let (main, drift) = verify_resolvent_bound(&KappaTensor::zero(), 12, r, &quick()).unwrap();
        for v in &main.normalized {
            assert!((v - 1.0 / (PI * PI)).abs() < 1e-12, "{v}");
        }
        assert!(main.verdict);
        assert!(drift.measured.iter().all(|v| *v == 0.0));
    }
    assert!(verify_resolvent_bound(&shear(), 65, 2.0, &quick()).is_err());
}

#[test]
fn resolvent_power_iteration_matches_svd() {
    let opts = quick();
    let grid = build_grid(opts.sphere_degree).unwrap();
    let ops = crate::galerkin::GalerkinOperators::new(&grid, &shear());
    let (main, drift) = verify_resolvent_bound(&shear(), 16, 2.0, &opts).unwrap();
    for n in 1..=16 {
        let inv = ops.mode_matrix(n).try_inverse().unwrap();
        let sigma = inv.singular_values().max();
        assert!((main.measured[n - 1] - sigma).abs() < 1e-10 * sigma, "n={n} {} {sigma}", main.measured[n - 1]);
    }
    assert!(main.verdict && drift.verdict);
}

#[test]
fn resolvent_shear_is_flat() {
    let (main, _) = verify_resolvent_bound(&shear(), 20, 2.0, &quick()).unwrap();
    assert!(main.verdict, "slope {}", main.trend_slope);
    let (main1, _) = verify_resolvent_bound(&shear(), 20, 1.0, &quick()).unwrap();
    assert!(main1.verdict, "slope {}", main1.trend_slope);
}

#[test]
fn characteristics_oracle_matches_spectral_resolvent() {
    let k = shear();
    let grid = build_grid(24).unwrap();
    let rhs = crate::sphere::kappa_uu_field(&k, &grid);
    let h = solve_l(1, &k, &rhs).unwrap();
    let psi = |u: &[f64; 3]| k.contract_uu(u);
    let mut num = 0.0;
    let mut den = 0.0;
    let vals = h.values();
    let w = grid.weights();
    for (i, u) in grid.nodes().iter().enumerate() {
        let o = resolvent_by_characteristics(1, &k, &psi, u, 0.01);
        num += w[i] * (o - vals[i]).powi(2);
        den += w[i] * o * o;
    }
    let rel = (num / den).sqrt();
    assert!(rel < 1e-6, "relative L2 {rel:e}");
}

#[test]
fn b_bound_cases() {
    let opts = quick();
    let grid = build_grid(opts.sphere_degree).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phi = random_modal_field(&grid, 8, 1.0, &mut rng);
    let zero = ModalField::zeros(&grid, 8);
    assert!(b_ratios(&shear(), &phi, &zero, 8).iter().all(|v| *v == 0.0));

    // scale invariance
    let psi = random_modal_field(&grid, 8, 1.0, &mut rng);
    let a = b_ratios(&shear(), &phi, &psi, 8);
    let b = b_ratios(&shear(), &phi.scaled(3.0), &psi.scaled(-0.25), 8);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
    }

    let first = verify_b_bound_first_order(&shear(), 32, 10, &opts).unwrap();
    assert!(first.verdict, "slope {}", first.trend_slope);
    let second = verify_b_bound(&shear(), 32, 10, &opts).unwrap();
    assert_eq!(second.seed, Some(opts.seed));
    assert_eq!(second.measured, first.measured);
}

#[test]
fn cos_bound_cases() {
    let grid = build_grid(4).unwrap();
    let phi = SphereField::from_fn(&grid, |u| u[0] * u[2]);
    for n in 1..=5 {
        let f = ModalField::single_mode(&phi, n, 6);
        assert!(cos_projection(&f, n).unwrap().coeffs().iter().all(|v| *v == 0.0));
    }
    let report = verify_cos_bound(32, 4, &quick()).unwrap();
    assert!(report.verdict, "slope {}", report.trend_slope);

    let rows = cos_partial_fraction_check(32, 64, 4).unwrap();
    for row in &rows {
        // direct summation of √2 Σ f_p ∫ sin(pπs) cos(Nπs) ds
        let nf = row.n as f64;
        let direct: f64 = (1..=64usize)
            .filter(|p| *p != row.n && (p + row.n) % 2 == 1)
            .map(|p| {
                let pf = p as f64;
                2.0 * SQRT_2 * pf / (PI * (pf * pf - nf * nf)) * pf.powi(-3)
            })
            .sum::<f64>()
            .abs();
        assert!((row.normalized - nf * nf * direct).abs() < 1e-12 * row.normalized.max(1.0));
        assert!(row.normalized <= row.estimate * (1.0 + 1e-12));
        assert!(row.estimate <= 4.0 * row.normalized, "N={}: {row:?}", row.n);
        assert!(row.estimate_all_parities >= row.estimate);
    }
}

/// `∫₀¹ ∂/∂s[(∫₀ˢH_q) f] Hₙ ds = −∫₀¹ (∫₀ˢH_q) f Hₙ' ds` by composite Gauss.
fn brt_quadrature(p: usize, q: usize, n: usize) -> f64 {
    let (s, w) = composite_gauss(0.0, 1.0, 200, 10);
    s.iter()
        .zip(&w)
        .map(|(s, w)| {
            let iq = SQRT_2 * (1.0 - (q as f64 * PI * s).cos()) / (q as f64 * PI);
            let f = SQRT_2 * (p as f64 * PI * s).sin();
            let dh = SQRT_2 * n as f64 * PI * (n as f64 * PI * s).cos();
            -w * iq * f * dh
        })
        .sum()
}

#[test]
fn brt_bound_cases() {
    let grid = build_grid(4).unwrap();
    let zero = ModalField::zeros(&grid, 6);
    assert!(crate::modal::brt_coefficient(&zero, 2, 3).unwrap().coeffs().iter().all(|v| *v == 0.0));
    let one = SphereField::constant(&grid, 1.0);
    for (p, q, n) in [(1, 1, 1), (2, 3, 5), (4, 1, 4), (3, 5, 2)] {
        let f = ModalField::single_mode(&one, p, 8);
        let got = crate::modal::brt_coefficient(&f, q, n).unwrap().eval(&[0.0, 0.0, 1.0]);
        let want = brt_quadrature(p, q, n);
        assert!((got - want).abs() < 1e-9, "p={p} q={q} n={n}: {got} vs {want}");
    }
    let report = verify_brt_bound(16, 16, 3, &quick()).unwrap();
    assert!(report.verdict, "slope {}", report.trend_slope);
    assert_eq!(report.parameter_grid.len(), 256);
}

#[test]
fn mode_coupling_edge_cases() {
    let grid = build_grid(4).unwrap();
    let f = solve_epsilon_zero(&shear(), 6, 4).unwrap();
    assert!(matches!(
        verify_mode_coupling_bounds(&[], &f, &shear()),
        Err(crate::Error::InsufficientData(_))
    ));
    let snaps = vec![(0.0, f.clone()), (1.0, f.clone())];
    let (a, b) = verify_mode_coupling_bounds(&snaps, &f, &shear()).unwrap();
    assert!(a.measured.iter().chain(&b.measured).all(|v| *v == 0.0));
    let _ = grid;
}

#[test]
fn a_qn_parseval_holds() {
    let f = solve_epsilon_zero(&shear(), 16, 6).unwrap();
    let (report, rows) = a_qn_parseval(&f, &shear(), 12, 8192);
    for r in &rows {
        assert!(r.relative_defect < 1e-3, "{r:?}");
    }
    assert!(report.verdict, "slope {}", report.trend_slope);

    // hand case: constant profile Λ = c₀, a_qn = c₀·(H_q)' coefficients
    let profile = lambda_profile(&shear(), &f);
    let direct = lambda_profile_ds_norm_sq(&profile, 3);
    assert!((direct - rows[2].direct).abs() < 1e-14);
    let flat = crate::modal::CosProfile { c0: 0.5, coeffs: vec![0.0; 4] };
    let a = a_qn_coefficients(&flat, 2, 6);
    for (n, v) in a.iter().enumerate() {
        let n = n + 1;
        let want = if (n + 2) % 2 == 1 { -2.0 * n as f64 * PI * 0.5 * 4.0 / (PI * (4.0 - (n * n) as f64)) } else { 0.0 };
        assert!((v - want).abs() < 1e-13, "n={n}: {v} vs {want}");
    }
}

#[test]
fn oracle_without_flow_is_zero() {
    let o = oracle_dense_solve(&KappaTensor::zero(), 0.1, &OracleOptions { s_points: 8, n_lat: 8, n_lon: 16, ..Default::default() })
        .unwrap();
    assert!(o.values.iter().all(|v| *v == 0.0));
    assert!(oracle_dense_solve(&shear(), 0.0, &OracleOptions { s_points: 65, ..Default::default() }).is_err());
}

#[test]
fn oracle_matches_spectral_solution() {
    let k = shear();
    let opts = OracleOptions::default();
    let o = oracle_dense_solve(&k, 0.0, &opts).unwrap();
    let f = solve_epsilon_zero(&k, 32, 8).unwrap();
    let rel = o.relative_l1_to(&f);
    assert!(rel <= 1e-3, "{rel:e}");
    // finite-volume fluxes conserve mass at every s node
    let nc = o.n_cells();
    for i in 0..o.s.len() {
        let m: f64 = o.values[i * nc..(i + 1) * nc].iter().zip(&o.areas).map(|(v, a)| v * a).sum();
        assert!(m.abs() < 1e-12, "{m:e}");
    }

    let eps = 0.05;
    let cfg = StationarySolverConfig { n_modes: 32, sphere_degree: 8, epsilon_target: eps, ..Default::default() };
    let (fe, _) = newton_continuation(&k, &cfg).unwrap();
    let oe = oracle_dense_solve(&k, eps, &opts).unwrap();
    assert!(oe.picard_iterations >= 2);
    let rel = oe.relative_l1_to(&fe);
    assert!(rel <= 5e-3, "{rel:e}");
}

#[test]
fn oracle_refines_at_second_order() {
    let k = shear();
    let truth = solve_epsilon_zero(&k, 48, 18).unwrap();
    let errs: Vec<f64> = [(8, 12), (16, 24), (32, 48)]
        .iter()
        .map(|(m, nl)| {
            let o = oracle_dense_solve(&k, 0.0, &OracleOptions { s_points: *m, n_lat: *nl, n_lon: 2 * nl, ..Default::default() })
                .unwrap();
            o.relative_l1_to(&truth)
        })
        .collect();
    let order = (errs[1] / errs[2]).log2();
    assert!(order >= 1.8, "errors {errs:?}, order {order}");
    let _ = xr_norm;
}
