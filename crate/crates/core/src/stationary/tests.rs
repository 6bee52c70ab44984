use super::*;
use crate::modal::{mass_error, ModalField};
use crate::sphere::{drift_derivative_values, harmonic_degree_order, kappa_uu_field, SphereGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn shear() -> KappaTensor {
    KappaTensor::simple_shear(1.0)
}

fn random_sphere(grid: &Arc<SphereGrid>, max_deg: usize, rng: &mut ChaCha8Rng) -> SphereField {
    let c = (0..grid.n_harmonics())
        .map(|i| if harmonic_degree_order(i).0 <= max_deg { rng.gen_range(-1.0..1.0) } else { 0.0 })
        .collect();
    SphereField::from_coeffs(grid, c).unwrap()
}

fn random_modal(grid: &Arc<SphereGrid>, n: usize, rng: &mut ChaCha8Rng) -> ModalField {
    let modes: Vec<SphereField> =
        (1..=n).map(|p| random_sphere(grid, grid.degree() - 1, rng).scaled((p as f64).powi(-3))).collect();
    ModalField::from_modes(&modes).unwrap()
}

fn small_config(eps: f64) -> StationarySolverConfig {
    StationarySolverConfig { n_modes: 8, sphere_degree: 6, epsilon_target: eps, ..Default::default() }
}

#[test]
fn apply_l_examples() {
    let g = build_grid(6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = random_sphere(&g, 6, &mut rng);
    let out = apply_l(3, &KappaTensor::zero(), &h).unwrap();
    for (a, b) in out.coeffs().iter().zip(h.coeffs()) {
        assert!((a - 9.0 * PI * PI * b).abs() < 1e-12);
    }
    let k = shear();
    let c = SphereField::constant(&g, 0.8);
    let out = apply_l(2, &k, &c).unwrap();
    let want = c.scaled(4.0 * PI * PI).sub(&kappa_uu_field(&k, &g).scaled(2.4));
    for (a, b) in out.coeffs().iter().zip(want.coeffs()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(apply_l(0, &k, &c).is_err());

    // adjoint: ⟨L_n φ, ψ⟩ = ⟨φ, n²π²ψ − 𝒢·∂ψ/∂u⟩
    let phi = random_sphere(&g, 5, &mut rng);
    let psi = random_sphere(&g, 6, &mut rng);
    let lhs = apply_l(2, &k, &phi).unwrap().dot(&psi);
    let d = drift_derivative_values(&k, &psi);
    let pv = phi.values();
    let cross: Vec<f64> = pv.iter().zip(&d).map(|(a, b)| a * b).collect();
    let rhs = 4.0 * PI * PI * phi.dot(&psi) - g.integrate(&cross);
    assert!((lhs - rhs).abs() < 1e-9);
}

#[test]
fn solve_l_examples() {
    let g = build_grid(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rhs = random_sphere(&g, 8, &mut rng);
    let x = solve_l(2, &KappaTensor::zero(), &rhs).unwrap();
    for (a, b) in x.coeffs().iter().zip(rhs.coeffs()) {
        assert!((a - b / (4.0 * PI * PI)).abs() < 1e-15);
    }
    for n in [1, 2, 7] {
        let x = solve_l(n, &shear(), &rhs).unwrap();
        let r = apply_l(n, &shear(), &x).unwrap().sub(&rhs);
        let rn = r.dot(&r).sqrt();
        assert!(rn <= 1e-11 * rhs.dot(&rhs).sqrt(), "n={n}: {rn}");
    }
    let singular = ModeResolvent::from_matrix(1, nalgebra::DMatrix::zeros(4, 4));
    assert!(matches!(singular, Err(Error::SingularOperator { mode: 1, .. })));
}

#[test]
fn epsilon_zero_examples() {
    let f = solve_epsilon_zero(&KappaTensor::zero(), 6, 4).unwrap();
    assert!(f.as_flat().iter().all(|x| *x == 0.0));
    let f = solve_epsilon_zero(&shear(), 8, 6).unwrap();
    for n in (2..=8).step_by(2) {
        assert!(f.mode_coeffs(n).iter().all(|x| *x == 0.0));
    }
    assert!(f.mode_coeffs(1).iter().any(|x| x.abs() > 1e-3));
    let res = apply_t(0.0, &f, &shear());
    assert!(max_mode_l1(&res) <= 1e-10);
    assert!(mass_error(&f, 65) < 1e-12);
}

#[test]
fn apply_t_examples() {
    let g = build_grid(4).unwrap();
    let z = ModalField::zeros(&g, 5);
    assert!(apply_t(0.3, &z, &KappaTensor::zero()).as_flat().iter().all(|x| *x == 0.0));
    let eps = -0.2;
    let k = shear();
    let d = apply_t(eps, &z, &k);
    let c = kappa_uu_field(&k, &g);
    for n in 1..=5 {
        let want = c.scaled(-(3.0 + eps) / (4.0 * PI) * crate::modal::one_n(n).unwrap());
        for (a, b) in d.mode_coeffs(n).iter().zip(want.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let g = build_grid(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = shear();
    let eps = 0.3;
    let f = random_modal(&g, 6, &mut rng);
    let h = random_modal(&g, 6, &mut rng);
    let jh = apply_jacobian(eps, &f, &h, &k);
    let t0 = apply_t(eps, &f, &k);
    let mut errs = Vec::new();
    let deltas = [1e-3, 1e-4, 1e-5, 1e-6];
    for d in deltas {
        let mut fp = f.clone();
        fp.axpy(d, &h);
        let fd = apply_t(eps, &fp, &k).sub(&t0).scaled(1.0 / d);
        errs.push(fd.sub(&jh).l2_norm_sq().sqrt());
    }
    let slope = (errs[0].ln() - errs[3].ln()) / (deltas[0].ln() - deltas[3].ln());
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}, errors {errs:?}");

    // ε = 0: block diagonal
    let mut e = ModalField::zeros(&g, 6);
    e.mode_coeffs_mut(3)[4] = 1.0;
    let col = apply_jacobian(0.0, &f, &e, &k);
    for n in [1, 2, 4, 5, 6] {
        assert!(col.mode_coeffs(n).iter().all(|x| *x == 0.0));
    }

    // linear in h
    let h2 = random_modal(&g, 6, &mut rng);
    let mut comb = h.scaled(2.0);
    comb.axpy(-0.5, &h2);
    let lhs = apply_jacobian(eps, &f, &comb, &k);
    let mut rhs = jh.scaled(2.0);
    rhs.axpy(-0.5, &apply_jacobian(eps, &f, &h2, &k));
    for (a, b) in lhs.as_flat().iter().zip(rhs.as_flat()) {
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn continuation_to_zero_is_epsilon_zero_solve() {
    let k = shear();
    let (f, report) = newton_continuation(&k, &small_config(0.0)).unwrap();
    let f0 = solve_epsilon_zero(&k, 8, 6).unwrap();
    assert!(report.converged);
    assert_eq!(report.epsilon_path.len(), 1);
    for (a, b) in f.as_flat().iter().zip(f0.as_flat()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn continuation_converges_with_both_solvers() {
    let k = shear();
    let mut cfg = small_config(0.05);
    let (fi, ri) = newton_continuation(&k, &cfg).unwrap();
    cfg.linear_solver = LinearSolver::DenseDirect;
    let (fd, rd) = newton_continuation(&k, &cfg).unwrap();
    for r in [&ri, &rd] {
        assert!(r.converged);
        assert_eq!(r.final_epsilon(), 0.05);
        assert!(r.epsilon_path.iter().all(|s| s.final_residual <= 1e-10));
        assert!(r.mass_error <= 1e-9);
        assert_eq!(r.mode_norm_table.len(), 8);
    }
    let diff = max_mode_l1(&fi.sub(&fd));
    assert!(diff < 1e-9, "{diff}");
    let res = apply_t(0.05, &fi, &k);
    assert!(max_mode_l1(&res) <= 1e-10);

    let (fn_, rn) = newton_continuation(&k, &small_config(-0.05)).unwrap();
    assert!(rn.converged && rn.final_epsilon() == -0.05);
    assert!(max_mode_l1(&apply_t(-0.05, &fn_, &k)) <= 1e-10);
}

#[test]
fn zero_flow_gives_zero_branch() {
    let (f, report) = newton_continuation(&KappaTensor::zero(), &small_config(0.04)).unwrap();
    assert!(report.converged);
    assert!(f.as_flat().iter().all(|x| *x == 0.0));
}

#[test]
fn config_validation_names_key() {
    let mut cfg = small_config(1.5);
    match cfg.validate() {
        Err(Error::Config { key, .. }) => assert_eq!(key, "epsilon_target"),
        other => panic!("{other:?}"),
    }
    cfg.epsilon_target = 0.1;
    cfg.epsilon_step = 0.0;
    assert!(matches!(cfg.validate(), Err(Error::Config { ref key, .. }) if key == "epsilon_step"));
    cfg.epsilon_step = 0.01;
    cfg.sphere_degree = 1;
    assert!(matches!(cfg.validate(), Err(Error::Config { ref key, .. }) if key == "sphere_degree"));
}

#[test]
fn starved_newton_reports_last_branch_point() {
    let mut cfg = small_config(0.5);
    cfg.max_newton_iters = 1;
    // a single Newton step per ε is enough for moderate flows; a strong
    // shear makes the quadratic term bite
    match newton_continuation(&KappaTensor::simple_shear(20.0), &cfg) {
        Err(Error::NoConvergence { epsilon, last }) => {
            let (f, report) = *last;
            assert!(epsilon > 0.0);
            assert!(!report.converged);
            assert!(report.final_epsilon() < epsilon);
            assert_eq!(f.n_modes(), 8);
        }
        other => panic!("expected NoConvergence, got {:?}", other.map(|r| r.1.converged)),
    }
}

#[test]
fn report_serializes_documented_keys() {
    let (_, report) = newton_continuation(&shear(), &small_config(0.02)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    for key in ["converged", "epsilon_path", "mode_norms", "xr_norm", "mass_error", "min_F"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}
