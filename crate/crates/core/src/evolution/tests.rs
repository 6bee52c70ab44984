use super::*;
use crate::modal::one_n;
use crate::sphere::kappa_uu_field;
use crate::stationary::{max_mode_l1, newton_continuation, solve_epsilon_zero, StationarySolverConfig};

fn shear() -> KappaTensor {
    KappaTensor::simple_shear(1.0)
}

fn small(t_final: f64, dt: f64, scheme: Scheme) -> EvolutionConfig {
    EvolutionConfig { dt, t_final, scheme, n_modes: 8, sphere_degree: 6, snapshot_stride: 5, ..Default::default() }
}

#[test]
fn rhs_mode_examples() {
    let g = build_grid(4).unwrap();
    let z = ModalField::zeros(&g, 4);
    for n in 1..=4 {
        assert!(rhs_mode(n, &z, 0.0, &KappaTensor::zero()).unwrap().coeffs().iter().all(|x| *x == 0.0));
        let eps = 0.1;
        let want = kappa_uu_field(&shear(), &g).scaled((3.0 + eps) / (4.0 * PI) * one_n(n).unwrap());
        let got = rhs_mode(n, &z, eps, &shear()).unwrap();
        for (a, b) in got.coeffs().iter().zip(want.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
    assert!(rhs_mode(0, &z, 0.0, &shear()).is_err());
    assert!(rhs_mode(5, &z, 0.0, &shear()).is_err());
}

#[test]
fn drift_is_minus_stationary_residual() {
    let g = build_grid(5).unwrap();
    let f = randomized_admissible(&g, 6, 17);
    let eps = 0.07;
    let t = crate::stationary::apply_t(eps, &f, &shear());
    let mut total = 0.0;
    for n in 1..=6 {
        let r = rhs_mode(n, &f, eps, &shear()).unwrap();
        total += r.add(&t.mode(n)).coeffs().iter().map(|x| x.abs()).sum::<f64>();
    }
    assert!(total < 1e-12, "{total}");
}

#[test]
fn euler_step_is_scalar_implicit_euler_without_flow() {
    let g = build_grid(4).unwrap();
    let phi = SphereField::from_fn(&g, |u| u[0] + 0.5 * u[1] * u[2]);
    for n in [1, 3] {
        let f = ModalField::single_mode(&phi, n, 4);
        let dt = 0.01;
        let next = step(&f, dt, 0.0, &KappaTensor::zero(), Scheme::ImexEuler).unwrap();
        let factor = 1.0 / (1.0 + (n * n) as f64 * PI * PI * dt);
        for (a, b) in next.mode_coeffs(n).iter().zip(phi.coeffs()) {
            assert!((a - factor * b).abs() < 1e-15);
        }
    }
    assert!(step(&ModalField::zeros(&g, 2), 0.2, 0.0, &shear(), Scheme::ImexEuler).is_err());
}

fn run_to(f0: &ModalField, t: f64, dt: f64, scheme: Scheme) -> ModalField {
    let ops = Arc::new(GalerkinOperators::new(f0.grid(), &shear()));
    let mut integ = Integrator::new(ops, f0.n_modes(), dt, 0.3, scheme).unwrap();
    let mut f = f0.clone();
    for _ in 0..(t / dt).round() as usize {
        f = integ.step(&f).unwrap();
    }
    f
}

#[test]
fn schemes_have_their_design_order() {
    let g = build_grid(5).unwrap();
    let f0 = randomized_admissible(&g, 6, 5);
    for (scheme, order) in [(Scheme::ImexEuler, 1.0), (Scheme::ImexCn, 2.0)] {
        let dts = [0.02, 0.01, 0.005];
        let sols: Vec<ModalField> = dts.iter().map(|dt| run_to(&f0, 0.2, *dt, scheme)).collect();
        let e1 = sols[0].sub(&sols[1]).l2_norm_sq().sqrt();
        let e2 = sols[1].sub(&sols[2]).l2_norm_sq().sqrt();
        let p = (e1 / e2).log2();
        assert!((p - order).abs() < 0.15, "{scheme:?}: observed order {p}");
    }
}

#[test]
fn steps_conserve_mass() {
    let g = build_grid(5).unwrap();
    let mut f = randomized_admissible(&g, 6, 3);
    let ops = Arc::new(GalerkinOperators::new(&g, &shear()));
    let mut integ = Integrator::new(ops, 6, 0.05, 0.1, Scheme::ImexCn).unwrap();
    for _ in 0..20 {
        f = integ.step(&f).unwrap();
        assert!(check_probability(&f, 65).0 <= 1e-10);
    }
}

#[test]
fn stationary_solution_is_a_fixed_point() {
    let cfg = StationarySolverConfig { n_modes: 8, sphere_degree: 6, epsilon_target: 0.05, ..Default::default() };
    let (fs, _) = newton_continuation(&shear(), &cfg).unwrap();
    for scheme in [Scheme::ImexEuler, Scheme::ImexCn] {
        let dt = 0.01;
        let next = step(&fs, dt, 0.05, &shear(), scheme).unwrap();
        assert!(max_mode_l1(&next.sub(&fs)) <= dt * 1e-10 * 10.0);
    }
}

#[test]
fn single_mode_decays_at_diffusion_rate() {
    let g = build_grid(4).unwrap();
    let phi = SphereField::from_fn(&g, |u| u[2]);
    let f0 = ModalField::single_mode(&phi, 1, 4);
    let mut cfg = small(1.0, 0.002, Scheme::ImexCn);
    cfg.sphere_degree = 4;
    cfg.n_modes = 4;
    cfg.initial_data = InitialData::Field(Some(f0.clone()));
    let traj = evolve(&cfg, 0.0, &KappaTensor::zero(), None).unwrap();
    let a = lp_norm(&phi, 1.0);
    let last = traj.rows().last().unwrap();
    let exact = a * a * (-2.0 * PI * PI * last.t).exp();
    assert!((last.xi / exact - 1.0).abs() < 1e-3);
    let fit = fit_decay(&traj, 0.1).unwrap();
    assert!((fit.rate / (-2.0 * PI * PI) - 1.0).abs() < 0.02, "{fit:?}");
    assert!(traj.rows().iter().all(|r| r.mass_error <= 1e-12));

    // modes 1..4 mixed: slowest mode dominates late
    let mixed: Vec<SphereField> = (1..=4).map(|n| phi.scaled(1.0 / n as f64)).collect();
    cfg.initial_data = InitialData::Field(Some(ModalField::from_modes(&mixed).unwrap()));
    let traj = evolve(&cfg, 0.0, &KappaTensor::zero(), None).unwrap();
    let fit = fit_decay(&traj, 0.3).unwrap();
    assert!((fit.rate / (-2.0 * PI * PI) - 1.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn fit_needs_enough_samples() {
    let mut cfg = small(0.05, 0.01, Scheme::ImexEuler);
    cfg.snapshot_stride = 1;
    let traj = evolve(&cfg, 0.0, &shear(), None).unwrap();
    assert!(matches!(fit_decay(&traj, 0.0), Err(Error::InsufficientData(_))));
}

#[test]
fn uniform_start_relaxes_to_stationary_solution() {
    let fs = solve_epsilon_zero(&shear(), 8, 6).unwrap();
    let cfg = small(3.0, 0.01, Scheme::ImexCn);
    let traj = evolve(&cfg, 0.0, &shear(), Some(&fs)).unwrap();
    let last = traj.rows().last().unwrap();
    assert!(last.dist_sup_l1.unwrap() < 1e-6, "{:?}", last.dist_sup_l1);
    assert!(traj.rows().iter().all(|r| r.l1_sup <= 2.0));
    assert!(traj.rows().iter().all(|r| r.min_f >= -1e-7));
    let csv = traj.to_csv_string().unwrap();
    assert!(csv.starts_with("t,mass_error,min_F,xi,chi,dist_sup_L1\n"));
}

#[test]
fn probability_checks() {
    let g = build_grid(4).unwrap();
    let (m, lo) = check_probability(&ModalField::zeros(&g, 3), 65);
    assert_eq!(m, 0.0);
    assert!((lo - 1.0 / (4.0 * PI)).abs() < 1e-15);
    let c = 0.01;
    let f = ModalField::single_mode(&SphereField::constant(&g, c), 1, 3);
    let (m, _) = check_probability(&f, 65);
    assert!((m - 2f64.sqrt() * 4.0 * PI * c).abs() < 1e-14);
}

#[test]
fn config_rejects_large_steps() {
    let cfg = EvolutionConfig { dt: 0.5, ..Default::default() };
    assert!(matches!(cfg.validate(), Err(Error::Config { ref key, .. }) if key == "dt"));
}

#[test]
fn startup_damps_stiff_modes() {
    let g = build_grid(4).unwrap();
    let phi = SphereField::from_fn(&g, |u| u[0] * u[1]);
    let n = 30;
    let f0 = ModalField::single_mode(&phi, n, n);
    let dt = 0.01;
    let ops = Arc::new(GalerkinOperators::new(&g, &KappaTensor::zero()));
    let amplitude = |mut integ: Integrator| {
        let mut f = f0.clone();
        for _ in 0..10 {
            f = integ.step(&f).unwrap();
        }
        lp_norm(&f.mode(n), 2.0) / lp_norm(&phi, 2.0)
    };
    let cn = Integrator::new(ops.clone(), n, dt, 0.0, Scheme::ImexCn).unwrap();
    let plain = amplitude(cn.without_startup());
    let lam = (n * n) as f64 * PI * PI * dt;
    assert!((plain - ((lam / 2.0 - 1.0) / (lam / 2.0 + 1.0)).powi(10)).abs() < 1e-12, "{plain}");
    let smoothed = amplitude(Integrator::new(ops, n, dt, 0.0, Scheme::ImexCn).unwrap());
    let want = (1.0 / (1.0 + lam / 2.0)).powi(4) * ((lam / 2.0 - 1.0) / (lam / 2.0 + 1.0)).powi(8);
    assert!((smoothed - want).abs() < 1e-15, "{smoothed}");
    assert!(plain > 0.5 && smoothed < 1e-6);
}
