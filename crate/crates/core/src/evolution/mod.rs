//! Time integration of the modal system and convergence diagnostics.

mod trajectory;

use std::f64::consts::{PI, SQRT_2};
use std::path::PathBuf;
use std::sync::Arc;

use log::debug;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use trajectory::{fit_decay, DecayFit, Trajectory, TrajectoryRow, XI_FLOOR};

use crate::error::{Error, Result};
use crate::galerkin::GalerkinOperators;
use crate::modal::{mass_error, min_density, ModalField};
use crate::sphere::{build_grid, harmonic_degree_order, lp_norm, KappaTensor, SphereField, SphereGrid};
use crate::stationary::{ModeResolvent, StationaryOperator};

/// Largest accepted time step; the ε-terms are explicit.
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Backward Euler on `n²π² + ∂/∂u·(𝒢·)`, forward Euler on the rest.
    ImexEuler,
    /// Crank–Nicolson on `n²π² + ∂/∂u·(𝒢·)`, Heun on the rest.
    ImexCn,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "imex-euler" => Ok(Self::ImexEuler),
            "imex-cn" => Ok(Self::ImexCn),
            other => Err(format!("unknown scheme `{other}` (imex-euler | imex-cn)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum InitialData {
    /// `F₀ = 1/4π`, i.e. `f₀ = 0`.
    Zero,
    ModalFile(PathBuf),
    /// Smooth random data with `F₀ ≥ 0` and unit mass.
    RandomizedAdmissible { seed: u64 },
    /// Explicit field (library use).
    Field(Option<ModalField>),
}

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Record diagnostics every this many steps.
    pub snapshot_stride: usize,
    pub initial_data: InitialData,
    pub n_modes: usize,
    pub sphere_degree: usize,
    /// Points in `s` for mass, positivity and distance diagnostics.
    pub s_samples: usize,
    /// Keep full states at each recorded time.
    pub keep_snapshots: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 3.0,
            scheme: Scheme::ImexCn,
            snapshot_stride: 10,
            initial_data: InitialData::Zero,
            n_modes: 32,
            sphere_degree: 8,
            s_samples: 65,
            keep_snapshots: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad("dt", format!("must lie in (0, {MAX_DT}], got {}", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad("t_final", format!("must be finite and >= 0, got {}", self.t_final));
        }
        if self.snapshot_stride < 1 {
            return bad("snapshot_stride", "must be >= 1".into());
        }
        if self.n_modes < 1 {
            return bad("n_modes", "must be >= 1".into());
        }
        if !(crate::sphere::MIN_DEGREE..=crate::sphere::MAX_DEGREE).contains(&self.sphere_degree) {
            return bad("sphere_degree", format!("must lie in 2..=128, got {}", self.sphere_degree));
        }
        if self.s_samples < 2 {
            return bad("s_samples", "must be >= 2".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Right-hand side of the modal evolution equation for mode `n`; equals
/// `−𝒯(ε,f)ₙ`.
pub fn rhs_mode(n: usize, f: &ModalField, epsilon: f64, kappa: &KappaTensor) -> Result<SphereField> {
    if n < 1 || n > f.n_modes() {
        return Err(Error::InvalidArgument(format!("mode {n} outside 1..={}", f.n_modes())));
    }
    let ops = Arc::new(GalerkinOperators::new(f.grid(), kappa));
    let r = StationaryOperator::new(ops, f.n_modes()).residual(epsilon, f);
    Ok(r.mode(n).scaled(-1.0))
}

/// Number of initial `imex-cn` steps replaced by two backward-Euler half
/// steps each. Crank-Nicolson maps a stiff mode by a factor close to −1,
/// so without this the high-`n` part of the initial transient decays at a
/// rate set by `dt` instead of `n²π²`.
pub const STARTUP_STEPS: usize = 2;

/// Fixed-step IMEX integrator with per-mode factorizations of the implicit
/// part.
pub struct Integrator {
    op: StationaryOperator,
    scheme: Scheme,
    dt: f64,
    epsilon: f64,
    implicit: Vec<ModeResolvent>,
    time: f64,
    startup_remaining: usize,
}

impl Integrator {
    pub fn new(ops: Arc<GalerkinOperators>, n_modes: usize, dt: f64, epsilon: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(Error::InvalidArgument(format!("time step {dt} outside (0, {MAX_DT}]")));
        }
        let theta = match scheme {
            Scheme::ImexEuler => 1.0,
            Scheme::ImexCn => 0.5,
        };
        let h = ops.n_harmonics();
        let implicit = (1..=n_modes)
            .map(|n| {
                let m = DMatrix::identity(h, h) + ops.mode_matrix(n) * (theta * dt);
                ModeResolvent::from_matrix(n, m)
            })
            .collect::<Result<Vec<_>>>()?;
        let op = StationaryOperator::new(ops, n_modes);
        let startup_remaining = if scheme == Scheme::ImexCn { STARTUP_STEPS } else { 0 };
        Ok(Self { op, scheme, dt, epsilon, implicit, time: 0.0, startup_remaining })
    }

    /// Plain Crank-Nicolson from the first step.
    pub fn without_startup(mut self) -> Self {
        self.startup_remaining = 0;
        self
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn operator(&self) -> &StationaryOperator {
        &self.op
    }

    /// `L f` (mode operator `n²π² + ∂/∂u·(𝒢·)`).
    fn apply_implicit_operator(&self, f: &ModalField) -> ModalField {
        let nh = f.n_harmonics();
        let mut out = ModalField::zeros(f.grid(), f.n_modes());
        for n in 1..=f.n_modes() {
            let dst = &mut out.as_flat_mut()[(n - 1) * nh..n * nh];
            self.op.ops().apply_mode_operator(n, f.mode_coeffs(n), dst);
        }
        out
    }

    /// Explicit part `E(f) = −𝒯(ε,f) + L f`.
    fn explicit(&self, f: &ModalField, lf: &ModalField) -> ModalField {
        let mut e = self.op.residual(self.epsilon, f).scaled(-1.0);
        e.axpy(1.0, lf);
        e
    }

    fn solve_implicit(&self, rhs: &ModalField) -> ModalField {
        let nh = rhs.n_harmonics();
        let mut data = Vec::with_capacity(rhs.as_flat().len());
        for (i, r) in self.implicit.iter().enumerate() {
            data.extend(r.solve(&rhs.as_flat()[i * nh..(i + 1) * nh]));
        }
        ModalField::from_flat(rhs.grid(), rhs.n_modes(), data).expect("sizes match")
    }

    /// IMEX Euler over `dt/2`; the `imex-cn` factorizations are exactly
    /// `I + (dt/2)L`.
    fn euler_half_step(&self, f: &ModalField) -> ModalField {
        let lf = self.apply_implicit_operator(f);
        let mut rhs = f.clone();
        rhs.axpy(0.5 * self.dt, &self.explicit(f, &lf));
        self.solve_implicit(&rhs)
    }

    /// Advances one step.
    pub fn step(&mut self, f: &ModalField) -> Result<ModalField> {
        let dt = self.dt;
        let lf = self.apply_implicit_operator(f);
        let e0 = self.explicit(f, &lf);
        let next = match self.scheme {
            Scheme::ImexCn if self.startup_remaining > 0 => {
                self.startup_remaining -= 1;
                self.euler_half_step(&self.euler_half_step(f))
            }
            Scheme::ImexEuler => {
                let mut rhs = f.clone();
                rhs.axpy(dt, &e0);
                self.solve_implicit(&rhs)
            }
            Scheme::ImexCn => {
                let mut base = f.clone();
                base.axpy(-0.5 * dt, &lf);
                let mut rhs = base.clone();
                rhs.axpy(dt, &e0);
                let pred = self.solve_implicit(&rhs);
                let lp = self.apply_implicit_operator(&pred);
                let e1 = self.explicit(&pred, &lp);
                let mut rhs = base;
                rhs.axpy(0.5 * dt, &e0);
                rhs.axpy(0.5 * dt, &e1);
                self.solve_implicit(&rhs)
            }
        };
        self.time += dt;
        if next.as_flat().iter().any(|x| !x.is_finite()) {
            return Err(Error::StepRejected { time: self.time, reason: "non-finite coefficients".into() });
        }
        Ok(next)
    }
}

/// One IMEX step from `f`.
pub fn step(f: &ModalField, dt: f64, epsilon: f64, kappa: &KappaTensor, scheme: Scheme) -> Result<ModalField> {
    let ops = Arc::new(GalerkinOperators::new(f.grid(), kappa));
    Integrator::new(ops, f.n_modes(), dt, epsilon, scheme)?.without_startup().step(f)
}

/// `(max_s |∫(f+1/4π)dμ − 1|, min (f + 1/4π))` over `s_samples` points.
pub fn check_probability(f: &ModalField, s_samples: usize) -> (f64, f64) {
    (mass_error(f, s_samples), min_density(f, s_samples))
}

/// Smooth random `f₀` with zero mass in every mode and `min F₀ ≥ 1/8π`.
pub fn randomized_admissible(grid: &Arc<SphereGrid>, n_modes: usize, seed: u64) -> ModalField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.n_harmonics();
    let mut data = vec![0.0; n_modes * h];
    for n in 1..=n_modes.min(6) {
        for a in 1..h {
            let l = harmonic_degree_order(a).0;
            if l <= 4 {
                data[(n - 1) * h + a] = rng.gen_range(-1.0..1.0) / ((n * n) as f64 * (1 + l * l) as f64);
            }
        }
    }
    let f = ModalField::from_flat(grid, n_modes, data).expect("sizes match");
    let base = 1.0 / (4.0 * PI);
    let lowest = min_density(&f, 65) - base;
    if lowest < -0.5 * base {
        f.scaled(0.5 * base / -lowest)
    } else {
        f
    }
}

/// Initial data per configuration.
pub fn initial_field(config: &EvolutionConfig, grid: &Arc<SphereGrid>) -> Result<ModalField> {
    match &config.initial_data {
        InitialData::Zero => Ok(ModalField::zeros(grid, config.n_modes)),
        InitialData::RandomizedAdmissible { seed } => Ok(randomized_admissible(grid, config.n_modes, *seed)),
        InitialData::ModalFile(path) => {
            let (f, _) = ModalField::read_container(path)?;
            if f.grid().degree() != grid.degree() {
                return Err(Error::Config {
                    key: "initial_data".into(),
                    message: format!("file has degree {}, run uses {}", f.grid().degree(), grid.degree()),
                });
            }
            let same = ModalField::from_flat(grid, f.n_modes(), f.into_flat())?;
            Ok(same.resized(config.n_modes))
        }
        InitialData::Field(Some(f)) => {
            if f.grid().degree() != grid.degree() {
                return Err(Error::GridMismatch { left: f.grid().degree(), right: grid.degree() });
            }
            let same = ModalField::from_flat(grid, f.n_modes(), f.as_flat().to_vec())?;
            Ok(same.resized(config.n_modes))
        }
        InitialData::Field(None) => Err(Error::Config { key: "initial_data".into(), message: "missing field".into() }),
    }
}

/// Diagnostics of one recorded state.
pub fn diagnostics_row(
    t: f64,
    f: &ModalField,
    reference: Option<&ModalField>,
    s_samples: usize,
) -> TrajectoryRow {
    let diff = reference.map(|r| f.sub(&r.resized(f.n_modes())));
    let (xi, chi) = crate::modal::xi_chi(diff.as_ref().unwrap_or(f));
    let (mass, min_f) = check_probability(f, s_samples);
    let samples = crate::modal::sample_points(s_samples);
    let dist = diff.as_ref().map(|d| {
        samples.iter().map(|s| lp_norm(&d.evaluate(*s), 1.0)).fold(0.0, f64::max)
    });
    let l1_sup = samples.iter().map(|s| lp_norm(&f.evaluate(*s), 1.0)).fold(0.0, f64::max);
    let (lambda_sup, lambda_ds_sup) = lambda_tensor_bounds(f, &samples);
    TrajectoryRow { t, mass_error: mass, min_f, xi, chi, dist_sup_l1: dist, l1_sup, lambda_sup, lambda_ds_sup }
}

/// `sup_s ‖λ(f)(s)‖_F` and `sup_s ‖∂λ/∂s‖_F` for the full second-moment
/// tensor `λ(f)(s) = ∫₀ˢ∫ f u⊗u dμ ds'`.
pub fn lambda_tensor_bounds(f: &ModalField, samples: &[f64]) -> (f64, f64) {
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let grid = f.grid();
    let moments: Vec<[f64; 6]> = (1..=f.n_modes())
        .map(|q| {
            let vals = f.mode(q).values();
            let mut out = [0.0; 6];
            for ((v, u), w) in vals.iter().zip(grid.nodes()).zip(grid.weights()) {
                for (k, (i, j)) in pairs.iter().enumerate() {
                    out[k] += w * v * u[*i] * u[*j];
                }
            }
            out
        })
        .collect();
    let mut sup = 0.0f64;
    let mut sup_ds = 0.0f64;
    for s in samples {
        let mut lam = [0.0; 6];
        let mut dlam = [0.0; 6];
        for (i, m) in moments.iter().enumerate() {
            let k = (i + 1) as f64 * PI;
            let hq = SQRT_2 * (k * s).sin();
            let iq = SQRT_2 * (1.0 - (k * s).cos()) / k;
            for c in 0..6 {
                lam[c] += m[c] * iq;
                dlam[c] += m[c] * hq;
            }
        }
        let frob = |v: &[f64; 6]| {
            (v[0] * v[0] + v[3] * v[3] + v[5] * v[5] + 2.0 * (v[1] * v[1] + v[2] * v[2] + v[4] * v[4])).sqrt()
        };
        sup = sup.max(frob(&lam));
        sup_ds = sup_ds.max(frob(&dlam));
    }
    (sup, sup_ds)
}

/// Runs the configured evolution. With a stationary reference, `ξ`, `χ`
/// and the distance column refer to `fᵉ − f`; otherwise to `fᵉ` itself.
pub fn evolve(
    config: &EvolutionConfig,
    epsilon: f64,
    kappa: &KappaTensor,
    stationary_ref: Option<&ModalField>,
) -> Result<Trajectory> {
    config.validate()?;
    let grid = build_grid(config.sphere_degree)?;
    let ops = Arc::new(GalerkinOperators::new(&grid, kappa));
    evolve_with(ops, config, epsilon, stationary_ref)
}

pub fn evolve_with(
    ops: Arc<GalerkinOperators>,
    config: &EvolutionConfig,
    epsilon: f64,
    stationary_ref: Option<&ModalField>,
) -> Result<Trajectory> {
    config.validate()?;
    let grid = ops.grid().clone();
    let reference = match stationary_ref {
        Some(r) if r.grid().degree() != grid.degree() => {
            return Err(Error::GridMismatch { left: r.grid().degree(), right: grid.degree() })
        }
        Some(r) => Some(ModalField::from_flat(&grid, r.n_modes(), r.as_flat().to_vec())?.resized(config.n_modes)),
        None => None,
    };
    let mut f = initial_field(config, &grid)?;
    let mut integ = Integrator::new(ops, config.n_modes, config.dt, epsilon, config.scheme)?;
    let n_steps = config.n_steps();
    let mut traj = Trajectory::new(reference.is_some());
    let record = |traj: &mut Trajectory, t: f64, f: &ModalField| {
        let row = diagnostics_row(t, f, reference.as_ref(), config.s_samples);
        debug!("t={t:.4} xi={:.3e} mass={:.2e}", row.xi, row.mass_error);
        traj.push(row, if config.keep_snapshots { Some(f.clone()) } else { None });
    };
    record(&mut traj, 0.0, &f);
    for k in 1..=n_steps {
        f = integ.step(&f)?;
        let t = k as f64 * config.dt;
        integ.set_time(t);
        if k % config.snapshot_stride == 0 || k == n_steps {
            record(&mut traj, t, &f);
        }
    }
    traj.set_final_state(f);
    Ok(traj)
}

#[cfg(test)]
mod tests;
