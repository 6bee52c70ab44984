use std::f64::consts::SQRT_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{random_modal_field, random_sphere_field, BoundReport, VerifyOptions};
use crate::error::{Error, Result};
use crate::galerkin::GalerkinOperators;
use crate::modal::{b_coefficients, brt_coefficient, cos_projection, xr_norm, ModalField};
use crate::sphere::{build_grid, drift_derivative_values, lp_norm, lp_norm_values, KappaTensor, SphereField};
use crate::stationary::ModeResolvent;

/// Largest mode index accepted by [`verify_resolvent_bound`].
pub const RESOLVENT_MAX_MODE: usize = 64;

/// Relative residual `‖Bx − θx‖/θ` of the top Ritz pair at which the
/// iteration stops.
const POWER_TOL: f64 = 1e-12;

/// Largest singular value of `M⁻¹` and its right singular vector.
///
/// Power iteration on `B = M⁻ᵀM⁻¹` with Lanczos extraction: the iterates
/// `x, Bx, B²x, …` are orthonormalized (fully, twice) and the top Ritz pair
/// of the projected tridiagonal matrix is taken. At large `n` the spectrum
/// of `B` clusters around `1/(n²π²)` and the plain iterate stalls, while
/// the Ritz value over the same Krylov space converges; at `dim` steps the
/// space is everything and the value is exact.
fn inverse_norm_power(forward: &ModeResolvent, transposed: &ModeResolvent, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let dim = forward.matrix().nrows();
    let apply_b = |x: &DVector<f64>| DVector::from_vec(transposed.solve(&forward.solve(x.as_slice())));
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(dim);
    let mut alpha: Vec<f64> = Vec::with_capacity(dim);
    let mut beta: Vec<f64> = Vec::with_capacity(dim);
    let q0 = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    basis.push(q0.normalize());
    let mut best = (0.0, basis[0].clone());
    for j in 0..dim {
        let mut w = apply_b(&basis[j]);
        alpha.push(basis[j].dot(&w));
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        let k = j + 1;
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        let y = eig.eigenvectors.column(imax);
        let mut x = DVector::zeros(dim);
        for (q, yi) in basis.iter().zip(y.iter()) {
            x.axpy(*yi, q, 1.0);
        }
        best = (theta, x);
        let residual = b * y[k - 1].abs();
        if residual <= POWER_TOL * theta || b <= f64::EPSILON * theta || k == dim {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    let (theta, x) = best;
    let norm = x.norm();
    (theta.sqrt(), x.iter().map(|v| v / norm).collect())
}

/// Discrete `L^r` operator norm of `L_n⁻¹` for `n = 1..n_max`, normalized
/// by `n²`, together with the drift companion
/// `sup ‖𝒢·∂(L_n⁻¹ψ)/∂u‖_{L^r}/‖ψ‖_{L^r}` (no normalization).
///
/// Sampling uses `opts.trials` random smooth right-hand sides plus, for
/// `r = 2`, the top singular vector from power iteration (whose value is
/// exact for `L²`).
pub fn verify_resolvent_bound(
    kappa: &KappaTensor,
    n_max: usize,
    r: f64,
    opts: &VerifyOptions,
) -> Result<(BoundReport, BoundReport)> {
    if n_max < 1 || n_max > RESOLVENT_MAX_MODE {
        return Err(Error::InvalidArgument(format!("n_max must lie in 1..={RESOLVENT_MAX_MODE}, got {n_max}")));
    }
    let grid = build_grid(opts.sphere_degree)?;
    let ops = GalerkinOperators::new(&grid, kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples: Vec<SphereField> = (0..opts.trials).map(|_| random_sphere_field(&grid, &mut rng)).collect();

    let mut grid_rows = Vec::new();
    let mut measured = Vec::new();
    let mut drift = Vec::new();
    for n in 1..=n_max {
        let m: DMatrix<f64> = ops.mode_matrix(n);
        let fwd = ModeResolvent::from_matrix(n, m.clone())?;
        let mut candidates = samples.clone();
        let mut best = 0.0f64;
        if r == 2.0 {
            let tr = ModeResolvent::from_matrix(n, m.transpose())?;
            let (sigma, v) = inverse_norm_power(&fwd, &tr, &mut rng);
            best = sigma;
            candidates.push(SphereField::from_coeffs(&grid, v)?);
        }
        let mut best_drift = 0.0f64;
        for psi in &candidates {
            let norm = lp_norm(psi, r);
            if norm == 0.0 {
                continue;
            }
            let h = SphereField::from_coeffs(&grid, fwd.solve(psi.coeffs()))?;
            best = best.max(lp_norm(&h, r) / norm);
            if !kappa.is_zero() {
                let d = drift_derivative_values(kappa, &h);
                best_drift = best_drift.max(lp_norm_values(&grid, &d, r) / norm);
            }
        }
        grid_rows.push(vec![n as f64]);
        measured.push(best);
        drift.push(best_drift);
    }
    let growth: Vec<f64> = (1..=n_max).map(|n| (n * n) as f64).collect();
    let ones = vec![1.0; n_max];
    let main = BoundReport::new("resolvent", &["n"], grid_rows.clone(), measured, &growth, |row| row[0])
        .with_seed(opts.seed)
        .with_note(format!("r = {r}, sphere degree {}", opts.sphere_degree));
    let companion = BoundReport::new("resolvent_drift", &["n"], grid_rows, drift, &ones, |row| row[0])
        .with_seed(opts.seed)
        .with_note(format!("r = {r}, sphere degree {}", opts.sphere_degree));
    Ok((main, companion))
}

/// `‖bₙ‖_{L¹}/(‖φ‖_{X₁}‖ψ‖_{X₁})` for `n = 1..n_out`; zero when either norm
/// vanishes.
pub fn b_ratios(kappa: &KappaTensor, phi: &ModalField, psi: &ModalField, n_out: usize) -> Vec<f64> {
    let denom = xr_norm(phi, kappa, 1.0).value * xr_norm(psi, kappa, 1.0).value;
    if denom == 0.0 {
        return vec![0.0; n_out];
    }
    let b = b_coefficients(kappa, phi, psi, n_out);
    b.mode_norms(1.0).into_iter().map(|v| v / denom).collect()
}

fn b_measure(kappa: &KappaTensor, n_modes: usize, trials: usize, opts: &VerifyOptions) -> Result<Vec<f64>> {
    let grid = build_grid(opts.sphere_degree)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sup = vec![0.0f64; n_modes];
    for _ in 0..trials {
        let phi = random_modal_field(&grid, n_modes, 1.0, &mut rng);
        let psi = random_modal_field(&grid, n_modes, 1.0, &mut rng);
        for (s, v) in sup.iter_mut().zip(b_ratios(kappa, &phi, &psi, n_modes)) {
            *s = s.max(v);
        }
    }
    Ok(sup)
}

fn b_report(name: &str, power: i32, kappa: &KappaTensor, n_modes: usize, trials: usize, opts: &VerifyOptions) -> Result<BoundReport> {
    let measured = b_measure(kappa, n_modes, trials, opts)?;
    let rows = (1..=n_modes).map(|n| vec![n as f64]).collect();
    let growth: Vec<f64> = (1..=n_modes).map(|n| (n as f64).powi(power)).collect();
    Ok(BoundReport::new(name, &["n"], rows, measured, &growth, |row| row[0])
        .with_seed(opts.seed)
        .with_note(format!("{trials} trials, {n_modes} modes, growth n^{power}")))
}

/// `sup_trials n²‖bₙ‖_{L¹}/(‖φ‖_{X₁}‖ψ‖_{X₁})` for random `φ, ψ` with mode
/// norms `p⁻³`.
pub fn verify_b_bound(kappa: &KappaTensor, n_modes: usize, trials: usize, opts: &VerifyOptions) -> Result<BoundReport> {
    b_report("b_operator", 2, kappa, n_modes, trials, opts)
}

/// Same measurement as [`verify_b_bound`] normalized by `n` instead of `n²`.
pub fn verify_b_bound_first_order(
    kappa: &KappaTensor,
    n_modes: usize,
    trials: usize,
    opts: &VerifyOptions,
) -> Result<BoundReport> {
    b_report("b_operator_first_order", 1, kappa, n_modes, trials, opts)
}

/// `N²‖∫₀¹ f cos(Nπs) ds‖_{L¹}/‖f‖_{X₁}` for `N = 1..n_max`, sup over random
/// `f` with `2·n_max` modes of norm `p⁻³`. No flow enters, so `X₁` is the
/// regularity part alone.
pub fn verify_cos_bound(n_max: usize, trials: usize, opts: &VerifyOptions) -> Result<BoundReport> {
    let grid = build_grid(opts.sphere_degree)?;
    let zero = KappaTensor::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sup = vec![0.0f64; n_max];
    for _ in 0..trials {
        let f = random_modal_field(&grid, 2 * n_max, 1.0, &mut rng);
        let x = xr_norm(&f, &zero, 1.0).value;
        for (i, s) in sup.iter_mut().enumerate() {
            *s = s.max(lp_norm(&cos_projection(&f, i + 1)?, 1.0) / x);
        }
    }
    let rows = (1..=n_max).map(|n| vec![n as f64]).collect();
    let growth: Vec<f64> = (1..=n_max).map(|n| (n * n) as f64).collect();
    Ok(BoundReport::new("cos_projection", &["N"], rows, sup, &growth, |row| row[0])
        .with_seed(opts.seed)
        .with_note(format!("{trials} trials, {} modes", 2 * n_max)))
}

/// `(2√2/π) Σ_{p ≤ P, p ≠ N} 1/(p²|p² − N²|)`, over `p + N` odd only when
/// `parity` is set (the terms the exact convolution keeps).
pub fn cos_partial_fraction_sum(n: usize, n_modes: usize, parity: bool) -> f64 {
    let nf = n as f64;
    2.0 * SQRT_2 / std::f64::consts::PI
        * (1..=n_modes)
            .filter(|p| *p != n && (!parity || (p + n) % 2 == 1))
            .map(|p| {
                let pf = p as f64;
                1.0 / (pf * pf * (pf * pf - nf * nf).abs())
            })
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CosWorstCase {
    pub n: usize,
    /// `N²‖∫ f cos(Nπs)‖_{L¹}/‖f‖_{X₁}` for `f_p = p⁻³`.
    pub normalized: f64,
    /// `N²` times the parity-restricted partial-fraction sum.
    pub estimate: f64,
    /// `N²` times the sum over all `p ≠ N`.
    pub estimate_all_parities: f64,
}

/// The worst case `f_p = p⁻³·1` run through [`cos_projection`] next to the
/// partial-fraction estimates.
pub fn cos_partial_fraction_check(n_max: usize, n_modes: usize, degree: usize) -> Result<Vec<CosWorstCase>> {
    let grid = build_grid(degree)?;
    let one = SphereField::constant(&grid, 1.0);
    let modes: Vec<SphereField> = (1..=n_modes).map(|p| one.scaled((p as f64).powi(-3))).collect();
    let f = ModalField::from_modes(&modes)?;
    let x = xr_norm(&f, &KappaTensor::zero(), 1.0).value;
    (1..=n_max)
        .map(|n| {
            let n2 = (n * n) as f64;
            Ok(CosWorstCase {
                n,
                normalized: n2 * lp_norm(&cos_projection(&f, n)?, 1.0) / x,
                estimate: n2 * cos_partial_fraction_sum(n, n_modes, true),
                estimate_all_parities: n2 * cos_partial_fraction_sum(n, n_modes, false),
            })
        })
        .collect()
}

/// `(n/q)‖brt(f,q,n)‖_{L¹}/‖f‖_{X₁}` over `q = 1..q_max`, `n = 1..n_max`,
/// sup over random `f` with `q_max + n_max` modes. The trend is fitted
/// against the shell index `max(q, n)`.
pub fn verify_brt_bound(q_max: usize, n_max: usize, trials: usize, opts: &VerifyOptions) -> Result<BoundReport> {
    let grid: Arc<_> = build_grid(opts.sphere_degree)?;
    let zero = KappaTensor::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut sup = vec![0.0f64; q_max * n_max];
    for _ in 0..trials {
        let f = random_modal_field(&grid, q_max + n_max, 1.0, &mut rng);
        let x = xr_norm(&f, &zero, 1.0).value;
        for q in 1..=q_max {
            for n in 1..=n_max {
                let v = lp_norm(&brt_coefficient(&f, q, n)?, 1.0) / x;
                let s = &mut sup[(q - 1) * n_max + (n - 1)];
                *s = s.max(v);
            }
        }
    }
    let mut rows = Vec::with_capacity(q_max * n_max);
    let mut growth = Vec::with_capacity(q_max * n_max);
    for q in 1..=q_max {
        for n in 1..=n_max {
            rows.push(vec![q as f64, n as f64]);
            growth.push(n as f64 / q as f64);
        }
    }
    Ok(BoundReport::new("brt", &["q", "n"], rows, sup, &growth, |row| row[0].max(row[1]))
        .with_seed(opts.seed)
        .with_note(format!("{trials} trials, {} modes", q_max + n_max)))
}
