//! Independent discretization of the stationary problem: second-order
//! finite differences in `s`, a conservative finite-volume stencil on a
//! latitude-longitude mesh of the sphere, Picard iteration on the
//! `ε`-terms.
//!
//! The unknown is `f = F − 1/4π` at interior `s` nodes and cell centres,
//! solving
//!
//! `−f_ss + ∂/∂u·(𝒢f) = ((3+ε)/4π) κ:u⊗u + ε[κ:u⊗u f − ∂/∂s(f κ:λ(f)) − (1/4π)∫κ:v⊗v f dμ]`
//!
//! with `f = 0` at `s = 0, 1`.

use std::f64::consts::{PI, SQRT_2};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresOptions};
use crate::modal::ModalField;
use crate::sphere::{g_vector, KappaTensor};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Number of `s` intervals; the interior has `s_points − 1` nodes.
    pub s_points: usize,
    pub n_lat: usize,
    pub n_lon: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { s_points: 32, n_lat: 48, n_lon: 96, picard_tol: 1e-11, picard_max_iters: 60 }
    }
}

/// Largest accepted `s_points`.
pub const ORACLE_MAX_S_POINTS: usize = 64;

/// Finite-volume mesh: cells ring by ring from the north pole, each ring
/// `n_lon` cells.
struct LatLonMesh {
    n_lat: usize,
    n_lon: usize,
    centres: Vec<[f64; 3]>,
    areas: Vec<f64>,
    /// Per cell: `(neighbour, coefficient)` with
    /// `(∂/∂u·(𝒢f))_c = Σ coeff (f_c + f_nb)`.
    faces: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

fn point(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl LatLonMesh {
    fn new(kappa: &KappaTensor, n_lat: usize, n_lon: usize) -> Self {
        let dth = PI / n_lat as f64;
        let dph = 2.0 * PI / n_lon as f64;
        let idx = |j: usize, k: usize| j * n_lon + (k % n_lon);
        let n = n_lat * n_lon;
        let mut centres = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        let mut faces = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for j in 0..n_lat {
            let th = (j as f64 + 0.5) * dth;
            let (tn, ts) = (j as f64 * dth, (j as f64 + 1.0) * dth);
            let area = (tn.cos() - ts.cos()) * dph;
            for k in 0..n_lon {
                let ph = (k as f64 + 0.5) * dph;
                centres.push(point(th, ph));
                areas.push(area);
                let mut list = Vec::with_capacity(4);
                // south face, outward +e_θ
                if j + 1 < n_lat {
                    let u = point(ts, ph);
                    let e_th = [ts.cos() * ph.cos(), ts.cos() * ph.sin(), -ts.sin()];
                    let flux = dot3(&g_vector(kappa, &u), &e_th) * ts.sin() * dph;
                    list.push((idx(j + 1, k), 0.5 * flux / area));
                }
                // north face, outward −e_θ
                if j > 0 {
                    let u = point(tn, ph);
                    let e_th = [tn.cos() * ph.cos(), tn.cos() * ph.sin(), -tn.sin()];
                    let flux = -dot3(&g_vector(kappa, &u), &e_th) * tn.sin() * dph;
                    list.push((idx(j - 1, k), 0.5 * flux / area));
                }
                for (dir, pf, nb) in [(1.0, ph + 0.5 * dph, idx(j, k + 1)), (-1.0, ph - 0.5 * dph, idx(j, k + n_lon - 1))] {
                    let u = point(th, pf);
                    let e_ph = [-pf.sin(), pf.cos(), 0.0];
                    let flux = dir * dot3(&g_vector(kappa, &u), &e_ph) * dth;
                    list.push((nb, 0.5 * flux / area));
                }
                diag.push(list.iter().map(|(_, c)| c).sum());
                faces.push(list);
            }
        }
        Self { n_lat, n_lon, centres, areas, faces, diag }
    }

    fn n_cells(&self) -> usize {
        self.n_lat * self.n_lon
    }

    fn divergence(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n_cells())
            .map(|c| self.diag[c] * f[c] + self.faces[c].iter().map(|(nb, w)| w * f[*nb]).sum::<f64>())
            .collect()
    }

    fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.areas).map(|(v, a)| v * a).sum()
    }
}

/// Grid function returned by [`oracle_dense_solve`].
#[derive(Debug, Clone)]
pub struct DenseField {
    /// Interior `s` nodes.
    pub s: Vec<f64>,
    pub centres: Vec<[f64; 3]>,
    pub areas: Vec<f64>,
    /// `values[i * n_cells + c]` at `s[i]`, cell `c`.
    pub values: Vec<f64>,
    pub picard_iterations: usize,
}

impl DenseField {
    pub fn n_cells(&self) -> usize {
        self.centres.len()
    }

    /// `∫∫|f| dμ ds` by the midpoint rule.
    pub fn l1_norm(&self) -> f64 {
        let h = 1.0 / (self.s.len() + 1) as f64;
        let nc = self.n_cells();
        self.values.iter().enumerate().map(|(i, v)| h * self.areas[i % nc] * v.abs()).sum()
    }

    /// Values of a modal field at the same nodes and cell centres.
    pub fn sample_modal(&self, f: &ModalField) -> Vec<f64> {
        let grid = f.grid();
        let nh = f.n_harmonics();
        let nc = self.n_cells();
        let mut per_mode = vec![0.0; f.n_modes() * nc];
        for (c, u) in self.centres.iter().enumerate() {
            let y = grid.harmonics_at(u);
            for n in 1..=f.n_modes() {
                let coeffs = f.mode_coeffs(n);
                per_mode[(n - 1) * nc + c] = (0..nh).map(|a| coeffs[a] * y[a]).sum();
            }
        }
        let mut out = vec![0.0; self.values.len()];
        for (i, s) in self.s.iter().enumerate() {
            for n in 1..=f.n_modes() {
                let hn = SQRT_2 * (n as f64 * PI * s).sin();
                for c in 0..nc {
                    out[i * nc + c] += hn * per_mode[(n - 1) * nc + c];
                }
            }
        }
        out
    }

    /// `∫∫|self − f| / ∫∫|f|` with `f` sampled at the oracle nodes.
    pub fn relative_l1_to(&self, f: &ModalField) -> f64 {
        let other = self.sample_modal(f);
        let h = 1.0 / (self.s.len() + 1) as f64;
        let nc = self.n_cells();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (a, b)) in self.values.iter().zip(&other).enumerate() {
            let w = h * self.areas[i % nc];
            num += w * (a - b).abs();
            den += w * b.abs();
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

/// Sine transform over interior nodes: `x̂_k = (2/M) Σᵢ xᵢ sin(kπi/M)`;
/// the inverse is `xᵢ = Σ_k x̂_k sin(kπi/M)`.
struct SineTransform {
    table: Vec<f64>,
    m: usize,
}

impl SineTransform {
    fn new(m: usize) -> Self {
        let n = m - 1;
        let mut table = vec![0.0; n * n];
        for k in 1..=n {
            for i in 1..=n {
                table[(k - 1) * n + (i - 1)] = (k as f64 * PI * i as f64 / m as f64).sin();
            }
        }
        Self { table, m }
    }

    /// Applies along `s` to `rows` of length `nc`; `scale` is `2/M` forward
    /// and 1 backward.
    fn apply(&self, x: &[f64], nc: usize, scale: f64) -> Vec<f64> {
        let n = self.m - 1;
        let mut out = vec![0.0; x.len()];
        for k in 0..n {
            let dst = &mut out[k * nc..(k + 1) * nc];
            for i in 0..n {
                let w = scale * self.table[k * n + i];
                for (d, v) in dst.iter_mut().zip(&x[i * nc..(i + 1) * nc]) {
                    *d += w * v;
                }
            }
        }
        out
    }
}

/// Solves the stationary problem on the finite-difference/finite-volume
/// mesh. `ε = 0` needs a single linear solve; otherwise Picard iteration
/// on the `ε`-terms until the max update drops below `picard_tol`.
pub fn oracle_dense_solve(kappa: &KappaTensor, epsilon: f64, opts: &OracleOptions) -> Result<DenseField> {
    if opts.s_points < 2 || opts.s_points > ORACLE_MAX_S_POINTS {
        return Err(Error::InvalidArgument(format!("s_points must lie in 2..={ORACLE_MAX_S_POINTS}")));
    }
    if opts.n_lat < 4 || opts.n_lon < 8 {
        return Err(Error::InvalidArgument("lat-lon mesh needs n_lat >= 4 and n_lon >= 8".into()));
    }
    let m = opts.s_points;
    let h = 1.0 / m as f64;
    let ns = m - 1;
    let s: Vec<f64> = (1..m).map(|i| i as f64 * h).collect();
    let mesh = LatLonMesh::new(kappa, opts.n_lat, opts.n_lon);
    let nc = mesh.n_cells();
    let q: Vec<f64> = mesh.centres.iter().map(|u| kappa.contract_uu(u)).collect();
    let dst = SineTransform::new(m);
    let eig: Vec<f64> = (1..m).map(|k| 4.0 / (h * h) * (k as f64 * PI * h / 2.0).sin().powi(2)).collect();
    let gm = GmresOptions { restart: 80, max_iters: 2000, rel_tol: 1e-13, abs_tol: 1e-300 };

    let solve_linear = |rhs: &[f64]| -> Result<Vec<f64>> {
        let hat = dst.apply(rhs, nc, 2.0 / m as f64);
        let mut sol = vec![0.0; hat.len()];
        for k in 0..ns {
            let b = &hat[k * nc..(k + 1) * nc];
            if b.iter().all(|v| *v == 0.0) {
                continue;
            }
            let mu = eig[k];
            let apply = |x: &[f64]| -> Vec<f64> {
                let mut y = mesh.divergence(x);
                y.iter_mut().zip(x).for_each(|(y, x)| *y += mu * x);
                y
            };
            let precond = |x: &[f64]| -> Vec<f64> { x.iter().zip(&mesh.diag).map(|(v, d)| v / (mu + d)).collect() };
            let (x, out) = gmres(apply, precond, b, None, &gm);
            if !out.converged {
                return Err(Error::LinearSolver(format!(
                    "oracle sphere solve for s-mode {} stalled at residual {:e}",
                    k + 1,
                    out.residual_norm
                )));
            }
            sol[k * nc..(k + 1) * nc].copy_from_slice(&x);
        }
        Ok(dst.apply(&sol, nc, 1.0))
    };

    let source = (3.0 + epsilon) / (4.0 * PI);
    let base_rhs: Vec<f64> = (0..ns * nc).map(|i| source * q[i % nc]).collect();
    let mut f = solve_linear(&base_rhs)?;
    let mut iterations = 0;
    if epsilon != 0.0 {
        let mut last_update = f64::INFINITY;
        loop {
            iterations += 1;
            let moments: Vec<f64> = (0..ns)
                .map(|i| {
                    let slice = &f[i * nc..(i + 1) * nc];
                    mesh.integrate(&slice.iter().zip(&q).map(|(a, b)| a * b).collect::<Vec<_>>())
                })
                .collect();
            // Λ at all nodes 0..=M by the trapezoid rule; moments vanish at the ends
            let mut lam = vec![0.0; m + 1];
            for i in 1..=m {
                let left = if i >= 2 { moments[i - 2] } else { 0.0 };
                let right = if i <= ns { moments[i - 1] } else { 0.0 };
                lam[i] = lam[i - 1] + 0.5 * h * (left + right);
            }
            let at = |i: isize, c: usize| -> f64 {
                if i < 1 || i as usize > ns {
                    0.0
                } else {
                    f[(i as usize - 1) * nc + c]
                }
            };
            let mut rhs = base_rhs.clone();
            for i in 1..=ns {
                for c in 0..nc {
                    let ii = i as isize;
                    let d_flux = (at(ii + 1, c) * lam[i + 1] - at(ii - 1, c) * lam[i - 1]) / (2.0 * h);
                    let fv = at(ii, c);
                    rhs[(i - 1) * nc + c] +=
                        epsilon * (q[c] * fv - d_flux - moments[i - 1] / (4.0 * PI));
                }
            }
            let next = solve_linear(&rhs)?;
            let update = next.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            debug!("picard iteration {iterations}: update {update:e}");
            f = next;
            if !update.is_finite() || (iterations > 3 && update > last_update) {
                return Err(Error::PicardDiverged { iterations, update });
            }
            if update <= opts.picard_tol {
                break;
            }
            if iterations >= opts.picard_max_iters {
                return Err(Error::PicardDiverged { iterations, update });
            }
            last_update = update;
        }
    }
    Ok(DenseField { s, centres: mesh.centres, areas: mesh.areas, values: f, picard_iterations: iterations })
}

#[derive(Debug, Clone, Copy)]
struct CharState {
    u: [f64; 3],
    decay: f64,
    value: f64,
}

/// `L_n⁻¹ψ` at one point by integrating along backward characteristics of
/// `𝒢`: `h(u) = ∫₀^∞ ψ(U(−τ)) exp(−∫₀^τ (n²π² − 3κ:U⊗U)) dτ` with classical
/// RK4 of step `dt`, stopped once the weight drops below `1e−18`.
pub fn resolvent_by_characteristics(
    n: usize,
    kappa: &KappaTensor,
    psi: &dyn Fn(&[f64; 3]) -> f64,
    u: &[f64; 3],
    dt: f64,
) -> f64 {
    let rate = (n * n) as f64 * PI * PI;
    let deriv = |st: &CharState| -> CharState {
        let g = g_vector(kappa, &st.u);
        CharState {
            u: [-g[0], -g[1], -g[2]],
            decay: rate - 3.0 * kappa.contract_uu(&st.u),
            value: psi(&st.u) * (-st.decay).exp(),
        }
    };
    let add = |a: &CharState, b: &CharState, w: f64| CharState {
        u: [a.u[0] + w * b.u[0], a.u[1] + w * b.u[1], a.u[2] + w * b.u[2]],
        decay: a.decay + w * b.decay,
        value: a.value + w * b.value,
    };
    let mut st = CharState { u: *u, decay: 0.0, value: 0.0 };
    while st.decay < 18.0 * std::f64::consts::LN_10 {
        let k1 = deriv(&st);
        let k2 = deriv(&add(&st, &k1, 0.5 * dt));
        let k3 = deriv(&add(&st, &k2, 0.5 * dt));
        let k4 = deriv(&add(&st, &k3, dt));
        let mut next = st;
        for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
            next = add(&next, k, dt * w / 6.0);
        }
        let norm = dot3(&next.u, &next.u).sqrt();
        next.u.iter_mut().for_each(|x| *x /= norm);
        st = next;
    }
    st.value
}
