use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use super::quadrature::gauss_legendre;

/// Gauss–Legendre (in `cos θ`) × uniform-longitude grid carrying real
/// spherical harmonics up to degree `L`.
///
/// The grid has `L + 2` latitudes and `2L + 4` longitudes, so quadrature is
/// exact for polynomials of degree `2L + 3` on the sphere. Products of a
/// degree-`L` field with the degree-2 coefficient `κ:u⊗u` (and with the
/// drift `𝒢`) are therefore projected back onto degree `L` without aliasing.
///
/// Nodes are stored ring-major: node `j = i·nlon + k` sits at colatitude
/// `θᵢ` and longitude `φₖ = 2πk / nlon`.
pub struct SphereGrid {
    degree: usize,
    nlat: usize,
    nlon: usize,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    lat_weights: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    e_theta: Vec<[f64; 3]>,
    e_phi: Vec<[f64; 3]>,
    // Per-ring Legendre data, indexed `ring * ntri + tri(l, m)`.
    plm: Vec<f64>,
    dplm: Vec<f64>,
    qlm: Vec<f64>,
    // `trig[k * (L + 1) + m] = (cos mφₖ, sin mφₖ)`.
    trig: Vec<(f64, f64)>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("degree", &self.degree)
            .field("nlat", &self.nlat)
            .field("nlon", &self.nlon)
            .finish()
    }
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Flat index of the real harmonic `(ℓ, m)`, `−ℓ ≤ m ≤ ℓ`.
#[inline]
pub fn harmonic_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`harmonic_index`].
pub fn harmonic_degree_order(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

/// Orthonormal associated Legendre functions (no Condon–Shortley phase),
/// their `θ` derivatives and `m P̄ / sin θ`, for all `0 ≤ m ≤ ℓ ≤ lmax`.
fn legendre_row(lmax: usize, x: f64, s: f64, p: &mut [f64], dp: Option<(&mut [f64], &mut [f64])>) {
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < lmax {
            p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in m + 2..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
        }
    }
    if let Some((dp, q)) = dp {
        for l in 0..=lmax {
            for m in 0..=l {
                let lf = l as f64;
                let mf = m as f64;
                let lower = if l > m {
                    ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt() * p[tri(l - 1, m)]
                } else {
                    0.0
                };
                dp[tri(l, m)] = (lf * x * p[tri(l, m)] - lower) / s;
                q[tri(l, m)] = mf * p[tri(l, m)] / s;
            }
        }
    }
}

impl SphereGrid {
    pub(crate) fn new(degree: usize) -> Self {
        let nlat = degree + 2;
        let nlon = 2 * degree + 4;
        let (x, w) = gauss_legendre(nlat);
        // north to south
        let cos_theta: Vec<f64> = x.iter().rev().copied().collect();
        let lat_weights: Vec<f64> = w.iter().rev().copied().collect();
        let sin_theta: Vec<f64> = cos_theta.iter().map(|c| (1.0 - c * c).sqrt()).collect();

        let ntri = tri(degree, degree) + 1;
        let mut plm = vec![0.0; nlat * ntri];
        let mut dplm = vec![0.0; nlat * ntri];
        let mut qlm = vec![0.0; nlat * ntri];
        for i in 0..nlat {
            let r = i * ntri..(i + 1) * ntri;
            let (p, (dp, q)) = (&mut plm[r.clone()], (&mut dplm[r.clone()], &mut qlm[r]));
            legendre_row(degree, cos_theta[i], sin_theta[i], p, Some((dp, q)));
        }

        let mut trig = Vec::with_capacity(nlon * (degree + 1));
        let dphi = 2.0 * PI / nlon as f64;
        for k in 0..nlon {
            let phi = k as f64 * dphi;
            for m in 0..=degree {
                let a = m as f64 * phi;
                trig.push((a.cos(), a.sin()));
            }
        }

        let mut nodes = Vec::with_capacity(nlat * nlon);
        let mut weights = Vec::with_capacity(nlat * nlon);
        let mut e_theta = Vec::with_capacity(nlat * nlon);
        let mut e_phi = Vec::with_capacity(nlat * nlon);
        for i in 0..nlat {
            let (ct, st) = (cos_theta[i], sin_theta[i]);
            for k in 0..nlon {
                let (cp, sp) = trig[k * (degree + 1) + 1.min(degree)];
                // m = 1 entry gives cos φ, sin φ
                nodes.push([st * cp, st * sp, ct]);
                weights.push(lat_weights[i] * dphi);
                e_theta.push([ct * cp, ct * sp, -st]);
                e_phi.push([-sp, cp, 0.0]);
            }
        }

        Self {
            degree,
            nlat,
            nlon,
            cos_theta,
            sin_theta,
            lat_weights,
            nodes,
            weights,
            e_theta,
            e_phi,
            plm,
            dplm,
            qlm,
            trig,
        }
    }

    /// Maximum harmonic degree `L`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_harmonics(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_lat(&self) -> usize {
        self.nlat
    }

    pub fn n_lon(&self) -> usize {
        self.nlon
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }

    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }

    pub fn lat_weights(&self) -> &[f64] {
        &self.lat_weights
    }

    /// `∫ g dμ` from nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    fn ntri(&self) -> usize {
        tri(self.degree, self.degree) + 1
    }

    /// Nodal values of `Σ c_α Y_α`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        let lmax = self.degree;
        assert_eq!(coeffs.len(), self.n_harmonics());
        let ntri = self.ntri();
        let mut a = vec![0.0; lmax + 1];
        let mut b = vec![0.0; lmax + 1];
        for i in 0..self.nlat {
            let p = &self.plm[i * ntri..(i + 1) * ntri];
            ring_sums(lmax, coeffs, p, &mut a, &mut b);
            self.ring_fourier_synthesis(&a, &b, &mut out[i * self.nlon..(i + 1) * self.nlon]);
        }
    }

    fn ring_fourier_synthesis(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let lmax = self.degree;
        for (k, o) in out.iter_mut().enumerate() {
            let t = &self.trig[k * (lmax + 1)..(k + 1) * (lmax + 1)];
            let mut v = a[0];
            let mut acc = 0.0;
            for m in 1..=lmax {
                acc += a[m] * t[m].0 + b[m] * t[m].1;
            }
            v += SQRT_2 * acc;
            *o = v;
        }
    }

    /// Projection `c_α = ∫ g Y_α dμ` from nodal values (exact for
    /// integrands of degree ≤ `2L + 3`).
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let lmax = self.degree;
        assert_eq!(values.len(), self.n_nodes());
        let ntri = self.ntri();
        let mut coeffs = vec![0.0; self.n_harmonics()];
        let mut fa = vec![0.0; lmax + 1];
        let mut fb = vec![0.0; lmax + 1];
        for i in 0..self.nlat {
            self.ring_fourier_analysis(&values[i * self.nlon..(i + 1) * self.nlon], &mut fa, &mut fb);
            let w = self.lat_weights[i];
            let p = &self.plm[i * ntri..(i + 1) * ntri];
            for m in 0..=lmax {
                for l in m..=lmax {
                    let pl = p[tri(l, m)] * w;
                    if m == 0 {
                        coeffs[harmonic_index(l, 0)] += pl * fa[0];
                    } else {
                        coeffs[harmonic_index(l, m as i64)] += SQRT_2 * pl * fa[m];
                        coeffs[harmonic_index(l, -(m as i64))] += SQRT_2 * pl * fb[m];
                    }
                }
            }
        }
        coeffs
    }

    fn ring_fourier_analysis(&self, ring: &[f64], fa: &mut [f64], fb: &mut [f64]) {
        let lmax = self.degree;
        let dphi = 2.0 * PI / self.nlon as f64;
        fa.iter_mut().for_each(|x| *x = 0.0);
        fb.iter_mut().for_each(|x| *x = 0.0);
        for (k, v) in ring.iter().enumerate() {
            let t = &self.trig[k * (lmax + 1)..(k + 1) * (lmax + 1)];
            for m in 0..=lmax {
                fa[m] += v * t[m].0;
                fb[m] += v * t[m].1;
            }
        }
        fa.iter_mut().for_each(|x| *x *= dphi);
        fb.iter_mut().for_each(|x| *x *= dphi);
    }

    /// Tangential gradient of `Σ c_α Y_α` at the nodes, in Cartesian
    /// components. Uses analytic `θ`/`φ` derivatives of the basis; the
    /// Gauss nodes never touch the poles.
    pub fn synthesize_gradient(&self, coeffs: &[f64]) -> Vec<[f64; 3]> {
        let lmax = self.degree;
        assert_eq!(coeffs.len(), self.n_harmonics());
        let ntri = self.ntri();
        let mut at = vec![0.0; lmax + 1];
        let mut bt = vec![0.0; lmax + 1];
        let mut aq = vec![0.0; lmax + 1];
        let mut bq = vec![0.0; lmax + 1];
        let mut out = vec![[0.0; 3]; self.n_nodes()];
        for i in 0..self.nlat {
            let dp = &self.dplm[i * ntri..(i + 1) * ntri];
            let q = &self.qlm[i * ntri..(i + 1) * ntri];
            ring_sums(lmax, coeffs, dp, &mut at, &mut bt);
            ring_sums(lmax, coeffs, q, &mut aq, &mut bq);
            for k in 0..self.nlon {
                let t = &self.trig[k * (lmax + 1)..(k + 1) * (lmax + 1)];
                let mut g_theta = at[0];
                let mut acc_t = 0.0;
                let mut acc_p = 0.0;
                for m in 1..=lmax {
                    acc_t += at[m] * t[m].0 + bt[m] * t[m].1;
                    acc_p += -aq[m] * t[m].1 + bq[m] * t[m].0;
                }
                g_theta += SQRT_2 * acc_t;
                let g_phi = SQRT_2 * acc_p;
                let j = i * self.nlon + k;
                let (et, ep) = (&self.e_theta[j], &self.e_phi[j]);
                out[j] = [
                    g_theta * et[0] + g_phi * ep[0],
                    g_theta * et[1] + g_phi * ep[1],
                    g_theta * et[2] + g_phi * ep[2],
                ];
            }
        }
        out
    }

    /// Galerkin divergence of a nodal vector field:
    /// `c_α = −∫ X·∂Y_α/∂u dμ`. Only the tangential part of `X` is seen.
    pub fn analyze_divergence(&self, field: &[[f64; 3]]) -> Vec<f64> {
        let lmax = self.degree;
        assert_eq!(field.len(), self.n_nodes());
        let ntri = self.ntri();
        let mut coeffs = vec![0.0; self.n_harmonics()];
        let mut xt = vec![0.0; self.nlon];
        let mut xp = vec![0.0; self.nlon];
        let (mut ta, mut tb, mut pa, mut pb) =
            (vec![0.0; lmax + 1], vec![0.0; lmax + 1], vec![0.0; lmax + 1], vec![0.0; lmax + 1]);
        for i in 0..self.nlat {
            for k in 0..self.nlon {
                let j = i * self.nlon + k;
                let x = &field[j];
                let (et, ep) = (&self.e_theta[j], &self.e_phi[j]);
                xt[k] = x[0] * et[0] + x[1] * et[1] + x[2] * et[2];
                xp[k] = x[0] * ep[0] + x[1] * ep[1] + x[2] * ep[2];
            }
            self.ring_fourier_analysis(&xt, &mut ta, &mut tb);
            self.ring_fourier_analysis(&xp, &mut pa, &mut pb);
            let w = self.lat_weights[i];
            let dp = &self.dplm[i * ntri..(i + 1) * ntri];
            let q = &self.qlm[i * ntri..(i + 1) * ntri];
            for m in 0..=lmax {
                for l in m..=lmax {
                    let d = dp[tri(l, m)] * w;
                    let qq = q[tri(l, m)] * w;
                    if m == 0 {
                        coeffs[harmonic_index(l, 0)] -= d * ta[0];
                    } else {
                        coeffs[harmonic_index(l, m as i64)] -= SQRT_2 * (d * ta[m] - qq * pb[m]);
                        coeffs[harmonic_index(l, -(m as i64))] -= SQRT_2 * (d * tb[m] + qq * pa[m]);
                    }
                }
            }
        }
        coeffs
    }

    /// All real harmonics `Y_α(u)` at an arbitrary unit vector.
    pub fn harmonics_at(&self, u: &[f64; 3]) -> Vec<f64> {
        let lmax = self.degree;
        let x = u[2].clamp(-1.0, 1.0);
        let s = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let phi = u[1].atan2(u[0]);
        let mut p = vec![0.0; self.ntri()];
        legendre_row(lmax, x, s, &mut p, None);
        let mut out = vec![0.0; self.n_harmonics()];
        for l in 0..=lmax {
            out[harmonic_index(l, 0)] = p[tri(l, 0)];
            for m in 1..=l {
                let a = m as f64 * phi;
                out[harmonic_index(l, m as i64)] = SQRT_2 * p[tri(l, m)] * a.cos();
                out[harmonic_index(l, -(m as i64))] = SQRT_2 * p[tri(l, m)] * a.sin();
            }
        }
        out
    }
}

/// `a_m = Σ_ℓ c(ℓ,m) t(ℓ,m)`, `b_m = Σ_ℓ c(ℓ,−m) t(ℓ,m)` over one ring.
#[inline]
fn ring_sums(lmax: usize, coeffs: &[f64], table: &[f64], a: &mut [f64], b: &mut [f64]) {
    for m in 0..=lmax {
        let (mut sa, mut sb) = (0.0, 0.0);
        for l in m..=lmax {
            let t = table[tri(l, m)];
            sa += coeffs[harmonic_index(l, m as i64)] * t;
            if m > 0 {
                sb += coeffs[harmonic_index(l, -(m as i64))] * t;
            }
        }
        a[m] = sa;
        b[m] = sb;
    }
}
