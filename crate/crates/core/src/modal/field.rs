use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sphere::{lp_norm, KappaTensor, SphereField, SphereGrid};

/// `f(s,u) = Σ_{n=1..N} fₙ(u) Hₙ(s)` with `Hₙ(s) = √2 sin(nπs)`.
///
/// Coefficients are stored mode-major: mode `n` (1-based) occupies
/// `data[(n−1)·H .. n·H]` with `H = (L+1)²`.
#[derive(Debug, Clone)]
pub struct ModalField {
    grid: Arc<SphereGrid>,
    n_modes: usize,
    data: Vec<f64>,
}

impl ModalField {
    pub fn zeros(grid: &Arc<SphereGrid>, n_modes: usize) -> Self {
        Self { grid: grid.clone(), n_modes, data: vec![0.0; n_modes * grid.n_harmonics()] }
    }

    pub fn from_flat(grid: &Arc<SphereGrid>, n_modes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_modes * grid.n_harmonics() {
            return Err(Error::InvalidArgument(format!(
                "flat modal vector has length {}, expected {}",
                data.len(),
                n_modes * grid.n_harmonics()
            )));
        }
        Ok(Self { grid: grid.clone(), n_modes, data })
    }

    pub fn from_modes(modes: &[SphereField]) -> Result<Self> {
        let first = modes
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one mode".into()))?;
        let grid = first.grid().clone();
        let mut data = Vec::with_capacity(modes.len() * grid.n_harmonics());
        for m in modes {
            first.check_same_grid(m)?;
            data.extend_from_slice(m.coeffs());
        }
        Ok(Self { grid, n_modes: modes.len(), data })
    }

    /// Single mode `n` equal to `phi`.
    pub fn single_mode(phi: &SphereField, n: usize, n_modes: usize) -> Self {
        let mut out = Self::zeros(phi.grid(), n_modes);
        out.mode_coeffs_mut(n).copy_from_slice(phi.coeffs());
        out
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_harmonics(&self) -> usize {
        self.grid.n_harmonics()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    /// Coefficients of mode `n` (1-based).
    pub fn mode_coeffs(&self, n: usize) -> &[f64] {
        let h = self.n_harmonics();
        &self.data[(n - 1) * h..n * h]
    }

    pub fn mode_coeffs_mut(&mut self, n: usize) -> &mut [f64] {
        let h = self.n_harmonics();
        &mut self.data[(n - 1) * h..n * h]
    }

    pub fn mode(&self, n: usize) -> SphereField {
        SphereField::from_coeffs(&self.grid, self.mode_coeffs(n).to_vec()).expect("mode length")
    }

    pub fn set_mode(&mut self, n: usize, f: &SphereField) {
        self.mode_coeffs_mut(n).copy_from_slice(f.coeffs());
    }

    /// Truncates or zero-pads to `n_modes`.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut out = Self::zeros(&self.grid, n_modes);
        let k = n_modes.min(self.n_modes) * self.n_harmonics();
        out.data[..k].copy_from_slice(&self.data[..k]);
        out
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { grid: self.grid.clone(), n_modes: self.n_modes, data: self.data.iter().map(|x| alpha * x).collect() }
    }

    /// `self += alpha · other` over the common modes.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// `∫₀¹ ‖f(s)‖²_{L²(S₂)} ds = Σ ‖fₙ‖²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// `f(s,·)` as a sphere field.
    pub fn evaluate(&self, s: f64) -> SphereField {
        let h = self.n_harmonics();
        let mut c = vec![0.0; h];
        for n in 1..=self.n_modes {
            let w = SQRT_2 * (n as f64 * PI * s).sin();
            for (ci, fi) in c.iter_mut().zip(self.mode_coeffs(n)) {
                *ci += w * fi;
            }
        }
        SphereField::from_coeffs(&self.grid, c).expect("mode length")
    }

    /// `∂f/∂s(s,·)`.
    pub fn evaluate_ds(&self, s: f64) -> SphereField {
        let h = self.n_harmonics();
        let mut c = vec![0.0; h];
        for n in 1..=self.n_modes {
            let w = SQRT_2 * n as f64 * PI * (n as f64 * PI * s).cos();
            for (ci, fi) in c.iter_mut().zip(self.mode_coeffs(n)) {
                *ci += w * fi;
            }
        }
        SphereField::from_coeffs(&self.grid, c).expect("mode length")
    }

    /// `‖fₙ‖_{L^r(S₂)}` for `n = 1..N`.
    pub fn mode_norms(&self, r: f64) -> Vec<f64> {
        (1..=self.n_modes).map(|n| lp_norm(&self.mode(n), r)).collect()
    }

    /// Writes the text container.
    ///
    /// Layout, one record per line:
    ///
    /// ```text
    /// doi-edwards-modal 1
    /// modes <N>
    /// degree <L>
    /// grid gauss-legendre <nlat> <nlon>
    /// kappa <9 row-major entries>
    /// <(L+1)² coefficients of mode 1>
    /// ...
    /// <(L+1)² coefficients of mode N>
    /// ```
    ///
    /// Harmonic order within a mode line: `ℓ` ascending, `m = −ℓ..=ℓ`.
    /// Numbers use shortest round-trip formatting.
    pub fn write_container(&self, path: &Path, kappa: &KappaTensor) -> Result<()> {
        std::fs::write(path, self.to_container_string(kappa))?;
        Ok(())
    }

    pub fn to_container_string(&self, kappa: &KappaTensor) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CONTAINER_MAGIC} {CONTAINER_VERSION}");
        let _ = writeln!(out, "modes {}", self.n_modes);
        let _ = writeln!(out, "degree {}", self.grid.degree());
        let _ = writeln!(out, "grid gauss-legendre {} {}", self.grid.n_lat(), self.grid.n_lon());
        let k: Vec<String> = kappa.row_major().iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(out, "kappa {}", k.join(" "));
        for n in 1..=self.n_modes {
            let line: Vec<String> = self.mode_coeffs(n).iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Reads a container written by [`ModalField::write_container`] and
    /// builds a matching grid.
    pub fn read_container(path: &Path) -> Result<(Self, KappaTensor)> {
        let text = std::fs::read_to_string(path)?;
        Self::from_container_str(&text).map_err(|message| Error::Format { path: path.to_path_buf(), message })
    }

    pub fn from_container_str(text: &str) -> std::result::Result<(Self, KappaTensor), String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| format!("missing {what} line"));

        let head: Vec<&str> = next("header")?.split_whitespace().collect();
        if head.first() != Some(&CONTAINER_MAGIC) {
            return Err("not a modal container".into());
        }
        if head.get(1) != Some(&CONTAINER_VERSION) {
            return Err(format!("unsupported version {:?}", head.get(1)));
        }
        let n_modes = keyed_usize(next("modes")?, "modes")?;
        let degree = keyed_usize(next("degree")?, "degree")?;
        let grid_line: Vec<&str> = next("grid")?.split_whitespace().collect();
        if grid_line.len() != 4 || grid_line[0] != "grid" || grid_line[1] != "gauss-legendre" {
            return Err("bad grid line".into());
        }
        let grid = crate::sphere::build_grid(degree).map_err(|e| e.to_string())?;
        let (nlat, nlon): (usize, usize) = (
            grid_line[2].parse().map_err(|_| "bad nlat")?,
            grid_line[3].parse().map_err(|_| "bad nlon")?,
        );
        if nlat != grid.n_lat() || nlon != grid.n_lon() {
            return Err(format!("grid {nlat}x{nlon} does not match degree {degree}"));
        }
        let kline = next("kappa")?;
        let kv: Vec<&str> = kline.split_whitespace().collect();
        if kv.len() != 10 || kv[0] != "kappa" {
            return Err("bad kappa line".into());
        }
        let mut k = [0.0; 9];
        for (dst, src) in k.iter_mut().zip(&kv[1..]) {
            *dst = src.parse().map_err(|_| format!("bad kappa entry {src}"))?;
        }
        let h = grid.n_harmonics();
        let mut data = Vec::with_capacity(n_modes * h);
        for n in 1..=n_modes {
            let line = next("coefficient")?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(tok.parse::<f64>().map_err(|_| format!("bad coefficient {tok} in mode {n}"))?);
            }
            if data.len() - before != h {
                return Err(format!("mode {n} has {} coefficients, expected {h}", data.len() - before));
            }
        }
        if next("trailing").is_ok() {
            return Err("trailing data after last mode".into());
        }
        let kappa = KappaTensor::with_trace_unchecked([[k[0], k[1], k[2]], [k[3], k[4], k[5]], [k[6], k[7], k[8]]]);
        Ok((Self { grid, n_modes, data }, kappa))
    }
}

const CONTAINER_MAGIC: &str = "doi-edwards-modal";
const CONTAINER_VERSION: &str = "1";

fn keyed_usize(line: &str, key: &str) -> std::result::Result<usize, String> {
    let mut it = line.split_whitespace();
    if it.next() != Some(key) {
        return Err(format!("expected `{key}` line"));
    }
    it.next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("bad value on `{key}` line"))
}
