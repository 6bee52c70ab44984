use serde::{Deserialize, Serialize};

/// Corrections larger than this when removing the trace are logged.
const TRACE_WARN: f64 = 1e-12;

/// Constant velocity-gradient tensor `κ` (nondimensional, `D = 1`).
///
/// Constructed through [`KappaTensor::new`] the tensor is always traceless:
/// every downstream identity (`∂/∂u·𝒢 = −3κ:u⊗u`, the vanishing uniform
/// contribution to `κ:λ`) relies on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaTensor {
    entries: [[f64; 3]; 3],
}

impl KappaTensor {
    /// Projects `m` onto its traceless part `m − (tr m / 3) I`.
    pub fn new(m: [[f64; 3]; 3]) -> Self {
        let tr = m[0][0] + m[1][1] + m[2][2];
        if tr.abs() > TRACE_WARN {
            log::warn!("velocity gradient has trace {tr:.3e}; projecting to traceless part");
        }
        let mut entries = m;
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] -= tr / 3.0;
        }
        Self { entries }
    }

    /// Keeps the trace. Only meant for negative tests of trace-dependent
    /// identities; the solvers assume a traceless tensor.
    pub fn with_trace_unchecked(m: [[f64; 3]; 3]) -> Self {
        Self { entries: m }
    }

    /// Row-major 9-vector, projected.
    pub fn from_row_major(v: &[f64; 9]) -> Self {
        Self::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn zero() -> Self {
        Self { entries: [[0.0; 3]; 3] }
    }

    /// Simple shear with a single entry `κ₁₂ = rate`.
    pub fn simple_shear(rate: f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        m[0][1] = rate;
        Self { entries: m }
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.entries
    }

    pub fn row_major(&self) -> [f64; 9] {
        let e = &self.entries;
        [
            e[0][0], e[0][1], e[0][2], e[1][0], e[1][1], e[1][2], e[2][0], e[2][1], e[2][2],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1] + self.entries[2][2]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|&x| x == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut entries = self.entries;
        entries.iter_mut().flatten().for_each(|x| *x *= alpha);
        Self { entries }
    }

    /// `κ·u`.
    #[inline]
    pub fn apply(&self, u: &[f64; 3]) -> [f64; 3] {
        let e = &self.entries;
        [
            e[0][0] * u[0] + e[0][1] * u[1] + e[0][2] * u[2],
            e[1][0] * u[0] + e[1][1] * u[1] + e[1][2] * u[2],
            e[2][0] * u[0] + e[2][1] * u[1] + e[2][2] * u[2],
        ]
    }

    /// `κ:u⊗u = u·κu`.
    #[inline]
    pub fn contract_uu(&self, u: &[f64; 3]) -> f64 {
        let ku = self.apply(u);
        ku[0] * u[0] + ku[1] * u[1] + ku[2] * u[2]
    }

    /// `κ:A = Σ κᵢⱼ Aᵢⱼ`.
    pub fn contract(&self, a: &[[f64; 3]; 3]) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += self.entries[i][j] * a[i][j];
            }
        }
        acc
    }
}

impl Default for KappaTensor {
    fn default() -> Self {
        Self::zero()
    }
}
