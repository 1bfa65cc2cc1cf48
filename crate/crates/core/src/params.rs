//! Parameter set of the extended Dicke model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Units {
    /// Angular frequencies in rad/s.
    Si,
    /// Everything divided by the resonator frequency.
    Resonator,
}

/// `H = w_r a^dag a + sum_i w_q^i sigma_z^i / 2 + sum_i g_i (a + a^dag) sigma_x^i / 2 + D S_x^2`.
///
/// `delta = D - g^2 / w_r` is stored alongside `D`; for disordered sets it is
/// computed from the mean coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_qubits: usize,
    pub omega_r: f64,
    pub omega_q: Vec<f64>,
    pub g: Vec<f64>,
    pub d: f64,
    pub delta: f64,
    pub units: Units,
}

impl ModelParams {
    /// Uniform parameters with an explicit qubit-qubit coupling `d`.
    pub fn with_coupling(
        n_qubits: usize,
        omega_r: f64,
        omega_q: f64,
        g: f64,
        d: f64,
        units: Units,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(omega_r > 0.0) || !omega_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "resonator frequency must be positive, got {omega_r}"
            )));
        }
        if !omega_q.is_finite() || !g.is_finite() || !d.is_finite() {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        Ok(Self {
            n_qubits,
            omega_r,
            omega_q: vec![omega_q; n_qubits],
            g: vec![g; n_qubits],
            d,
            delta: d - g * g / omega_r,
            units,
        })
    }

    /// Extended Dicke model, `D = g^2 / w_r + delta`.
    pub fn edm(n_qubits: usize, omega_r: f64, omega_q: f64, g: f64, delta: f64, units: Units) -> Result<Self> {
        let mut p = Self::with_coupling(n_qubits, omega_r, omega_q, g, 0.0, units)?;
        p.d = g * g / omega_r + delta;
        p.delta = delta;
        Ok(p)
    }

    /// EDM in resonator units (`w_r = 1`).
    pub fn edm_scaled(n_qubits: usize, omega_q: f64, g: f64, delta: f64) -> Result<Self> {
        Self::edm(n_qubits, 1.0, omega_q, g, delta, Units::Resonator)
    }

    /// Standard Dicke model, `D = 0`.
    pub fn dicke(n_qubits: usize, omega_r: f64, omega_q: f64, g: f64, units: Units) -> Result<Self> {
        Self::with_coupling(n_qubits, omega_r, omega_q, g, 0.0, units)
    }

    pub fn dicke_scaled(n_qubits: usize, omega_q: f64, g: f64) -> Result<Self> {
        Self::dicke(n_qubits, 1.0, omega_q, g, Units::Resonator)
    }

    /// Per-qubit frequencies and couplings. `d` is `mean(g)^2 / w_r + delta`.
    pub fn disordered(
        omega_r: f64,
        omega_q: Vec<f64>,
        g: Vec<f64>,
        delta: f64,
        units: Units,
    ) -> Result<Self> {
        if omega_q.len() != g.len() {
            return Err(Error::DimensionMismatch {
                left: omega_q.len(),
                right: g.len(),
            });
        }
        let n = g.len();
        let mut p = Self::with_coupling(n, omega_r, 0.0, 0.0, 0.0, units)?;
        let g_mean = g.iter().sum::<f64>() / n as f64;
        p.omega_q = omega_q;
        p.g = g;
        p.d = g_mean * g_mean / omega_r + delta;
        p.delta = delta;
        Ok(p)
    }

    pub fn is_uniform(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|&x| x == v[0]);
        same(&self.omega_q) && same(&self.g)
    }

    fn require_uniform(&self) -> Result<()> {
        if self.is_uniform() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "operation requires uniform qubit frequencies and couplings".into(),
            ))
        }
    }

    pub fn omega_q_uniform(&self) -> Result<f64> {
        self.require_uniform()?;
        Ok(self.omega_q[0])
    }

    pub fn g_uniform(&self) -> Result<f64> {
        self.require_uniform()?;
        Ok(self.g[0])
    }

    /// Mean qubit frequency.
    pub fn omega_q_mean(&self) -> f64 {
        self.omega_q.iter().sum::<f64>() / self.n_qubits as f64
    }

    pub fn g_mean(&self) -> f64 {
        self.g.iter().sum::<f64>() / self.n_qubits as f64
    }

    /// `gamma = g / w_r` (mean coupling).
    pub fn gamma(&self) -> f64 {
        self.g_mean() / self.omega_r
    }

    /// `g_usc = sqrt(w_r w_q)`.
    pub fn g_usc(&self) -> f64 {
        (self.omega_r * self.omega_q_mean()).sqrt()
    }

    /// `zeta = (g / g_usc)^2`.
    pub fn zeta(&self) -> f64 {
        let g = self.g_mean();
        g * g / (self.omega_r * self.omega_q_mean())
    }

    /// Total spin `s = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_qubits as f64 / 2.0
    }

    /// Same physics with every frequency divided by `w_r`.
    pub fn to_resonator_units(&self) -> Self {
        let w = self.omega_r;
        Self {
            n_qubits: self.n_qubits,
            omega_r: 1.0,
            omega_q: self.omega_q.iter().map(|x| x / w).collect(),
            g: self.g.iter().map(|x| x / w).collect(),
            d: self.d / w,
            delta: self.delta / w,
            units: Units::Resonator,
        }
    }
}
