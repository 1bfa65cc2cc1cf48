//! Compilation of physical circuit values into model parameters.
//!
//! Two topologies are supported: `N` Cooper-pair boxes coupled capacitively
//! to a lumped LC resonator, and `N` flux qubits sharing a coupling
//! inductance with the resonator. All quantities are SI; frequencies are
//! angular.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Units};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Default charge-basis cutoff for the Cooper-pair box.
pub const DEFAULT_CPB_CUTOFF: usize = 20;
/// Doubling stops here; beyond it the spectrum is reported as unconverged.
pub const MAX_CPB_CUTOFF: usize = 2560;
/// Level drift, in units of `E_C`, accepted between successive cutoffs.
pub const CPB_DRIFT_TOL: f64 = 1e-10;

/// `h * nu` for a frequency given in GHz.
pub fn energy_from_ghz(ghz: f64) -> f64 {
    PLANCK * ghz * 1e9
}

/// Angular frequency to ordinary frequency in GHz.
pub fn ghz_from_angular(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI) * 1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeCircuit {
    pub c_r: f64,
    pub c_q: f64,
    pub c_g: f64,
    pub l_r: f64,
    /// Josephson energy (J).
    pub e_j: f64,
    /// Gate charge `C_q V_G / 2e`.
    pub n_g: f64,
    pub n_qubits: usize,
}

impl ChargeCircuit {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C_r", self.c_r), ("C_q", self.c_q), ("C_g", self.c_g), ("L_r", self.l_r)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.e_j >= 0.0) {
            return Err(Error::InvalidParameter(format!("E_J must be non-negative, got {}", self.e_j)));
        }
        if self.n_qubits == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        Ok(())
    }
}

/// Renormalized capacitances of the charge circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCapacitances {
    /// `Cbar^2` (F^2).
    pub cbar_sq: f64,
    pub cbar_q: f64,
    pub cbar_r: f64,
    pub cbar_g: f64,
    pub cbar_qq: f64,
}

pub fn derive_capacitances(c: &ChargeCircuit) -> DerivedCapacitances {
    let n = c.n_qubits as f64;
    let cbar_sq = c.c_g * c.c_r + c.c_q * (c.c_r + n * c.c_g);
    let x = c.c_r + c.c_g + (n - 1.0) * c.c_g * c.c_q / (c.c_q + c.c_g);
    DerivedCapacitances {
        cbar_sq,
        cbar_q: cbar_sq / x,
        cbar_r: cbar_sq / (c.c_q + c.c_g),
        cbar_g: cbar_sq / c.c_g,
        cbar_qq: (c.c_g + c.c_q) * cbar_sq / (c.c_g * c.c_g),
    }
}

/// Node capacitance matrix, resonator node first.
pub fn capacitance_matrix(c: &ChargeCircuit) -> DMatrix<f64> {
    let n = c.n_qubits;
    DMatrix::from_fn(n + 1, n + 1, |i, j| match (i, j) {
        (0, 0) => c.c_r + n as f64 * c.c_g,
        (0, _) | (_, 0) => -c.c_g,
        _ if i == j => c.c_q + c.c_g,
        _ => 0.0,
    })
}

/// Closed-form inverse of [`capacitance_matrix`].
pub fn capacitance_inverse_closed_form(c: &ChargeCircuit) -> DMatrix<f64> {
    let n = c.n_qubits;
    let cbar_sq = derive_capacitances(c).cbar_sq;
    let x = c.c_r + c.c_g + (n as f64 - 1.0) * c.c_g * c.c_q / (c.c_g + c.c_q);
    let y = c.c_g * c.c_g / (c.c_g + c.c_q);
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        let v = match (i, j) {
            (0, 0) => c.c_q + c.c_g,
            (0, _) | (_, 0) => c.c_g,
            _ if i == j => x,
            _ => y,
        };
        v / cbar_sq
    })
}

/// Condition-number ceiling for the numeric inverse.
const MAX_CONDITION: f64 = 1e14;

/// Numeric inverse of the capacitance matrix.
pub fn invert_capacitance_matrix(c: &ChargeCircuit) -> Result<DMatrix<f64>> {
    let m = capacitance_matrix(c);
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    m.try_inverse().ok_or(Error::Singular { condition })
}

/// Low-lying spectrum of a Cooper-pair box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpbSpectrum {
    /// `(E_1 - E_0) / hbar` (rad/s).
    pub omega_q: f64,
    /// `2e |<1|n|0>|` (C).
    pub q0: f64,
    /// `|<1|n|0>|`.
    pub charge_matrix_element: f64,
    /// Lowest eigenvalues (J), ascending.
    pub levels: Vec<f64>,
    /// `(E_2 - E_1) - (E_1 - E_0)` (J).
    pub anharmonicity: f64,
    pub n_cut: usize,
}

fn cpb_diagonalize(e_c: f64, e_j: f64, n_g: f64, n_cut: usize) -> (Vec<f64>, DMatrix<f64>) {
    let size = 2 * n_cut + 1;
    let h = DMatrix::from_fn(size, size, |i, j| {
        let n = i as f64 - n_cut as f64;
        if i == j {
            4.0 * e_c * (n - n_g).powi(2)
        } else if i.abs_diff(j) == 1 {
            -0.5 * e_j
        } else {
            0.0
        }
    });
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(size, size, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Diagonalizes `4 E_C (n - n_g)^2 - E_J/2 sum (|n><n+1| + h.c.)` for
/// `n in [-n_cut, n_cut]`, doubling the cutoff until the lowest three levels
/// drift by less than `1e-10 E_C`.
pub fn cpb_spectrum(e_c: f64, e_j: f64, n_g: f64, n_cut: usize) -> Result<CpbSpectrum> {
    if n_cut < 5 {
        return Err(Error::InvalidParameter(format!("charge cutoff must be >= 5, got {n_cut}")));
    }
    if !(e_c > 0.0) || !(e_j >= 0.0) || !n_g.is_finite() {
        return Err(Error::InvalidParameter("E_C must be positive and E_J non-negative".into()));
    }
    let watched = 3;
    let mut cut = n_cut;
    let mut levels = cpb_diagonalize(e_c, e_j, n_g, cut).0;
    let vectors = loop {
        let next = cut * 2;
        if next > MAX_CPB_CUTOFF {
            return Err(Error::Cutoff(format!(
                "Cooper-pair-box levels still drifting at n_cut = {cut}"
            )));
        }
        let (l2, v2) = cpb_diagonalize(e_c, e_j, n_g, next);
        let drift = levels
            .iter()
            .zip(&l2)
            .take(watched)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        cut = next;
        levels = l2;
        if drift < CPB_DRIFT_TOL * e_c {
            break v2;
        }
    };

    let size = 2 * cut + 1;
    let charge = |i: usize| i as f64 - cut as f64;
    let mut v0: Vec<f64> = vectors.column(0).iter().copied().collect();
    let mut v1: Vec<f64> = vectors.column(1).iter().copied().collect();
    // Degenerate doublet (E_J = 0 at a charge-degeneracy point): take the
    // E_J -> 0+ limit, i.e. the eigenbasis of the tunnelling operator.
    if levels[1] - levels[0] < 1e-12 * e_c {
        let hop = |u: &[f64], w: &[f64]| -> f64 {
            (0..size - 1).map(|i| u[i] * w[i + 1] + u[i + 1] * w[i]).sum()
        };
        let t00 = -hop(&v0, &v0);
        let t01 = -hop(&v0, &v1);
        let t11 = -hop(&v1, &v1);
        let block = nalgebra::Matrix2::new(t00, t01, t01, t11);
        let e = block.symmetric_eigen();
        let (lo, hi) = if e.eigenvalues[0] <= e.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let rot = |k: usize| -> Vec<f64> {
            (0..size)
                .map(|i| e.eigenvectors[(0, k)] * v0[i] + e.eigenvectors[(1, k)] * v1[i])
                .collect()
        };
        let (a, b) = (rot(lo), rot(hi));
        v0 = a;
        v1 = b;
    }
    let element: f64 = (0..size).map(|i| v1[i] * charge(i) * v0[i]).sum::<f64>().abs();
    let anharmonicity = (levels[2] - levels[1]) - (levels[1] - levels[0]);
    levels.truncate(6.min(levels.len()));
    Ok(CpbSpectrum {
        omega_q: (levels[1] - levels[0]) / HBAR,
        q0: 2.0 * ELEMENTARY_CHARGE * element,
        charge_matrix_element: element,
        levels,
        anharmonicity,
        n_cut: cut,
    })
}

/// Charging energy `e^2 / (2 Cbar_q)`.
pub fn charging_energy(c: &ChargeCircuit) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * derive_capacitances(c).cbar_q)
}

/// Full record of a charge-circuit compilation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeCompilation {
    pub params: ModelParams,
    pub capacitances: DerivedCapacitances,
    pub e_c: f64,
    pub cpb: CpbSpectrum,
    /// Resonator zero-point charge `sqrt(hbar Cbar_r w_r / 2)`.
    pub q0_r: f64,
    pub zeta: f64,
}

pub fn compile_charge_circuit(c: &ChargeCircuit) -> Result<ChargeCompilation> {
    c.validate()?;
    let caps = derive_capacitances(c);
    let e_c = charging_energy(c);
    let cpb = cpb_spectrum(e_c, c.e_j, c.n_g, DEFAULT_CPB_CUTOFF)?;
    let omega_r = 1.0 / (c.l_r * caps.cbar_r).sqrt();
    let q0_r = (HBAR * caps.cbar_r * omega_r / 2.0).sqrt();
    let g = 2.0 * q0_r * cpb.q0 / (HBAR * caps.cbar_g);
    let d = 2.0 * cpb.q0 * cpb.q0 / (HBAR * caps.cbar_qq);
    let params = ModelParams::with_coupling(c.n_qubits, omega_r, cpb.omega_q, g, d, Units::Si)?;
    let zeta = params.zeta();
    Ok(ChargeCompilation {
        params,
        capacitances: caps,
        e_c,
        cpb,
        q0_r,
        zeta,
    })
}

pub fn charge_model_params(c: &ChargeCircuit) -> Result<ModelParams> {
    Ok(compile_charge_circuit(c)?.params)
}

fn zeta_geometry(c: &ChargeCircuit) -> f64 {
    let n = c.n_qubits as f64;
    c.c_g * c.c_g / (c.c_r * (c.c_g + c.c_q) + c.c_g * (c.c_g + n * c.c_q))
}

/// Coupling parameter in the transmon limit; always below one.
pub fn zeta_transmon(c: &ChargeCircuit) -> f64 {
    zeta_geometry(c)
}

/// Coupling parameter in the charge-qubit limit for charging energy `e_c`.
pub fn zeta_charge(c: &ChargeCircuit, e_c: f64) -> Result<f64> {
    if c.e_j == 0.0 {
        return Err(Error::Division("E_J = 0 in the charge-regime coupling parameter".into()));
    }
    Ok(4.0 * zeta_geometry(c) * e_c / c.e_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxCircuit {
    pub c_r: f64,
    pub l_r: f64,
    pub l_g: f64,
    /// Qubit flux matrix element (Wb).
    pub phi_q0: f64,
    /// Qubit splitting (rad/s).
    pub omega_q: f64,
    pub n_qubits: usize,
}

impl FluxCircuit {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C_r", self.c_r), ("L_r", self.l_r), ("L_g", self.l_g)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n_qubits == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        Ok(())
    }

    /// Parallel combination `L_r L_g / (L_r + L_g)`.
    pub fn renormalized_inductance(&self) -> f64 {
        self.l_r * self.l_g / (self.l_r + self.l_g)
    }
}

pub fn flux_model_params(c: &FluxCircuit) -> Result<ModelParams> {
    c.validate()?;
    let l_bar = c.renormalized_inductance();
    let omega_r = 1.0 / (l_bar * c.c_r).sqrt();
    let g = 2.0 * c.phi_q0 * (HBAR / (2.0 * c.c_r * omega_r)).sqrt() / (HBAR * c.l_g);
    let d = 2.0 * c.phi_q0 * c.phi_q0 / (HBAR * c.l_g);
    ModelParams::with_coupling(c.n_qubits, omega_r, c.omega_q, g, d, Units::Si)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FF: f64 = 1e-15;

    fn circuit(c_r: f64, c_q: f64, c_g: f64, n: usize) -> ChargeCircuit {
        ChargeCircuit {
            c_r,
            c_q,
            c_g,
            l_r: 1e-9,
            e_j: energy_from_ghz(2.0),
            n_g: 0.5,
            n_qubits: n,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn cbar_squared_direct_value() {
        let d = derive_capacitances(&circuit(10.0 * FF, 0.5 * FF, 1.0 * FF, 1));
        assert!(rel(d.cbar_sq, 15.5 * FF * FF) < 1e-14);
    }

    #[test]
    fn decoupled_limit() {
        let c = circuit(10.0 * FF, 0.5 * FF, 1e-30, 3);
        let d = derive_capacitances(&c);
        assert!(d.cbar_g > 1e10 * c.c_r);
        assert!(rel(d.cbar_r, c.c_r) < 1e-6);
        assert!(rel(d.cbar_q, c.c_q) < 1e-6);
    }

    #[test]
    fn coupling_lowers_charging_energies() {
        let c = circuit(10.0 * FF, 0.5 * FF, 3.0 * FF, 4);
        let d = derive_capacitances(&c);
        assert!(1.0 / d.cbar_r < 1.0 / c.c_r);
        assert!(1.0 / d.cbar_q < 1.0 / c.c_q);
    }

    #[test]
    fn two_node_inverse_by_hand() {
        let c = circuit(FF, FF, FF, 1);
        let m = capacitance_matrix(&c) / FF;
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
        let inv = invert_capacitance_matrix(&c).unwrap() * FF;
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) / 3.0;
        assert!((inv - expected).amax() < 1e-12);
        assert!(rel(derive_capacitances(&c).cbar_sq, 3.0 * FF * FF) < 1e-14);
    }

    #[test]
    fn resonator_qubit_block_three_qubits() {
        let c = circuit(7.0 * FF, 0.8 * FF, 2.5 * FF, 3);
        let inv = invert_capacitance_matrix(&c).unwrap();
        let cbar_sq = derive_capacitances(&c).cbar_sq;
        for q in 1..=3 {
            assert!(rel(inv[(0, q)], c.c_g / cbar_sq) < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_reports_condition() {
        let mut c = circuit(FF, FF, FF, 2);
        c.c_r = 1e-40;
        c.c_q = 1e-40;
        match invert_capacitance_matrix(&c) {
            Err(Error::Singular { condition }) => assert!(condition > 1e14),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn cpb_degenerate_charge_point() {
        let s = cpb_spectrum(1.0, 0.0, 0.5, 20).unwrap();
        assert!(s.omega_q.abs() * HBAR < 1e-12);
        assert!((s.charge_matrix_element - 0.5).abs() < 1e-12);
        assert!(rel(s.q0, ELEMENTARY_CHARGE) < 1e-12);
    }

    #[test]
    fn cpb_transmon_regime() {
        let e_c = 1.0;
        let s = cpb_spectrum(e_c, 50.0, 0.0, 20).unwrap();
        let e01 = s.omega_q * HBAR;
        let asymptotic = (8.0 * e_c * 50.0f64).sqrt() - e_c;
        assert!(rel(e01, asymptotic) < 0.05, "E01 = {e01}");
        // Q0 against sqrt(hbar Cbar_q w_q / 2) with Cbar_q = e^2 / 2E_C.
        let cbar_q = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * e_c);
        let q_ho = (cbar_q * e01 / 2.0).sqrt();
        assert!(rel(s.q0, q_ho) < 0.05);
        assert!(s.anharmonicity < 0.0);
    }

    #[test]
    fn cpb_charge_regime() {
        let s = cpb_spectrum(1.0, 0.1, 0.5, 20).unwrap();
        assert!(rel(s.omega_q * HBAR, 0.1) < 0.02);
    }

    #[test]
    fn cpb_rejects_small_cutoff() {
        assert!(cpb_spectrum(1.0, 1.0, 0.0, 4).is_err());
    }

    #[test]
    fn cpb_gate_charge_symmetries() {
        for &ng in &[0.0, 0.13, 0.37, 0.5] {
            let a = cpb_spectrum(1.0, 0.7, ng, 20).unwrap();
            let b = cpb_spectrum(1.0, 0.7, ng + 1.0, 20).unwrap();
            let c = cpb_spectrum(1.0, 0.7, -ng, 20).unwrap();
            for k in 0..4 {
                assert!((a.levels[k] - b.levels[k]).abs() < 1e-10);
                assert!((a.levels[k] - c.levels[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn charge_pipeline_satisfies_constraint() {
        let c = circuit(10.0 * FF, 0.5 * FF, 4.0 * FF, 3);
        let p = charge_model_params(&c).unwrap();
        assert!(p.delta.abs() / p.d < 1e-10);
    }

    #[test]
    fn charge_pipeline_decoupled_limit() {
        let c = circuit(10.0 * FF, 0.5 * FF, 1e-24, 2);
        let p = charge_model_params(&c).unwrap();
        let strong = charge_model_params(&circuit(10.0 * FF, 0.5 * FF, 5.0 * FF, 2)).unwrap();
        assert!(p.g[0] < 1e-6 * strong.g[0]);
        assert!(p.d < 1e-12 * strong.d);
    }

    #[test]
    fn transmon_zeta_examples() {
        let c = circuit(10.0 * FF, 1e-30, 10.0 * FF, 1);
        assert!((zeta_transmon(&c) - 0.5).abs() < 1e-12);
        let c = circuit(10.0 * FF, 0.5 * FF, 10.0 * FF, 1);
        assert!((zeta_transmon(&c) - 100.0 / 210.0).abs() < 1e-12);
    }

    #[test]
    fn charge_zeta_examples() {
        let c = circuit(10.0 * FF, 0.5 * FF, 10.0 * FF, 1);
        let e_c = charging_energy(&c);
        let z = zeta_charge(&c, e_c).unwrap();
        assert!(rel(z, 4.0 * zeta_transmon(&c) * e_c / c.e_j) < 1e-14);
        // E_C = E_J / 4 with transmon zeta 0.5.
        let c = circuit(10.0 * FF, 1e-30, 10.0 * FF, 1);
        assert!((zeta_charge(&c, c.e_j / 4.0).unwrap() - 0.5).abs() < 1e-12);
        let mut c0 = c;
        c0.e_j = 0.0;
        assert!(matches!(zeta_charge(&c0, 1.0), Err(Error::Division(_))));
    }

    fn flux(l_r: f64, l_g: f64) -> FluxCircuit {
        FluxCircuit {
            c_r: 0.25e-12,
            l_r,
            l_g,
            phi_q0: 1e-16,
            omega_q: 2.0 * std::f64::consts::PI * 5e9,
            n_qubits: 2,
        }
    }

    #[test]
    fn flux_relation() {
        let c = flux(2e-9, 1.5e-9);
        let p = flux_model_params(&c).unwrap();
        let g = p.g[0];
        assert!(rel(p.d * p.omega_r / (g * g), 1.0 + c.l_g / c.l_r) < 1e-10);
        assert!(rel(p.delta, g * g / p.omega_r * c.l_g / c.l_r) < 1e-10);
        assert!(p.delta > 0.0);
    }

    #[test]
    fn flux_equal_inductances() {
        let p = flux_model_params(&flux(1.5e-9, 1.5e-9)).unwrap();
        assert!(rel(p.d, 2.0 * p.g[0] * p.g[0] / p.omega_r) < 1e-10);
    }

    #[test]
    fn flux_small_coupling_inductance() {
        let p = flux_model_params(&flux(1e-6, 1e-12)).unwrap();
        assert!(p.delta / p.d < 1e-5);
    }
}
