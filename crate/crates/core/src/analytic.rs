//! Closed-form theories: Holstein-Primakoff linearization and the polaron-frame
//! effective spin model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Holstein-Primakoff normal modes and ground photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpResult {
    /// `G = g sqrt(N) / 2`.
    pub g_collective: f64,
    /// `D_N = N D / 4`.
    pub d_collective: f64,
    /// `Omega_q^2 = w_q (w_q + 4 D_N)`.
    pub omega_q_sq: f64,
    pub omega_plus_sq: f64,
    pub omega_minus_sq: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub cos_2theta: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub n_photon: f64,
}

/// Square roots of `omega^4 - (w_r^2 + Omega_q^2) omega^2 + (w_r^2 Omega_q^2 - 4 G^2 w_r w_q)`.
fn hp_roots(p: &ModelParams) -> Result<(f64, f64, f64, f64, f64, f64)> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let wr = p.omega_r;
    let n = p.n_qubits as f64;
    let big_g = g * n.sqrt() / 2.0;
    let d_n = n * p.d / 4.0;
    let omq2 = wq * (wq + 4.0 * d_n);
    let sum = wr * wr + omq2;
    let diff = wr * wr - omq2;
    let disc = (diff * diff + 16.0 * big_g * big_g * wr * wq).sqrt();
    let plus_sq = 0.5 * (sum + disc);
    // Product of the roots, written to avoid cancellation when D = g^2 / w_r.
    let product = wr * wr * wq * wq + 4.0 * wr * wq * (wr * d_n - big_g * big_g);
    let minus_sq = if plus_sq > 0.0 { product / plus_sq } else { 0.5 * (sum - disc) };
    let cos_2theta = if disc > 0.0 { diff / disc } else { 0.0 };
    Ok((big_g, d_n, omq2, plus_sq, minus_sq, cos_2theta))
}

/// `(omega_+, omega_-)`; errors with the offending `omega_-^2` when unstable.
pub fn hp_frequencies(p: &ModelParams) -> Result<(f64, f64)> {
    let (_, _, _, plus_sq, minus_sq, _) = hp_roots(p)?;
    if minus_sq < -1e-12 * plus_sq.max(1.0) {
        return Err(Error::Instability {
            omega_minus_sq: minus_sq,
        });
    }
    Ok((plus_sq.sqrt(), minus_sq.max(0.0).sqrt()))
}

pub fn hp_solve(p: &ModelParams) -> Result<HpResult> {
    let (big_g, d_n, omq2, plus_sq, minus_sq, cos_2theta) = hp_roots(p)?;
    let (wp, wm) = hp_frequencies(p)?;
    if wm == 0.0 {
        return Err(Error::Division("omega_- = 0 in the photon-number closed form".into()));
    }
    let wr = p.omega_r;
    let prod = wp * wm;
    let a_plus = (prod + wr * wr) * (wp + wm) / (wr * prod);
    let a_minus = (prod - wr * wr) * (wp - wm) / (wr * prod);
    let n_photon = (cos_2theta * a_minus + a_plus - 4.0) / 8.0;
    Ok(HpResult {
        g_collective: big_g,
        d_collective: d_n,
        omega_q_sq: omq2,
        omega_plus_sq: plus_sq,
        omega_minus_sq: minus_sq,
        omega_plus: wp,
        omega_minus: wm,
        cos_2theta,
        a_plus,
        a_minus,
        n_photon,
    })
}

pub fn hp_photon_number(p: &ModelParams) -> Result<f64> {
    Ok(hp_solve(p)?.n_photon)
}

/// Leading small-coupling photon number
/// `N g^2 w_q / {4 (w_r + w_q)^2 [w_q + N (D - g^2 / w_r)]}`.
pub fn hp_photon_number_smallg(p: &ModelParams) -> Result<f64> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let wr = p.omega_r;
    let n = p.n_qubits as f64;
    let denom = 4.0 * (wr + wq).powi(2) * (wq + n * (p.d - g * g / wr));
    if denom == 0.0 {
        return Err(Error::Division("small-coupling photon number denominator vanishes".into()));
    }
    Ok(n * g * g * wq / denom)
}

/// Normal-phase instability: `N g^2 / w_r >= N D + w_q`.
/// With `D = 0` this is `sqrt(N) g >= sqrt(w_r w_q)`.
pub fn srt_condition(p: &ModelParams) -> Result<bool> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let n = p.n_qubits as f64;
    Ok(n * g * g / p.omega_r >= n * p.d + wq)
}

/// The same test with the qubit-qubit term removed.
pub fn srt_condition_dm(p: &ModelParams) -> Result<bool> {
    let mut dm = p.clone();
    dm.d = 0.0;
    srt_condition(&dm)
}

fn check_m(s: f64, m: f64) -> Result<()> {
    let frac = (s - m).fract();
    if m.abs() > s + 1e-12 || frac.abs() > 1e-12 || (2.0 * s).fract() != 0.0 || s < 0.0 {
        return Err(Error::InvalidParameter(format!("invalid spin quantum numbers s={s}, m={m}")));
    }
    Ok(())
}

/// `E_{m,n} = delta m^2 + w_r n`.
pub fn h0_energy(s: f64, m_x: f64, n: usize, p: &ModelParams) -> Result<f64> {
    check_m(s, m_x)?;
    Ok(p.delta * m_x * m_x + p.omega_r * n as f64)
}

/// `<s, m'|S_z|s, m>` in the `S_x` eigenbasis: `1/2 sqrt(s(s+1) - m m')` for
/// `|m' - m| = 1`, zero otherwise.
pub fn sz_ladder(s: f64, m_prime: f64, m: f64) -> f64 {
    if ((m_prime - m).abs() - 1.0).abs() > 1e-12 {
        return 0.0;
    }
    0.5 * (s * (s + 1.0) - m * m_prime).max(0.0).sqrt()
}

/// `<Psi_{m',n}|w_q S_z|Psi_{m,0}>` between polaron states displaced by `-m gamma`:
/// `w_q e^{-gamma^2 (m - m')^2 / 2} gamma^n (m' - m)^n / sqrt(n!) <m'|S_z|m>`.
pub fn h1_matrix_element(s: f64, m_prime: f64, m: f64, n: usize, p: &ModelParams) -> Result<f64> {
    check_m(s, m)?;
    check_m(s, m_prime)?;
    let wq = p.omega_q_uniform()?;
    let gamma = p.g_uniform()? / p.omega_r;
    let ladder = sz_ladder(s, m_prime, m);
    if ladder == 0.0 {
        return Ok(0.0);
    }
    let dm = m_prime - m;
    let beta = gamma * dm;
    let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let coherent = (-beta * beta / 2.0).exp() * beta.powi(n as i32) / (0.5 * log_fact).exp();
    Ok(wq * coherent * ladder)
}

/// Polaron-frame effective model on the `2s+1` Dicke states `|s, m_x>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub s: f64,
    pub gamma: f64,
    /// `w_q e^{-gamma^2 / 2}`.
    pub c1: f64,
    /// `w_q^2 w_r / (2 g^2)`.
    pub c2: f64,
    pub delta: f64,
    /// Row/column `j` is `m_x = j - s`.
    pub matrix: DMatrix<f64>,
    /// Ascending eigenvalues of `matrix`.
    pub levels: Vec<f64>,
    pub valid: bool,
    pub warnings: Vec<String>,
}

impl EffectiveModel {
    /// Levels relative to the lowest one.
    pub fn excitations(&self) -> Vec<f64> {
        self.levels.iter().map(|e| e - self.levels[0]).collect()
    }
}

/// `H_eff = (delta + c2) S_x^2 - c2 s(s+1) + c1 S_z` in the `S_x` eigenbasis.
pub fn effective_hamiltonian(p: &ModelParams) -> Result<EffectiveModel> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let wr = p.omega_r;
    let gamma = g / wr;
    if gamma.abs() < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "effective model needs g >= w_r, got g/w_r = {gamma}"
        )));
    }
    let s = p.spin();
    let c1 = wq * (-gamma * gamma / 2.0).exp();
    let c2 = wq * wq * wr / (2.0 * g * g);
    let dim = p.n_qubits + 1;
    let m = |j: usize| j as f64 - s;
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        h[(j, j)] = (p.delta + c2) * m(j) * m(j) - c2 * s * (s + 1.0);
        if j + 1 < dim {
            let t = c1 * sz_ladder(s, m(j + 1), m(j));
            h[(j, j + 1)] = t;
            h[(j + 1, j)] = t;
        }
    }
    let mut levels: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    levels.sort_by(f64::total_cmp);
    let valid = validity_check(p, s)?;
    let mut warnings = Vec::new();
    if !valid {
        warnings.push("perturbative validity bound violated".to_string());
    }
    if gamma.abs() < 2.0 {
        warnings.push(format!("g/w_r = {gamma} < 2: second-order coefficient approximation is rough"));
    }
    Ok(EffectiveModel {
        s,
        gamma,
        c1,
        c2,
        delta: p.delta,
        matrix: h,
        levels,
        valid,
        warnings,
    })
}

/// Large-coupling limits for even and odd `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptotics {
    /// `N(N+2) g^6 e^{-gamma^2} / (2 w_r^4 w_q^2)`.
    pub n_photon_even: f64,
    /// `w_r w_q^2 / (2 g^2)`.
    pub gap_even: f64,
    /// `gamma^2 / 4`.
    pub n_photon_odd: f64,
    /// `(N+1) w_q e^{-gamma^2/2}`.
    pub gap_odd: f64,
    /// `-N(N+2) w_q w_r / (4 g^2)`.
    pub sz_tail: f64,
}

pub fn asymptotics(p: &ModelParams) -> Result<Asymptotics> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let wr = p.omega_r;
    let gamma = g / wr;
    if gamma.abs() <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "asymptotics need g > w_r, got g/w_r = {gamma}"
        )));
    }
    let n = p.n_qubits as f64;
    Ok(Asymptotics {
        n_photon_even: n * (n + 2.0) * g.powi(6) * (-gamma * gamma).exp() / (2.0 * wr.powi(4) * wq * wq),
        gap_even: wr * wq * wq / (2.0 * g * g),
        n_photon_odd: gamma * gamma / 4.0,
        gap_odd: (n + 1.0) * wq * (-gamma * gamma / 2.0).exp(),
        sz_tail: -n * (n + 2.0) * wq * wr / (4.0 * g * g),
    })
}

/// `sqrt(s(s+1)) w_q / 2 < g^2 / w_r`, strict.
pub fn validity_check(p: &ModelParams, s: f64) -> Result<bool> {
    let wq = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    Ok((s * (s + 1.0)).sqrt() * wq / 2.0 < g * g / p.omega_r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hp_decoupled_frequencies() {
        let p = ModelParams::dicke_scaled(3, 0.4, 0.0).unwrap();
        let (wp, wm) = hp_frequencies(&p).unwrap();
        assert!((wp - 1.0).abs() < 1e-15 && (wm - 0.4).abs() < 1e-15);
        assert!(hp_photon_number(&p).unwrap().abs() < 1e-15);
        assert_eq!(hp_photon_number_smallg(&p).unwrap(), 0.0);
        let p = ModelParams::dicke_scaled(3, 1.7, 0.0).unwrap();
        let (wp, wm) = hp_frequencies(&p).unwrap();
        assert!((wp - 1.7).abs() < 1e-15 && (wm - 1.0).abs() < 1e-15);
        assert!(hp_photon_number(&p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hp_worked_example() {
        let p = ModelParams::edm_scaled(10, 0.5, 0.2, 0.0).unwrap();
        let r = hp_solve(&p).unwrap();
        assert!((r.omega_q_sq - 0.45).abs() < 1e-14);
        assert!((r.g_collective.powi(2) - 0.1).abs() < 1e-15);
        assert!((r.omega_plus_sq - 1.25).abs() < 1e-14);
        assert!((r.omega_minus_sq - 0.2).abs() < 1e-14);
        assert!((r.omega_plus - 1.118_033_988_749_895).abs() < 1e-12);
        assert!((r.omega_minus - 0.447_213_595_499_958).abs() < 1e-12);
    }

    #[test]
    fn smallg_worked_example() {
        let p = ModelParams::edm_scaled(10, 0.5, 0.05, 0.0).unwrap();
        let n = hp_photon_number_smallg(&p).unwrap();
        assert!((n - 0.0125 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn dicke_instability_is_reported() {
        let p = ModelParams::dicke_scaled(4, 1.0, 0.6).unwrap();
        assert!(matches!(hp_frequencies(&p), Err(Error::Instability { .. })));
        assert!(hp_photon_number(&p).is_err());
    }

    #[test]
    fn srt_threshold() {
        let n = 5usize;
        let wq = 0.8;
        let g_usc = (wq as f64).sqrt();
        let below = ModelParams::dicke_scaled(n, wq, 0.99 * g_usc / (n as f64).sqrt()).unwrap();
        let above = ModelParams::dicke_scaled(n, wq, 1.01 * g_usc / (n as f64).sqrt()).unwrap();
        assert!(!srt_condition_dm(&below).unwrap());
        assert!(srt_condition_dm(&above).unwrap());
        for g in [0.1, 1.0, 5.0, 50.0] {
            let edm = ModelParams::edm_scaled(n, wq, g, 0.0).unwrap();
            assert!(!srt_condition(&edm).unwrap());
            assert!(srt_condition_dm(&edm).unwrap() == (n as f64 * g * g >= wq));
        }
    }

    #[test]
    fn h0_levels() {
        let p = ModelParams::edm_scaled(2, 0.0, 1.0, 0.1).unwrap();
        assert!((h0_energy(1.0, 1.0, 0, &p).unwrap() - 0.1).abs() < 1e-15);
        assert!((h0_energy(1.0, -1.0, 2, &p).unwrap() - 2.1).abs() < 1e-15);
        let p0 = ModelParams::edm_scaled(3, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(h0_energy(1.5, 0.5, 3, &p0).unwrap(), 3.0);
        assert!(h0_energy(1.0, 0.5, 0, &p).is_err());
        assert!(h0_energy(1.0, 2.0, 0, &p).is_err());
    }

    #[test]
    fn h1_selection_and_suppression() {
        let p = ModelParams::edm_scaled(2, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(h1_matrix_element(1.0, 1.0, -1.0, 0, &p).unwrap(), 0.0);
        let n0 = h1_matrix_element(1.0, 1.0, 0.0, 0, &p).unwrap();
        assert!((n0 - (-0.5f64).exp() * 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let big = ModelParams::edm_scaled(2, 1.0, 12.0, 0.0).unwrap();
        assert!(h1_matrix_element(1.0, 1.0, 0.0, 0, &big).unwrap() < 1e-30);
        // Odd n flips sign with the direction of the hop.
        let up = h1_matrix_element(1.0, 1.0, 0.0, 1, &p).unwrap();
        let down = h1_matrix_element(1.0, -1.0, 0.0, 1, &p).unwrap();
        assert!((up + down).abs() < 1e-15);
    }

    #[test]
    fn effective_model_shape() {
        let p = ModelParams::edm_scaled(2, 1.0, 3.0, 0.0).unwrap();
        let m = effective_hamiltonian(&p).unwrap();
        assert_eq!(m.matrix.nrows(), 3);
        assert!((m.c2 - 1.0 / 18.0).abs() < 1e-15);
        assert!((m.c1 - (-4.5f64).exp()).abs() < 1e-15);
        assert!(m.valid && m.warnings.is_empty());
        assert!((&m.matrix - m.matrix.transpose()).amax() == 0.0);
        let low = ModelParams::edm_scaled(2, 1.0, 0.5, 0.0).unwrap();
        assert!(effective_hamiltonian(&low).is_err());
        let rough = ModelParams::edm_scaled(2, 1.0, 1.5, 0.0).unwrap();
        assert!(!effective_hamiltonian(&rough).unwrap().warnings.is_empty());
    }

    #[test]
    fn effective_model_large_gamma_even_ground_is_mx_zero() {
        let p = ModelParams::edm_scaled(4, 1.0, 9.0, 0.0).unwrap();
        let m = effective_hamiltonian(&p).unwrap();
        let eig = m.matrix.clone().symmetric_eigen();
        let i0 = (0..5).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        assert!((eig.eigenvectors[(2, i0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_values() {
        let p = ModelParams::edm_scaled(2, 0.5, 4.0, 0.0).unwrap();
        let a = asymptotics(&p).unwrap();
        let expected = 8.0 * 4096.0 / 0.5 * (-16f64).exp();
        assert!((a.n_photon_even - expected).abs() < 1e-15);
        assert!((a.n_photon_even - 0.007_375_5).abs() < 1e-6);
        let q = ModelParams::edm_scaled(2, 1.0, 3.0, 0.0).unwrap();
        assert!((asymptotics(&q).unwrap().gap_even - 1.0 / 18.0).abs() < 1e-15);
        assert_eq!(asymptotics(&q).unwrap().n_photon_odd, 2.25);
        assert!(asymptotics(&ModelParams::edm_scaled(2, 1.0, 1.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn validity_examples() {
        let p = ModelParams::edm_scaled(2, 1.0, 2.0, 0.0).unwrap();
        assert!(validity_check(&p, 1.0).unwrap());
        let q = ModelParams::edm_scaled(10, 1.0, 1.0, 0.0).unwrap();
        assert!(!validity_check(&q, 5.0).unwrap());
        // Both sides vanish: equality is not valid.
        let edge = ModelParams::edm_scaled(1, 1.0, 0.0, 0.0).unwrap();
        assert!(!validity_check(&edge, 0.0).unwrap());
    }
}
