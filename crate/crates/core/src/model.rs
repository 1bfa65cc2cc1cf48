//! Hamiltonian builders for the extended Dicke model and its variants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    mode_number, mode_quadrature, register_collective_spin, register_pauli, Axis, HilbertSpace,
    SparseOperator,
};
use crate::params::ModelParams;

/// `H = w_r a^dag a + w_q S_z + g (a + a^dag) S_x + D S_x^2`.
pub fn build_edm(space: &HilbertSpace, p: &ModelParams) -> Result<SparseOperator> {
    check_space(space, p.n_qubits)?;
    let omega_q = p.omega_q_uniform()?;
    let g = p.g_uniform()?;
    let n = space.n_qubits();
    let n_max = space.fock_cutoff();
    let sz = register_collective_spin(n, Axis::Z)?;
    let sx = register_collective_spin(n, Axis::X)?;
    let sx2 = sx.multiply(&sx)?;

    let photon = space.embed_mode_operator(0, &mode_number(n_max).scale_real(p.omega_r))?;
    let qubit = space.embed_qubit_operator(&sz.scale_real(omega_q).add(&sx2.scale_real(p.d))?)?;
    let coupling = space.embed_product(&sx.scale_real(g), 0, &mode_quadrature(n_max))?;
    photon.add(&qubit)?.add(&coupling)
}

/// Form of the qubit-qubit term for non-uniform couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCoupling {
    /// `(sum_i g_i sigma_x^i / 2)^2 / w_r + delta S_x^2`.
    #[default]
    PerQubit,
    /// `D S_x^2` with the scalar `D` stored in the parameters.
    Uniform,
}

/// Builder for per-qubit frequencies and couplings.
pub fn build_disordered(
    space: &HilbertSpace,
    p: &ModelParams,
    pair: PairCoupling,
) -> Result<SparseOperator> {
    check_space(space, p.n_qubits)?;
    if p.omega_q.len() != p.n_qubits || p.g.len() != p.n_qubits {
        return Err(Error::DimensionMismatch {
            left: p.omega_q.len().max(p.g.len()),
            right: p.n_qubits,
        });
    }
    let n = p.n_qubits;
    let n_max = space.fock_cutoff();
    let dq = 1usize << n;

    let mut local = SparseOperator::zero(dq);
    let mut gx = SparseOperator::zero(dq);
    for i in 0..n {
        local = local.add(&register_pauli(n, i, Axis::Z)?.scale_real(0.5 * p.omega_q[i]))?;
        gx = gx.add(&register_pauli(n, i, Axis::X)?.scale_real(0.5 * p.g[i]))?;
    }
    let sx = register_collective_spin(n, Axis::X)?;
    let sx2 = sx.multiply(&sx)?;
    let pair_term = match pair {
        PairCoupling::PerQubit => gx
            .multiply(&gx)?
            .scale_real(1.0 / p.omega_r)
            .add(&sx2.scale_real(p.delta))?,
        PairCoupling::Uniform => sx2.scale_real(p.d),
    };

    let photon = space.embed_mode_operator(0, &mode_number(n_max).scale_real(p.omega_r))?;
    let qubit = space.embed_qubit_operator(&local.add(&pair_term)?)?;
    let coupling = space.embed_product(&gx, 0, &mode_quadrature(n_max))?;
    photon.add(&qubit)?.add(&coupling)
}

/// Two boson modes coupled to `N` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeParams {
    /// `(w_r, w_ex)`.
    pub omega_modes: [f64; 2],
    pub omega_q: Vec<f64>,
    /// `g[i][k]`: qubit `i`, mode `k`.
    pub g: Vec<[f64; 2]>,
    pub d: f64,
}

impl TwoModeParams {
    pub fn n_qubits(&self) -> usize {
        self.g.len()
    }

    /// Scalar `D` for which displacing both modes cancels the qubit-qubit
    /// cross terms up to `delta S_x^2` (two qubits):
    /// `D = sum_k g_1k g_2k / w_k + delta`.
    pub fn polaron_consistent_d(omega_modes: [f64; 2], g: &[[f64; 2]], delta: f64) -> Result<f64> {
        if g.len() != 2 {
            return Err(Error::InvalidParameter(
                "polaron-consistent D is defined for two qubits".into(),
            ));
        }
        Ok((0..2).map(|k| g[0][k] * g[1][k] / omega_modes[k]).sum::<f64>() + delta)
    }
}

/// `H = sum_k w_k a_k^dag a_k + sum_i w_q^i sigma_z^i/2
///      + sum_{i,k} g_ik (a_k + a_k^dag) sigma_x^i/2 + D S_x^2`.
pub fn build_two_mode(space: &HilbertSpace, p: &TwoModeParams) -> Result<SparseOperator> {
    let n = p.n_qubits();
    check_space(space, n)?;
    if space.n_modes() != 2 {
        return Err(Error::InvalidParameter(format!(
            "two-mode model needs a two-mode space, got {} modes",
            space.n_modes()
        )));
    }
    if p.omega_q.len() != n {
        return Err(Error::DimensionMismatch {
            left: p.omega_q.len(),
            right: n,
        });
    }
    let dq = 1usize << n;
    let mut local = SparseOperator::zero(dq);
    for i in 0..n {
        local = local.add(&register_pauli(n, i, Axis::Z)?.scale_real(0.5 * p.omega_q[i]))?;
    }
    let sx = register_collective_spin(n, Axis::X)?;
    local = local.add(&sx.multiply(&sx)?.scale_real(p.d))?;
    let mut h = space.embed_qubit_operator(&local)?;
    for k in 0..2 {
        let cut = space.cutoffs()[k];
        h = h.add(&space.embed_mode_operator(k, &mode_number(cut).scale_real(p.omega_modes[k]))?)?;
        let mut gx = SparseOperator::zero(dq);
        for i in 0..n {
            gx = gx.add(&register_pauli(n, i, Axis::X)?.scale_real(0.5 * p.g[i][k]))?;
        }
        h = h.add(&space.embed_product(&gx, k, &mode_quadrature(cut))?)?;
    }
    Ok(h)
}

fn check_space(space: &HilbertSpace, n_qubits: usize) -> Result<()> {
    if space.n_qubits() != n_qubits {
        return Err(Error::DimensionMismatch {
            left: space.n_qubits(),
            right: n_qubits,
        });
    }
    Ok(())
}

/// `Pi = exp[i pi (sum_k a_k^dag a_k + S_z + N/2)]`, diagonal `+-1`.
pub fn parity_operator(space: &HilbertSpace) -> SparseOperator {
    let diag: Vec<f64> = (0..space.dim())
        .map(|i| {
            let (iq, occ) = space.decode(i).expect("index in range");
            let excitations = iq.count_ones() as usize + occ.iter().sum::<usize>();
            if excitations % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    SparseOperator::from_real_diagonal(&diag)
}

/// Starting cutoff for the automatic policy:
/// `ceil(gamma^2 N^2 / 4 + 3 gamma N + 20)`.
pub fn fock_cutoff_estimate(p: &ModelParams) -> usize {
    let gamma = p.g.iter().fold(0.0f64, |m, g| m.max(g.abs())) / p.omega_r;
    let n = p.n_qubits as f64;
    (gamma * gamma * n * n / 4.0 + 6.0 * gamma * n / 2.0 + 20.0 - 1e-9).ceil() as usize
}

/// Lowest eigenvalues of the qubit Hamiltonian for classical field amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoResult {
    pub alpha: Vec<f64>,
    /// `curves[j][i]`: `j`-th lowest level at `alpha[i]`.
    pub curves: Vec<Vec<f64>>,
}

impl BoResult {
    /// Interior local minima of curve `j` as `(alpha, energy)`.
    pub fn local_minima(&self, j: usize) -> Vec<(f64, f64)> {
        let c = &self.curves[j];
        (1..c.len().saturating_sub(1))
            .filter(|&i| c[i] < c[i - 1] && c[i] <= c[i + 1])
            .map(|i| (self.alpha[i], c[i]))
            .collect()
    }
}

/// Uniform grid of 801 points spanning `+-(N gamma / 2 + 3)`.
pub fn default_alpha_grid(p: &ModelParams) -> Vec<f64> {
    let half = p.n_qubits as f64 / 2.0 * p.gamma().abs() + 3.0;
    let points = 801;
    (0..points)
        .map(|i| -half + 2.0 * half * i as f64 / (points - 1) as f64)
        .collect()
}

/// `<alpha|H|alpha> = w_r alpha^2 + sum_i w_q^i sigma_z^i/2 + 2 alpha sum_i g_i sigma_x^i/2 + D S_x^2`
/// for real `alpha`, diagonalized on the qubit register.
pub fn semiclassical_potentials(p: &ModelParams, alpha: &[f64], k: usize) -> Result<BoResult> {
    let n = p.n_qubits;
    let dq = 1usize << n;
    if k == 0 || k > dq {
        return Err(Error::InvalidParameter(format!("k must be in 1..={dq}, got {k}")));
    }
    let real = |op: &SparseOperator| -> DMatrix<f64> { op.to_dense().map(|z: Complex64| z.re) };
    let mut local = SparseOperator::zero(dq);
    let mut gx = SparseOperator::zero(dq);
    for i in 0..n {
        local = local.add(&register_pauli(n, i, Axis::Z)?.scale_real(0.5 * p.omega_q[i]))?;
        gx = gx.add(&register_pauli(n, i, Axis::X)?.scale_real(0.5 * p.g[i]))?;
    }
    let sx = register_collective_spin(n, Axis::X)?;
    let fixed = real(&local.add(&sx.multiply(&sx)?.scale_real(p.d))?);
    let gx = real(&gx);

    let mut curves = vec![Vec::with_capacity(alpha.len()); k];
    for &a in alpha {
        let h = &fixed + &gx * (2.0 * a);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (j, curve) in curves.iter_mut().enumerate() {
            curve.push(p.omega_r * a * a + ev[j]);
        }
    }
    Ok(BoResult {
        alpha: alpha.to_vec(),
        curves,
    })
}

/// Widths of the uniform distributions `[x(1-w), x(1+w)]` used for disorder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub omega_q_width: f64,
    pub g_width: f64,
    pub pair: PairCoupling,
}

impl DisorderSpec {
    /// Draws per-qubit values around the uniform parameters of `p`.
    pub fn realize(&self, p: &ModelParams, seed: u64) -> Result<ModelParams> {
        for w in [self.omega_q_width, self.g_width] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidParameter(format!("disorder width {w} outside [0, 1]")));
            }
        }
        let omega_q = p.omega_q_uniform()?;
        let g = p.g_uniform()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |x: f64, w: f64| -> f64 {
            if w == 0.0 {
                x
            } else {
                x * (1.0 + w * (2.0 * rng.random::<f64>() - 1.0))
            }
        };
        // Frequencies first, then couplings, so adding g-disorder leaves the
        // frequency draw of a given seed unchanged.
        let wq: Vec<f64> = (0..p.n_qubits).map(|_| draw(omega_q, self.omega_q_width)).collect();
        let gs: Vec<f64> = (0..p.n_qubits).map(|_| draw(g, self.g_width)).collect();
        let mut out = ModelParams::disordered(p.omega_r, wq, gs, p.delta, p.units)?;
        if self.pair == PairCoupling::Uniform {
            out.d = p.d;
        }
        Ok(out)
    }
}

/// Photon-space cutoff policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FockPolicy {
    Fixed(usize),
    Auto,
}

/// Fully specified single-mode problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdmSpec {
    pub params: ModelParams,
    pub pair: PairCoupling,
    pub fock: FockPolicy,
}

impl EdmSpec {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            pair: PairCoupling::PerQubit,
            fock: FockPolicy::Auto,
        }
    }

    pub fn with_fock(mut self, fock: FockPolicy) -> Self {
        self.fock = fock;
        self
    }

    pub fn space(&self, n_max: usize) -> Result<HilbertSpace> {
        HilbertSpace::new(self.params.n_qubits, n_max)
    }

    pub fn initial_cutoff(&self) -> usize {
        match self.fock {
            FockPolicy::Fixed(n) => n,
            FockPolicy::Auto => fock_cutoff_estimate(&self.params),
        }
    }

    pub fn hamiltonian(&self, n_max: usize) -> Result<SparseOperator> {
        let space = self.space(n_max)?;
        if self.params.is_uniform() {
            build_edm(&space, &self.params)
        } else {
            build_disordered(&space, &self.params, self.pair)
        }
    }
}
