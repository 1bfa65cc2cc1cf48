//! Ground-state observables, reduced density matrices and entropies.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{register_collective_spin, Axis, HilbertSpace, SparseOperator};
use crate::solve::SpectrumResult;

const NORM_TOL: f64 = 1e-10;
const EIGEN_CLIP: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-8;
/// Levels within this distance of `E_0` (energy units) form the ground manifold.
pub const MANIFOLD_TOL: f64 = 1e-6;

fn check_state(state: &[Complex64], dim: usize) -> Result<()> {
    if state.len() != dim {
        return Err(Error::DimensionMismatch {
            left: state.len(),
            right: dim,
        });
    }
    let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > NORM_TOL {
        return Err(Error::NonPhysical(format!("state norm^2 = {norm_sq}")));
    }
    Ok(())
}

/// `<psi|A|psi>`.
pub fn expectation(state: &[Complex64], a: &SparseOperator) -> Result<Complex64> {
    check_state(state, a.dim())?;
    let av = a.apply(state);
    Ok(state.iter().zip(&av).map(|(x, y)| x.conj() * y).sum())
}

/// Real expectation value of a Hermitian operator.
pub fn expectation_real(state: &[Complex64], a: &SparseOperator) -> Result<f64> {
    let z = expectation(state, a)?;
    if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
        return Err(Error::NonHermitian { defect: z.im.abs() });
    }
    Ok(z.re)
}

/// `rho_q = Tr_field |psi><psi|`, indexed by the qubit register index.
pub fn reduced_qubit_density(state: &[Complex64], space: &HilbertSpace) -> Result<DMatrix<Complex64>> {
    check_state(state, space.dim())?;
    let dq = space.qubit_dim();
    let b = space.boson_dim();
    let blocks: Vec<&[Complex64]> = state.chunks(b).collect();
    let rows: Vec<Vec<Complex64>> = (0..dq)
        .into_par_iter()
        .map(|i| {
            (0..dq)
                .map(|j| {
                    blocks[i]
                        .iter()
                        .zip(blocks[j])
                        .map(|(x, y)| x * y.conj())
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(dq, dq, |i, j| rows[i][j]))
}

/// `rho_field = Tr_qubits |psi><psi|` on the full boson register.
pub fn reduced_field_density(state: &[Complex64], space: &HilbertSpace) -> Result<DMatrix<Complex64>> {
    check_state(state, space.dim())?;
    let b = space.boson_dim();
    let blocks: Vec<&[Complex64]> = state.chunks(b).collect();
    let mut rho = DMatrix::zeros(b, b);
    for blk in blocks {
        for i in 0..b {
            if blk[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..b {
                rho[(i, j)] += blk[i] * blk[j].conj();
            }
        }
    }
    Ok(rho)
}

/// Traces out every qubit not in `keep`; bit `q` of the register index is qubit `q`.
/// The result is indexed by the kept qubits in ascending order, lowest as bit 0.
pub fn partial_trace_qubits(rho: &DMatrix<Complex64>, n_qubits: usize, keep: &[usize]) -> Result<DMatrix<Complex64>> {
    let dq = 1usize << n_qubits;
    if rho.nrows() != dq || rho.ncols() != dq {
        return Err(Error::DimensionMismatch {
            left: rho.nrows(),
            right: dq,
        });
    }
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep set is empty".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&q) = keep.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::Index {
            index: q,
            limit: n_qubits,
        });
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let scatter = |bits: usize, positions: &[usize]| -> usize {
        positions
            .iter()
            .enumerate()
            .filter(|(k, _)| bits >> k & 1 == 1)
            .map(|(_, &q)| 1 << q)
            .sum()
    };
    let dk = 1usize << keep.len();
    let de = 1usize << traced.len();
    let mut out = DMatrix::zeros(dk, dk);
    for a in 0..dk {
        let ia = scatter(a, &keep);
        for b in 0..dk {
            let ib = scatter(b, &keep);
            let mut s = Complex64::new(0.0, 0.0);
            for e in 0..de {
                let ie = scatter(e, &traced);
                s += rho[(ia | ie, ib | ie)];
            }
            out[(a, b)] = s;
        }
    }
    Ok(out)
}

/// `-Tr rho log2 rho` in bits.
pub fn entanglement_entropy(rho: &DMatrix<Complex64>) -> Result<f64> {
    let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum();
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::NonPhysical(format!("trace {trace} differs from 1")));
    }
    let eig = rho.clone().symmetric_eigenvalues();
    let mut s = 0.0;
    for &l in eig.iter() {
        if l < -EIGEN_CLIP {
            return Err(Error::NonPhysical(format!("negative eigenvalue {l}")));
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// `Tr rho^2`.
pub fn purity(rho: &DMatrix<Complex64>) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Product coherent state `prod_i [cos(theta/2)|1> + e^{i phi} sin(theta/2)|0>]`.
pub fn coherent_product_state(n_qubits: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let up = Complex64::new((theta / 2.0).cos(), 0.0);
    let down = Complex64::from_polar((theta / 2.0).sin(), phi);
    (0..1usize << n_qubits)
        .map(|iq| {
            let ones = iq.count_ones() as i32;
            up.powi(ones) * down.powi(n_qubits as i32 - ones)
        })
        .collect()
}

/// `<n|rho|n>` for one direction.
pub fn q_value(rho: &DMatrix<Complex64>, n_qubits: usize, theta: f64, phi: f64) -> f64 {
    let v = coherent_product_state(n_qubits, theta, phi);
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..v.len() {
            row += rho[(i, j)] * v[j];
        }
        s += v[i].conj() * row;
    }
    s.re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunctionMap {
    /// `theta_i = pi i / (n_theta - 1)`.
    pub theta: Vec<f64>,
    /// `phi_j = 2 pi j / n_phi`.
    pub phi: Vec<f64>,
    /// `values[i][j] = Q(theta_i, phi_j)`.
    pub values: Vec<Vec<f64>>,
}

impl QFunctionMap {
    /// `int Q dOmega` by the trapezoid rule in theta and the periodic rule in phi.
    pub fn integrate(&self) -> f64 {
        let nt = self.theta.len();
        let dt = std::f64::consts::PI / (nt - 1) as f64;
        let dp = 2.0 * std::f64::consts::PI / self.phi.len() as f64;
        let mut total = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            let w = if i == 0 || i == nt - 1 { 0.5 } else { 1.0 };
            total += w * self.theta[i].sin() * row.iter().sum::<f64>();
        }
        total * dt * dp
    }
}

pub fn spin_q_function(rho: &DMatrix<Complex64>, n_qubits: usize, n_theta: usize, n_phi: usize) -> Result<QFunctionMap> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidParameter("Q-function grid needs at least 2 points per axis".into()));
    }
    if rho.nrows() != 1 << n_qubits {
        return Err(Error::DimensionMismatch {
            left: rho.nrows(),
            right: 1 << n_qubits,
        });
    }
    let theta: Vec<f64> = (0..n_theta)
        .map(|i| std::f64::consts::PI * i as f64 / (n_theta - 1) as f64)
        .collect();
    let phi: Vec<f64> = (0..n_phi)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
        .collect();
    let values = theta
        .par_iter()
        .map(|&t| phi.iter().map(|&p| q_value(rho, n_qubits, t, p)).collect())
        .collect();
    Ok(QFunctionMap { theta, phi, values })
}

fn trace_product(rho: &DMatrix<Complex64>, op: &SparseOperator) -> f64 {
    op.entries().map(|(r, c, v)| v * rho[(c, r)]).sum::<Complex64>().re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateReport {
    pub energy: f64,
    pub gap: f64,
    /// Occupation of the first mode.
    pub n_photon: f64,
    pub sz: f64,
    pub sx: f64,
    pub sx2: f64,
    pub entropy_q: f64,
    pub entropy_1: f64,
    pub parity: f64,
    /// Number of computed levels within [`MANIFOLD_TOL`] of `E_0`.
    pub manifold_dim: usize,
    pub n_photon_avg: f64,
    pub sz_avg: f64,
    pub sx2_avg: f64,
}

struct StateObservables {
    n_photon: f64,
    sz: f64,
    sx: f64,
    sx2: f64,
    parity: f64,
    rho_q: DMatrix<Complex64>,
}

fn state_observables(state: &[Complex64], space: &HilbertSpace) -> Result<StateObservables> {
    let n = space.n_qubits();
    let b = space.boson_dim();
    let first_mode_stride: usize = space.cutoffs()[1..].iter().map(|c| c + 1).product();
    let mut n_photon = 0.0;
    let mut parity = 0.0;
    for (i, z) in state.iter().enumerate() {
        let p = z.norm_sqr();
        let iq = i / b;
        let ib = i % b;
        n_photon += p * (ib / first_mode_stride) as f64;
        let (_, occ) = space.decode(i)?;
        let exc = iq.count_ones() as usize + occ.iter().sum::<usize>();
        parity += if exc % 2 == 0 { p } else { -p };
    }
    let rho_q = reduced_qubit_density(state, space)?;
    let sz = (0..1usize << n)
        .map(|iq| rho_q[(iq, iq)].re * (iq.count_ones() as f64 - n as f64 / 2.0))
        .sum();
    let sx_op = register_collective_spin(n, Axis::X)?;
    let sx = trace_product(&rho_q, &sx_op);
    let sx2 = trace_product(&rho_q, &sx_op.multiply(&sx_op)?);
    Ok(StateObservables {
        n_photon,
        sz,
        sx,
        sx2,
        parity,
        rho_q,
    })
}

/// Assembles the report from the lowest eigenvector of `result`; averages over
/// the computed part of the ground manifold.
pub fn ground_report(result: &SpectrumResult, space: &HilbertSpace) -> Result<GroundStateReport> {
    if result.eigenvectors.is_empty() {
        return Err(Error::InvalidParameter("spectrum has no eigenvectors".into()));
    }
    let g = state_observables(&result.eigenvectors[0], space)?;
    let entropy_q = entanglement_entropy(&g.rho_q)?;
    let rho_1 = partial_trace_qubits(&g.rho_q, space.n_qubits(), &[0])?;
    let entropy_1 = entanglement_entropy(&rho_1)?;

    let e0 = result.eigenvalues[0];
    let manifold: Vec<usize> = (0..result.eigenvalues.len())
        .filter(|&i| result.eigenvalues[i] - e0 < MANIFOLD_TOL)
        .collect();
    let (mut n_avg, mut sz_avg, mut sx2_avg) = (0.0, 0.0, 0.0);
    for &i in &manifold {
        let o = if i == 0 {
            None
        } else {
            Some(state_observables(&result.eigenvectors[i], space)?)
        };
        let o = o.as_ref().unwrap_or(&g);
        n_avg += o.n_photon;
        sz_avg += o.sz;
        sx2_avg += o.sx2;
    }
    let m = manifold.len() as f64;
    Ok(GroundStateReport {
        energy: e0,
        gap: result.gap().unwrap_or(f64::NAN),
        n_photon: g.n_photon,
        sz: g.sz,
        sx: g.sx,
        sx2: g.sx2,
        entropy_q,
        entropy_1,
        parity: g.parity,
        manifold_dim: manifold.len(),
        n_photon_avg: n_avg / m,
        sz_avg: sz_avg / m,
        sx2_avg: sx2_avg / m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{boson_number, collective_spin, identity};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn basis_state(space: &HilbertSpace, iq: usize, n: usize) -> Vec<Complex64> {
        let mut v = vec![c(0.0); space.dim()];
        v[space.encode(iq, &[n]).unwrap()] = c(1.0);
        v
    }

    #[test]
    fn expectation_basics() {
        let s = HilbertSpace::new(2, 3).unwrap();
        let v = basis_state(&s, 0, 2);
        assert!((expectation(&v, &identity(&s)).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((expectation_real(&v, &boson_number(&s).unwrap()).unwrap() - 2.0).abs() < 1e-15);
        let sz = collective_spin(&s, Axis::Z).unwrap();
        assert!((expectation_real(&v, &sz).unwrap() + 1.0).abs() < 1e-15);
        let mut bad = v.clone();
        bad[0] = c(1.0);
        assert!(expectation(&bad, &sz).is_err());
        assert!(expectation(&v[..4], &sz).is_err());
    }

    #[test]
    fn product_state_gives_pure_qubit_density() {
        let s = HilbertSpace::new(3, 2).unwrap();
        let v = basis_state(&s, 0b101, 0);
        let rho = reduced_qubit_density(&v, &s).unwrap();
        assert!((purity(&rho) - 1.0).abs() < 1e-14);
        assert!((rho[(5, 5)].re - 1.0).abs() < 1e-15);
        assert!(entanglement_entropy(&rho).unwrap().abs() < 1e-12);
        let r1 = partial_trace_qubits(&rho, 3, &[1]).unwrap();
        assert!((r1[(0, 0)].re - 1.0).abs() < 1e-15);
        let r02 = partial_trace_qubits(&rho, 3, &[2, 0]).unwrap();
        assert!((r02[(3, 3)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_pair_single_qubit_is_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut rho = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            rho[(i, j)] = c(h * h);
        }
        let r1 = partial_trace_qubits(&rho, 2, &[0]).unwrap();
        assert!((r1[(0, 0)].re - 0.5).abs() < 1e-15 && r1[(0, 1)].norm() < 1e-15);
        assert!((entanglement_entropy(&r1).unwrap() - 1.0).abs() < 1e-12);
        assert!(entanglement_entropy(&rho).unwrap().abs() < 1e-12);
        assert!(partial_trace_qubits(&rho, 2, &[]).is_err());
        assert!(partial_trace_qubits(&rho, 2, &[2]).is_err());
    }

    #[test]
    fn partial_trace_of_correlated_state_respects_bit_order() {
        // |q1 q0> = (|01> + |11>)/sqrt2: qubit 0 is |1>, qubit 1 in |+>.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(0.0), c(h), c(0.0), c(h)];
        let rho = DMatrix::from_fn(4, 4, |i, j| psi[i] * psi[j].conj());
        let r0 = partial_trace_qubits(&rho, 2, &[0]).unwrap();
        assert!((r0[(1, 1)].re - 1.0).abs() < 1e-15);
        let r1 = partial_trace_qubits(&rho, 2, &[1]).unwrap();
        assert!((r1[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn maximally_mixed_entropies() {
        let one = DMatrix::from_diagonal_element(2, 2, c(0.5));
        assert!((entanglement_entropy(&one).unwrap() - 1.0).abs() < 1e-14);
        let n = 4;
        let all = DMatrix::from_diagonal_element(1 << n, 1 << n, c(1.0 / 16.0));
        assert!((entanglement_entropy(&all).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_nonphysical() {
        let bad_trace = DMatrix::from_diagonal_element(2, 2, c(0.6));
        assert!(entanglement_entropy(&bad_trace).is_err());
        let negative = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(entanglement_entropy(&negative).is_err());
    }

    #[test]
    fn q_function_poles_and_mixed() {
        let n = 3;
        let mut rho = DMatrix::zeros(8, 8);
        rho[(7, 7)] = c(1.0);
        assert!((q_value(&rho, n, 0.0, 1.3) - 1.0).abs() < 1e-14);
        assert!(q_value(&rho, n, std::f64::consts::PI, 0.2).abs() < 1e-14);
        let mixed = DMatrix::from_diagonal_element(2, 2, c(0.5));
        let map = spin_q_function(&mixed, 1, 9, 8).unwrap();
        assert!(map.values.iter().flatten().all(|q| (q - 0.5).abs() < 1e-14));
        assert!(spin_q_function(&mixed, 1, 1, 8).is_err());
    }

    #[test]
    fn coherent_state_x_direction() {
        // theta = pi/2, phi = 0 is the +1 eigenstate of sigma_x.
        let v = coherent_product_state(1, std::f64::consts::FRAC_PI_2, 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - c(h)).norm() < 1e-15 && (v[1] - c(h)).norm() < 1e-15);
    }
}
