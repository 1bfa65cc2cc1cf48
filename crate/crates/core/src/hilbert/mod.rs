//! Composite space of `N` qubits and one or more truncated boson modes.
//!
//! Basis ordering: qubits are the most significant factor, boson modes follow
//! in order, and the last mode varies fastest. With a single mode this is
//! `index = i_q * (n_max + 1) + n`. Qubit `k` occupies bit `k` of `i_q`
//! (qubit 0 is the least significant bit); bit value `b` is the `sigma_z`
//! eigenstate with eigenvalue `2b - 1`.

mod sparse;

pub use sparse::{SparseOperator, PRUNE_THRESHOLD};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpace {
    n_qubits: usize,
    cutoffs: Vec<usize>,
}

impl HilbertSpace {
    /// `n_qubits` qubits and one boson mode truncated at `fock_cutoff`.
    pub fn new(n_qubits: usize, fock_cutoff: usize) -> Result<Self> {
        Self::multimode(n_qubits, vec![fock_cutoff])
    }

    pub fn multimode(n_qubits: usize, cutoffs: Vec<usize>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidParameter("at least one qubit is required".into()));
        }
        if n_qubits > 24 {
            return Err(Error::InvalidParameter(format!(
                "{n_qubits} qubits exceed the supported register size"
            )));
        }
        if cutoffs.is_empty() {
            return Err(Error::InvalidParameter("at least one boson mode is required".into()));
        }
        Ok(Self { n_qubits, cutoffs })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Cutoff of the first boson mode.
    pub fn fock_cutoff(&self) -> usize {
        self.cutoffs[0]
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn boson_dim(&self) -> usize {
        self.cutoffs.iter().map(|c| c + 1).product()
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.boson_dim()
    }

    /// Composite index of qubit register `i_q` and per-mode occupations.
    pub fn encode(&self, i_q: usize, occupations: &[usize]) -> Result<usize> {
        if i_q >= self.qubit_dim() {
            return Err(Error::Index {
                index: i_q,
                limit: self.qubit_dim(),
            });
        }
        if occupations.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                left: occupations.len(),
                right: self.n_modes(),
            });
        }
        let mut idx = i_q;
        for (&n, &cut) in occupations.iter().zip(&self.cutoffs) {
            if n > cut {
                return Err(Error::Index {
                    index: n,
                    limit: cut + 1,
                });
            }
            idx = idx * (cut + 1) + n;
        }
        Ok(idx)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, index: usize) -> Result<(usize, Vec<usize>)> {
        if index >= self.dim() {
            return Err(Error::Index {
                index,
                limit: self.dim(),
            });
        }
        let mut rest = index;
        let mut occ = vec![0; self.n_modes()];
        for (slot, &cut) in occ.iter_mut().zip(&self.cutoffs).rev() {
            *slot = rest % (cut + 1);
            rest /= cut + 1;
        }
        Ok((rest, occ))
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Index {
                index: qubit,
                limit: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::Index {
                index: mode,
                limit: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Embeds an operator on the qubit register (dimension `2^N`).
    pub fn embed_qubit_operator(&self, op: &SparseOperator) -> Result<SparseOperator> {
        if op.dim() != self.qubit_dim() {
            return Err(Error::DimensionMismatch {
                left: op.dim(),
                right: self.qubit_dim(),
            });
        }
        Ok(op.kron(&SparseOperator::identity(self.boson_dim())))
    }

    /// Embeds an operator on a single boson mode.
    pub fn embed_mode_operator(&self, mode: usize, op: &SparseOperator) -> Result<SparseOperator> {
        self.check_mode(mode)?;
        if op.dim() != self.cutoffs[mode] + 1 {
            return Err(Error::DimensionMismatch {
                left: op.dim(),
                right: self.cutoffs[mode] + 1,
            });
        }
        let before: usize = self.qubit_dim()
            * self.cutoffs[..mode].iter().map(|c| c + 1).product::<usize>();
        let after: usize = self.cutoffs[mode + 1..].iter().map(|c| c + 1).product();
        Ok(SparseOperator::identity(before)
            .kron(op)
            .kron(&SparseOperator::identity(after)))
    }

    /// Embeds `A_q (x) B_mode`, a qubit operator times a single-mode operator.
    pub fn embed_product(
        &self,
        qubit_op: &SparseOperator,
        mode: usize,
        mode_op: &SparseOperator,
    ) -> Result<SparseOperator> {
        self.check_mode(mode)?;
        if qubit_op.dim() != self.qubit_dim() {
            return Err(Error::DimensionMismatch {
                left: qubit_op.dim(),
                right: self.qubit_dim(),
            });
        }
        if mode_op.dim() != self.cutoffs[mode] + 1 {
            return Err(Error::DimensionMismatch {
                left: mode_op.dim(),
                right: self.cutoffs[mode] + 1,
            });
        }
        let before: usize = self.cutoffs[..mode].iter().map(|c| c + 1).product();
        let after: usize = self.cutoffs[mode + 1..].iter().map(|c| c + 1).product();
        Ok(qubit_op
            .kron(&SparseOperator::identity(before))
            .kron(mode_op)
            .kron(&SparseOperator::identity(after)))
    }
}

/// Single-qubit Pauli matrix acting on qubit `qubit` of an `n_qubits` register.
pub fn register_pauli(n_qubits: usize, qubit: usize, axis: Axis) -> Result<SparseOperator> {
    if qubit >= n_qubits {
        return Err(Error::Index {
            index: qubit,
            limit: n_qubits,
        });
    }
    let dim = 1usize << n_qubits;
    let mask = 1usize << qubit;
    let triplets = (0..dim).map(|col| {
        let b = ((col & mask) != 0) as i32;
        let sign = f64::from(2 * b - 1);
        match axis {
            Axis::Z => (col, col, Complex64::new(sign, 0.0)),
            Axis::X => (col ^ mask, col, ONE),
            Axis::Y => (col ^ mask, col, Complex64::new(0.0, sign)),
        }
    });
    SparseOperator::from_triplets(dim, triplets)
}

/// `S_axis = 1/2 sum_i sigma_axis^i` on an `n_qubits` register.
pub fn register_collective_spin(n_qubits: usize, axis: Axis) -> Result<SparseOperator> {
    let dim = 1usize << n_qubits;
    let mut triplets = Vec::with_capacity(dim * n_qubits);
    for q in 0..n_qubits {
        triplets.extend(register_pauli(n_qubits, q, axis)?.scale_real(0.5).entries());
    }
    SparseOperator::from_triplets(dim, triplets)
}

/// Truncated annihilation operator on a single mode with cutoff `n_max`.
pub fn mode_annihilate(n_max: usize) -> SparseOperator {
    let triplets = (1..=n_max).map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0)));
    SparseOperator::from_triplets(n_max + 1, triplets).expect("indices in range")
}

pub fn mode_number(n_max: usize) -> SparseOperator {
    let diag: Vec<f64> = (0..=n_max).map(|n| n as f64).collect();
    SparseOperator::from_real_diagonal(&diag)
}

/// `a + a^dag` on a single mode.
pub fn mode_quadrature(n_max: usize) -> SparseOperator {
    let a = mode_annihilate(n_max);
    a.add(&a.adjoint()).expect("same dimension")
}

/// `sigma_axis` on `qubit`, identity on every other factor.
pub fn pauli(space: &HilbertSpace, qubit: usize, axis: Axis) -> Result<SparseOperator> {
    space.check_qubit(qubit)?;
    space.embed_qubit_operator(&register_pauli(space.n_qubits, qubit, axis)?)
}

pub fn collective_spin(space: &HilbertSpace, axis: Axis) -> Result<SparseOperator> {
    space.embed_qubit_operator(&register_collective_spin(space.n_qubits, axis)?)
}

/// `S^2 = S_x^2 + S_y^2 + S_z^2`.
pub fn total_spin_squared(space: &HilbertSpace) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zero(space.qubit_dim());
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let s = register_collective_spin(space.n_qubits, axis)?;
        acc = acc.add(&s.multiply(&s)?)?;
    }
    space.embed_qubit_operator(&acc)
}

/// Annihilation operator of the first boson mode.
pub fn boson_annihilate(space: &HilbertSpace) -> Result<SparseOperator> {
    boson_annihilate_mode(space, 0)
}

pub fn boson_annihilate_mode(space: &HilbertSpace, mode: usize) -> Result<SparseOperator> {
    space.check_mode(mode)?;
    space.embed_mode_operator(mode, &mode_annihilate(space.cutoffs[mode]))
}

/// `a^dag a` of the given mode, exactly diagonal `0..=n_max`.
pub fn boson_number_mode(space: &HilbertSpace, mode: usize) -> Result<SparseOperator> {
    space.check_mode(mode)?;
    space.embed_mode_operator(mode, &mode_number(space.cutoffs[mode]))
}

pub fn boson_number(space: &HilbertSpace) -> Result<SparseOperator> {
    boson_number_mode(space, 0)
}

pub fn identity(space: &HilbertSpace) -> SparseOperator {
    SparseOperator::identity(space.dim())
}
