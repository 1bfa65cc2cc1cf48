//! Compressed sparse row storage for complex square operators.
//!
//! Entries are kept in canonical order: rows ascending, columns ascending
//! within a row, duplicates merged and values with modulus below
//! [`PRUNE_THRESHOLD`] removed. Two operators built along different routes
//! therefore compare equal entry by entry whenever their values agree.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Values with modulus below this are dropped after every arithmetic step.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Rows per rayon task in [`SparseOperator::matvec`].
const MATVEC_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![Complex64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut op = Self::zero(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            if v.norm() >= PRUNE_THRESHOLD {
                op.cols.push(i);
                op.vals.push(v);
            }
            op.row_ptr[i + 1] = op.cols.len();
        }
        op
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds an operator from unordered `(row, col, value)` triplets.
    /// Duplicate positions are summed.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut t: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            if r >= dim {
                return Err(Error::Index { index: r, limit: dim });
            }
            if c >= dim {
                return Err(Error::Index { index: c, limit: dim });
            }
        }
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut op = Self::zero(dim);
        let mut iter = t.into_iter().peekable();
        let mut row = 0;
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            while row < r {
                row += 1;
                op.row_ptr[row] = op.cols.len();
            }
            if v.norm() >= PRUNE_THRESHOLD {
                op.cols.push(c);
                op.vals.push(v);
            }
        }
        while row < dim {
            row += 1;
            op.row_ptr[row] = op.cols.len();
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Canonical row-major entry list.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row >= self.dim {
            return ZERO;
        }
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// True when every stored value has a vanishing imaginary part.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// `self + other`, merged row by row.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.dim);
        out.cols.reserve(self.nnz() + other.nnz());
        out.vals.reserve(self.nnz() + other.nnz());
        for r in 0..self.dim {
            let (mut a, a_end) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut b, b_end) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while a < a_end || b < b_end {
                let (c, v) = if b >= b_end || (a < a_end && self.cols[a] < other.cols[b]) {
                    a += 1;
                    (self.cols[a - 1], self.vals[a - 1])
                } else if a >= a_end || other.cols[b] < self.cols[a] {
                    b += 1;
                    (other.cols[b - 1], other.vals[b - 1])
                } else {
                    a += 1;
                    b += 1;
                    (self.cols[a - 1], self.vals[a - 1] + other.vals[b - 1])
                };
                if v.norm() >= PRUNE_THRESHOLD {
                    out.cols.push(c);
                    out.vals.push(v);
                }
            }
            out.row_ptr[r + 1] = out.cols.len();
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (r, c, v * factor));
        Self::from_triplets(self.dim, triplets).expect("indices already validated")
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Sparse product `self * other` with a dense row accumulator.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let n = self.dim;
        let mut out = Self::zero(n);
        let mut acc = vec![ZERO; n];
        let mut touched = vec![false; n];
        let mut pattern: Vec<usize> = Vec::new();
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                let v = acc[c];
                if v.norm() >= PRUNE_THRESHOLD {
                    out.cols.push(c);
                    out.vals.push(v);
                }
                acc[c] = ZERO;
                touched[c] = false;
            }
            pattern.clear();
            out.row_ptr[r + 1] = out.cols.len();
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v.conj()));
        Self::from_triplets(self.dim, triplets).expect("indices already validated")
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    /// Kronecker product with `self` as the more significant factor.
    pub fn kron(&self, other: &Self) -> Self {
        let m = other.dim;
        let dim = self.dim * m;
        let mut out = Self::zero(dim);
        out.cols.reserve(self.nnz() * other.nnz());
        out.vals.reserve(self.nnz() * other.nnz());
        for ra in 0..self.dim {
            for rb in 0..m {
                for (ca, va) in self.row(ra) {
                    for (cb, vb) in other.row(rb) {
                        let v = va * vb;
                        if v.norm() >= PRUNE_THRESHOLD {
                            out.cols.push(ca * m + cb);
                            out.vals.push(v);
                        }
                    }
                }
                out.row_ptr[ra * m + rb + 1] = out.cols.len();
            }
        }
        out
    }

    /// Largest entry of `|A - A^dag|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Largest entrywise `|A - B|`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .sub(other)?
            .vals
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }

    /// `y = A x`, parallel over row blocks.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_chunks_mut(MATVEC_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let base = chunk * MATVEC_CHUNK;
                for (i, yi) in out.iter_mut().enumerate() {
                    let r = base + i;
                    let mut s = ZERO;
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        s += self.vals[k] * x[self.cols[k]];
                    }
                    *yi = s;
                }
            });
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// Gershgorin lower bound on the spectrum of a hermitian operator.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                let mut centre = 0.0;
                let mut radius = 0.0;
                for (c, v) in self.row(r) {
                    if c == r {
                        centre = v.re;
                    } else {
                        radius += v.norm();
                    }
                }
                centre - radius
            })
            .fold(f64::INFINITY, f64::min)
            .min(0.0)
    }

    /// Largest Gershgorin radius plus centre, an upper bound on the norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Real part of the stored values as a CSR triple, for the real solver path.
    pub(crate) fn real_csr(&self) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        (
            self.row_ptr.clone(),
            self.cols.clone(),
            self.vals.iter().map(|v| v.re).collect(),
        )
    }

    pub(crate) fn csr(&self) -> (&[usize], &[usize], &[Complex64]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let n = m.nrows();
        let triplets = (0..n).flat_map(|r| (0..n).map(move |c| (r, c, m[(r, c)])));
        Self::from_triplets(n, triplets)
    }

    /// Approximate bytes held by the CSR arrays.
    pub fn memory_bytes(&self) -> u64 {
        (self.row_ptr.len() * 8 + self.cols.len() * 8 + self.vals.len() * 16) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample() -> SparseOperator {
        SparseOperator::from_triplets(
            3,
            vec![
                (2, 0, c(1.0, 2.0)),
                (0, 1, c(0.5, 0.0)),
                (0, 1, c(0.25, 0.0)),
                (1, 1, c(-3.0, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn triplets_are_canonicalised() {
        let a = sample();
        let e: Vec<_> = a.entries().collect();
        assert_eq!(
            e,
            vec![(0, 1, c(0.75, 0.0)), (1, 1, c(-3.0, 0.0)), (2, 0, c(1.0, 2.0))]
        );
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        let err = SparseOperator::from_triplets(2, vec![(0, 2, c(1.0, 0.0))]).unwrap_err();
        assert_eq!(err, Error::Index { index: 2, limit: 2 });
    }

    #[test]
    fn a_minus_a_is_empty() {
        let a = sample();
        let z = a.add(&a.scale_real(-1.0)).unwrap();
        assert_eq!(z.nnz(), 0);
    }

    #[test]
    fn double_adjoint_is_identity_map() {
        let a = sample();
        assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn dimension_mismatch_is_structural_error() {
        let a = SparseOperator::identity(2);
        let b = SparseOperator::identity(3);
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.multiply(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn multiply_matches_dense() {
        let a = sample();
        let b = a.adjoint().add(&SparseOperator::identity(3)).unwrap();
        let sparse = a.multiply(&b).unwrap().to_dense();
        let dense = a.to_dense() * b.to_dense();
        assert!((sparse - dense).norm() < 1e-14);
    }

    #[test]
    fn kron_matches_index_convention() {
        let a = SparseOperator::from_triplets(2, vec![(0, 1, c(2.0, 0.0))]).unwrap();
        let b = SparseOperator::from_triplets(3, vec![(2, 1, c(0.0, 1.0))]).unwrap();
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        let e: Vec<_> = k.entries().collect();
        assert_eq!(e, vec![(2, 4, c(0.0, 2.0))]);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let a = sample();
        assert!(a.hermitian_defect() > 0.5);
        let h = a.add(&a.adjoint()).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = sample();
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.5)];
        let y = a.apply(&x);
        let d = a.to_dense() * nalgebra::DVector::from_vec(x);
        for i in 0..3 {
            assert!((y[i] - d[i]).norm() < 1e-15);
        }
    }
}
