//! Thick-restart block Davidson for the lowest eigenpairs of a Hermitian CSR
//! operator. Without a preconditioner the search space is a block Krylov space.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Preconditioner;

const CHUNK: usize = 4096;

pub(crate) trait Field: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn random(rng: &mut ChaCha8Rng) -> Self;
    fn precondition(p: &dyn Preconditioner, theta: f64, r: &mut [Self]);
}

impl Field for f64 {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        rng.random::<f64>() - 0.5
    }

    fn precondition(p: &dyn Preconditioner, theta: f64, r: &mut [Self]) {
        p.apply_real(theta, r);
    }
}

impl Field for Complex64 {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }

    fn precondition(p: &dyn Preconditioner, theta: f64, r: &mut [Self]) {
        p.apply_complex(theta, r);
    }
}

/// CSR matrix minus a scalar shift.
pub(crate) struct ShiftedCsr<'a, T> {
    pub row_ptr: &'a [usize],
    pub cols: &'a [usize],
    pub vals: &'a [T],
    pub shift: f64,
}

impl<T: Field> ShiftedCsr<'_, T> {
    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let shift = T::from_real(self.shift);
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let base = c * CHUNK;
            for (k, yi) in out.iter_mut().enumerate() {
                let r = base + k;
                let mut acc = T::zero();
                for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[idx] * x[self.cols[idx]];
                }
                *yi = acc - shift * x[r];
            }
        });
    }
}

pub(crate) struct KrylovOptions {
    pub k: usize,
    pub tol: f64,
    pub max_matvecs: usize,
    pub seed: u64,
}

pub(crate) struct KrylovOutcome<T> {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<T>>,
    pub converged: bool,
    pub matvecs: usize,
}

/// Column-major block of vectors of length `n`.
struct Basis<T> {
    n: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Basis<T> {
    fn with_capacity(n: usize, cap: usize) -> Self {
        Self {
            n,
            cols: 0,
            data: Vec::with_capacity(n * cap),
        }
    }

    fn push(&mut self, x: &[T]) {
        self.data.extend_from_slice(x);
        self.cols += 1;
    }

    /// `V^H x`, reduced over fixed row chunks in order.
    fn project(&self, x: &[T]) -> Vec<T> {
        let (n, m) = (self.n, self.cols);
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let partial: Vec<Vec<T>> = starts
            .par_iter()
            .map(|&s| {
                let e = (s + CHUNK).min(n);
                (0..m)
                    .map(|j| {
                        let v = &self.data[j * n + s..j * n + e];
                        v.iter()
                            .zip(&x[s..e])
                            .fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
                    })
                    .collect()
            })
            .collect();
        let mut out = vec![T::zero(); m];
        for p in partial {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v;
            }
        }
        out
    }

    /// `x -= V c`.
    fn subtract(&self, c: &[T], x: &mut [T]) {
        let n = self.n;
        x.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, xc)| {
            let s = ci * CHUNK;
            for (j, &cj) in c.iter().enumerate() {
                let v = &self.data[j * n + s..j * n + s + xc.len()];
                for (xi, vi) in xc.iter_mut().zip(v) {
                    *xi -= cj * *vi;
                }
            }
        });
    }

    /// Column `c` of the result is `V s[:, c]` for the first `q` columns of `s`.
    fn combine(&self, s: &DMatrix<T>, q: usize) -> Vec<Vec<T>> {
        let n = self.n;
        (0..q)
            .map(|c| {
                let mut out = vec![T::zero(); n];
                out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, oc)| {
                    let st = ci * CHUNK;
                    for j in 0..self.cols {
                        let w = s[(j, c)];
                        let v = &self.data[j * n + st..j * n + st + oc.len()];
                        for (o, vi) in oc.iter_mut().zip(v) {
                            *o += w * *vi;
                        }
                    }
                });
                out
            })
            .collect()
    }

    fn reset(&mut self, vecs: &[Vec<T>]) {
        self.data.clear();
        self.cols = 0;
        for v in vecs {
            self.push(v);
        }
    }
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    let partial: Vec<T> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).fold(T::zero(), |s, (u, v)| s + u.conjugate() * *v))
        .collect();
    partial.into_iter().fold(T::zero(), |s, x| s + x)
}

fn norm<T: Field>(a: &[T]) -> f64 {
    dot(a, a).real().sqrt()
}

/// Two passes of block Gram-Schmidt against `basis`, then normalization.
/// Returns `false` when nothing independent is left.
fn orthonormalize<T: Field>(basis: &Basis<T>, x: &mut [T]) -> bool {
    let before = norm(x);
    if before == 0.0 || !before.is_finite() {
        return false;
    }
    for _ in 0..2 {
        let c = basis.project(x);
        basis.subtract(&c, x);
    }
    let after = norm(x);
    if after <= 1e-10 * before {
        return false;
    }
    let inv = T::from_real(1.0 / after);
    x.par_iter_mut().for_each(|xi| *xi *= inv);
    true
}

struct Search<'a, T> {
    op: &'a ShiftedCsr<'a, T>,
    v: Basis<T>,
    w: Basis<T>,
    /// `V^H (H - shift) V`.
    t: DMatrix<T>,
    matvecs: usize,
}

impl<T: Field> Search<'_, T> {
    fn push(&mut self, x: Vec<T>) {
        let mut y = vec![T::zero(); x.len()];
        self.op.apply(&x, &mut y);
        self.matvecs += 1;
        self.v.push(&x);
        let col = self.v.project(&y);
        let j = self.v.cols - 1;
        for (i, h) in col.into_iter().enumerate() {
            self.t[(i, j)] = h;
            self.t[(j, i)] = h.conjugate();
        }
        self.t[(j, j)] = T::from_real(self.t[(j, j)].real());
        self.w.push(&y);
    }
}

pub(crate) fn lowest<T: Field>(
    op: &ShiftedCsr<'_, T>,
    opts: &KrylovOptions,
    precond: Option<&dyn Preconditioner>,
) -> KrylovOutcome<T> {
    let n = op.dim();
    let k = opts.k;
    let p = k.clamp(2, 16);
    let keep = (k + 2 * p).min(n);
    let max_basis = (keep + (4 * p).max(40)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut s = Search {
        op,
        v: Basis::with_capacity(n, max_basis),
        w: Basis::with_capacity(n, max_basis),
        t: DMatrix::zeros(max_basis, max_basis),
        matvecs: 0,
    };

    let random = |rng: &mut ChaCha8Rng| -> Vec<T> { (0..n).map(|_| T::random(rng)).collect() };
    if let Some(pc) = precond {
        for v in pc.start_vectors((k + p).min(n)) {
            let mut x: Vec<T> = v.into_iter().map(T::from_real).collect();
            if x.len() == n && orthonormalize(&s.v, &mut x) {
                s.push(x);
            }
        }
    }
    // Random vectors cover symmetry sectors the guesses may miss.
    let start = (s.v.cols + p).max(k + p).min(n);
    while s.v.cols < start {
        let mut x = random(&mut rng);
        if orthonormalize(&s.v, &mut x) {
            s.push(x);
        }
    }

    loop {
        let m = s.v.cols;
        let eig = s.t.view((0, 0), (m, m)).into_owned().symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let nres = keep.min(m);
        let mut coeffs = DMatrix::<T>::zeros(m, nres);
        let mut theta = Vec::with_capacity(nres);
        for (c, &i) in order.iter().take(nres).enumerate() {
            coeffs.set_column(c, &eig.eigenvectors.column(i));
            theta.push(eig.eigenvalues[i]);
        }
        let x = s.v.combine(&coeffs, nres);
        let hx = s.w.combine(&coeffs, nres);
        let residuals: Vec<Vec<T>> = (0..nres)
            .map(|j| {
                let th = T::from_real(theta[j]);
                hx[j].iter().zip(&x[j]).map(|(a, b)| *a - th * *b).collect()
            })
            .collect();
        let res_norm: Vec<f64> = residuals.iter().map(|r| norm(r)).collect();
        let threshold = |j: usize| opts.tol * (theta[j] + op.shift).abs().max(1.0);
        let converged = (0..k).all(|j| res_norm[j] <= threshold(j));

        if converged || m == n || s.matvecs >= opts.max_matvecs {
            return KrylovOutcome {
                values: theta[..k].iter().map(|t| t + op.shift).collect(),
                vectors: x.into_iter().take(k).collect(),
                converged: converged || m == n,
                matvecs: s.matvecs,
            };
        }

        // Unconverged wanted pairs first, then guard pairs above the window.
        let mut candidates: Vec<usize> = (0..k).filter(|&j| res_norm[j] > threshold(j)).collect();
        candidates.extend((k..nres).filter(|&j| res_norm[j] > threshold(j)));
        candidates.truncate(p);

        let corrections: Vec<(Vec<T>, Vec<T>)> = candidates
            .iter()
            .map(|&j| {
                let raw = residuals[j].clone();
                let Some(pc) = precond else {
                    return (raw.clone(), raw);
                };
                // Olsen: t = M^-1 r - eps M^-1 x keeps the update away from x.
                let th = theta[j] + op.shift;
                let mut t = raw.clone();
                T::precondition(pc, th, &mut t);
                let mut mx = x[j].clone();
                T::precondition(pc, th, &mut mx);
                let den = dot(&x[j], &mx);
                if den.modulus() > 0.0 {
                    let eps = dot(&x[j], &t) / den;
                    t.par_iter_mut().zip(&mx).for_each(|(a, b)| *a -= eps * *b);
                }
                (t, raw)
            })
            .collect();

        if m + candidates.len() > max_basis {
            s.v.reset(&x);
            s.w.reset(&hx);
            s.t.fill(T::zero());
            for (i, th) in theta.iter().enumerate() {
                s.t[(i, i)] = T::from_real(*th);
            }
        }

        let mut added = 0;
        for (mut t, mut raw) in corrections {
            if orthonormalize(&s.v, &mut t) {
                s.push(t);
                added += 1;
            } else if orthonormalize(&s.v, &mut raw) {
                s.push(raw);
                added += 1;
            }
        }
        while added == 0 && s.v.cols < n {
            let mut r = random(&mut rng);
            if orthonormalize(&s.v, &mut r) {
                s.push(r);
                added += 1;
            }
        }
    }
}
