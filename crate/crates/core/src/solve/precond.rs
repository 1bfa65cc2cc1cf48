//! Preconditioner built from the part of the Hamiltonian that is diagonal in
//! the `sigma_x` product basis: displaced oscillators, one set per qubit
//! configuration. The `sigma_z` terms enter only through a coarse space
//! spanned by the oscillator ground state of every configuration, where the
//! problem is solved exactly.
//!
//! The first mode is handled with tridiagonal solves, any further modes
//! through their eigenbases.

use std::collections::HashMap;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use rayon::prelude::*;

use super::Preconditioner;
use crate::error::{Error, Result};
use crate::model::{PairCoupling, TwoModeParams};
use crate::params::ModelParams;

/// Largest number of qubit configurations given a coarse space.
const MAX_COARSE: usize = 512;

trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {}
impl<T: ComplexField<RealField = f64> + Copy + Send + Sync> Scalar for T {}

/// `omega n` on the diagonal, `c sqrt(n)` beside it.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    ground_value: f64,
    ground: Vec<f64>,
}

struct ModeBlock {
    /// Ascending.
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    vectors: DMatrix<f64>,
}

/// Coarse matrix in its eigenbasis.
struct Coarse {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

struct ConfigClass {
    constant: f64,
    first: Tridiagonal,
    rest: Vec<ModeBlock>,
}

impl ConfigClass {
    fn ground_energy(&self) -> f64 {
        self.constant + self.first.ground_value + self.rest.iter().map(|m| m.eigenvalues[0]).sum::<f64>()
    }
}

/// `(H0 - theta)^{-1}` with `H0 = sum_k w_k a_k^dag a_k + sum_k c_k(s) (a_k + a_k^dag) + e(s)`
/// for each `sigma_x` configuration `s`, corrected on the coarse space.
pub struct PolaronPreconditioner {
    n_qubits: usize,
    mode_dims: Vec<usize>,
    boson_dim: usize,
    class_of: Vec<usize>,
    classes: Vec<ConfigClass>,
    coarse: Option<Coarse>,
}

fn oscillator_bands(omega: f64, coupling: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = (0..=n_max).map(|n| omega * n as f64).collect();
    let off = (1..=n_max).map(|n| coupling * (n as f64).sqrt()).collect();
    (diag, off)
}

fn guarded_inverse(lambda: f64, theta: f64, eps: f64) -> f64 {
    let mut den = lambda - theta;
    if den.abs() < eps {
        den = eps.copysign(den);
    }
    1.0 / den
}

/// Solves `(T - shift) x = b` in place by Gaussian elimination with partial
/// pivoting. Zero pivots are replaced by `eps`.
fn solve_tridiagonal<T: Scalar>(diag: &[f64], off: &[f64], shift: f64, eps: f64, b: &mut [T]) {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
    let mut du: Vec<f64> = off.to_vec();
    let dl: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let pivot = |x: f64| if x.abs() < eps { eps.copysign(x) } else { x };
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = pivot(d[i]);
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            let bi = b[i];
            b[i + 1] -= bi * T::from_real(fact);
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let (bi, bn) = (b[i], b[i + 1]);
            b[i] = bn;
            b[i + 1] = bi - bn * T::from_real(fact);
        }
    }
    d[n - 1] = pivot(d[n - 1]);
    b[n - 1] *= T::from_real(1.0 / d[n - 1]);
    if n > 1 {
        let (bn, bl) = (b[n - 1], b[n - 2]);
        b[n - 2] = (bl - bn * T::from_real(du[n - 2])) * T::from_real(1.0 / d[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        let v = b[i] - b[i + 1] * T::from_real(du[i]) - b[i + 2] * T::from_real(du2[i]);
        b[i] = v * T::from_real(1.0 / d[i]);
    }
}

/// Number of eigenvalues below `x` (Sturm sequence).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        q = if i == 0 { a - x } else { a - x - off[i - 1] * off[i - 1] / q };
        if q == 0.0 {
            q = -f64::EPSILON * (a.abs() + x.abs()).max(1e-300);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenpair by bisection and inverse iteration.
fn ground_pair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let n = diag.len();
    let radius = |i: usize| {
        (if i > 0 { off[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { off[i].abs() } else { 0.0 })
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut v = vec![1.0; n];
    for _ in 0..3 {
        solve_tridiagonal(diag, off, lo, 1e-14 * scale, &mut v);
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut rq = 0.0;
    for i in 0..n {
        rq += diag[i] * v[i] * v[i];
        if i + 1 < n {
            rq += 2.0 * off[i] * v[i] * v[i + 1];
        }
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (rq, v)
}

fn displaced_oscillator(omega: f64, coupling: f64, n_max: usize) -> ModeBlock {
    let d = n_max + 1;
    let (diag, off) = oscillator_bands(omega, coupling, n_max);
    let t = DMatrix::from_fn(d, d, |r, c| {
        if r == c {
            diag[r]
        } else if r + 1 == c {
            off[r]
        } else if c + 1 == r {
            off[c]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    ModeBlock {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the component along unit vector `u`, returning it.
fn project_out<T: Scalar>(u: &[f64], x: &mut [T]) -> T {
    let c = u.iter().zip(x.iter()).fold(T::zero(), |acc, (a, b)| acc + *b * T::from_real(*a));
    for (xi, a) in x.iter_mut().zip(u) {
        *xi -= c * T::from_real(*a);
    }
    c
}

impl PolaronPreconditioner {
    /// `terms(s)` returns the per-mode couplings and the constant for the
    /// configuration with `sigma_x^i = s[i]`; `flip[i]` is the coefficient of `sigma_z^i`.
    pub fn new<F>(n_qubits: usize, cutoffs: &[usize], omega_modes: &[f64], flip: &[f64], terms: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> (Vec<f64>, f64),
    {
        if cutoffs.len() != omega_modes.len() || cutoffs.is_empty() {
            return Err(Error::DimensionMismatch {
                left: cutoffs.len(),
                right: omega_modes.len(),
            });
        }
        if flip.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                left: flip.len(),
                right: n_qubits,
            });
        }
        let mut keys: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut specs: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut class_of = Vec::with_capacity(1 << n_qubits);
        for config in 0..1usize << n_qubits {
            // Bit 0 is the +1 eigenstate of sigma_x after the Hadamard transform.
            let s: Vec<f64> = (0..n_qubits)
                .map(|q| if config >> q & 1 == 0 { 1.0 } else { -1.0 })
                .collect();
            let (c, e) = terms(&s);
            let key: Vec<u64> = c.iter().chain(std::iter::once(&e)).map(|x| x.to_bits()).collect();
            let next = specs.len();
            let id = *keys.entry(key).or_insert_with(|| {
                specs.push((c, e));
                next
            });
            class_of.push(id);
        }
        let classes: Vec<ConfigClass> = specs
            .par_iter()
            .map(|(c, e)| {
                let (diag, off) = oscillator_bands(omega_modes[0], c[0], cutoffs[0]);
                let (ground_value, ground) = ground_pair(&diag, &off);
                ConfigClass {
                    constant: *e,
                    first: Tridiagonal {
                        diag,
                        off,
                        ground_value,
                        ground,
                    },
                    rest: (1..c.len())
                        .map(|k| displaced_oscillator(omega_modes[k], c[k], cutoffs[k]))
                        .collect(),
                }
            })
            .collect();
        let mode_dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let boson_dim: usize = mode_dims.iter().product();
        let inner = boson_dim / mode_dims[0];
        let coarse = (class_of.len() <= MAX_COARSE).then(|| coarse_matrix(&class_of, &classes, flip, inner));
        Ok(Self {
            n_qubits,
            boson_dim,
            mode_dims,
            class_of,
            classes,
            coarse,
        })
    }

    /// Uniform or disordered single-mode model.
    pub fn for_edm(p: &ModelParams, pair: PairCoupling, n_max: usize) -> Result<Self> {
        let uniform = p.is_uniform();
        let omega_r = p.omega_r;
        let g = p.g.clone();
        let (d, delta) = (p.d, p.delta);
        let flip: Vec<f64> = p.omega_q.iter().map(|w| w / 2.0).collect();
        Self::new(p.n_qubits, &[n_max], &[omega_r], &flip, move |s| {
            let m: f64 = s.iter().sum::<f64>() / 2.0;
            let c: f64 = g.iter().zip(s).map(|(gi, si)| gi * si / 2.0).sum();
            let e = if uniform || pair == PairCoupling::Uniform {
                d * m * m
            } else {
                c * c / omega_r + delta * m * m
            };
            (vec![c], e)
        })
    }

    pub fn for_two_mode(p: &TwoModeParams, cutoffs: [usize; 2]) -> Result<Self> {
        let g = p.g.clone();
        let d = p.d;
        let flip: Vec<f64> = p.omega_q.iter().map(|w| w / 2.0).collect();
        Self::new(p.n_qubits(), &cutoffs, &p.omega_modes, &flip, move |s| {
            let m: f64 = s.iter().sum::<f64>() / 2.0;
            let c = (0..2)
                .map(|k| g.iter().zip(s).map(|(gi, si)| gi[k] * si / 2.0).sum())
                .collect();
            (c, d * m * m)
        })
    }

    /// In-place normalized Walsh-Hadamard transform over the qubit index.
    fn hadamard<T: Scalar>(&self, r: &mut [T]) {
        let b = self.boson_dim;
        let h = T::from_real(std::f64::consts::FRAC_1_SQRT_2);
        for q in 0..self.n_qubits {
            let half = (1usize << q) * b;
            r.par_chunks_mut(2 * half).for_each(|chunk| {
                let (lo, hi) = chunk.split_at_mut(half);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, c) = (*x, *y);
                    *x = (a + c) * h;
                    *y = (a - c) * h;
                }
            });
        }
    }

    /// Product of the dimensions of all modes after the first.
    fn inner(&self) -> usize {
        self.boson_dim / self.mode_dims[0]
    }

    /// Applies `U^T` (`transpose = true`) or `U` along every mode axis but the first.
    fn transform_rest<T: Scalar>(&self, class: &ConfigClass, x: &mut [T], transpose: bool) {
        let mut inner = self.inner();
        let mut buf = Vec::new();
        for (k, block) in class.rest.iter().enumerate() {
            let dk = self.mode_dims[k + 1];
            inner /= dk;
            let outer = self.boson_dim / (dk * inner);
            let u = &block.vectors;
            buf.resize(dk, T::zero());
            for o in 0..outer {
                for i in 0..inner {
                    let at = |j: usize| o * dk * inner + j * inner + i;
                    for (row, out) in buf.iter_mut().enumerate() {
                        let mut s = T::zero();
                        for j in 0..dk {
                            let w = if transpose { u[(j, row)] } else { u[(row, j)] };
                            s += x[at(j)] * T::from_real(w);
                        }
                        *out = s;
                    }
                    for (j, v) in buf.iter().enumerate() {
                        x[at(j)] = *v;
                    }
                }
            }
        }
    }

    /// Sum of the eigenvalues of the later modes for combined index `j`.
    fn rest_energy(&self, class: &ConfigClass, j: usize) -> f64 {
        let mut rest = j;
        let mut e = 0.0;
        for (k, block) in class.rest.iter().enumerate().rev() {
            let dk = self.mode_dims[k + 1];
            e += block.eigenvalues[rest % dk];
            rest /= dk;
        }
        e
    }

    /// Solves on every first-mode fiber of a block whose later modes are in
    /// their eigenbases. Returns the ground coefficient removed from fiber 0.
    fn solve_block<T: Scalar>(&self, class: &ConfigClass, theta: f64, eps: f64, block: &mut [T]) -> T {
        let inner = self.inner();
        let u0 = &class.first.ground;
        let mut fiber = vec![T::zero(); self.mode_dims[0]];
        let mut coefficient = T::zero();
        for j in 0..inner {
            for (i, f) in fiber.iter_mut().enumerate() {
                *f = block[i * inner + j];
            }
            let coarse = j == 0 && self.coarse.is_some();
            if coarse {
                coefficient = project_out(u0, &mut fiber);
            }
            let shift = theta - class.constant - self.rest_energy(class, j);
            solve_tridiagonal(&class.first.diag, &class.first.off, shift, eps, &mut fiber);
            if coarse {
                project_out(u0, &mut fiber);
            }
            for (i, f) in fiber.iter().enumerate() {
                block[i * inner + j] = *f;
            }
        }
        coefficient
    }

    fn apply<T: Scalar>(&self, theta: f64, r: &mut [T]) {
        let eps = 1e-8 * theta.abs().max(1.0);
        let b = self.boson_dim;
        let inner = self.inner();
        self.hadamard(r);
        let coefficients: Vec<T> = r
            .par_chunks_mut(b)
            .enumerate()
            .map(|(config, block)| {
                let class = &self.classes[self.class_of[config]];
                self.transform_rest(class, block, true);
                self.solve_block(class, theta, eps, block)
            })
            .collect();
        let solved: Option<Vec<T>> = self.coarse.as_ref().map(|c| {
            let proj: Vec<T> = (0..c.values.len())
                .map(|j| {
                    let s = coefficients
                        .iter()
                        .zip(c.vectors.column(j).iter())
                        .fold(T::zero(), |acc, (x, w)| acc + *x * T::from_real(*w));
                    s * T::from_real(guarded_inverse(c.values[j], theta, eps))
                })
                .collect();
            (0..c.values.len())
                .map(|i| {
                    proj.iter()
                        .enumerate()
                        .fold(T::zero(), |acc, (j, pj)| acc + *pj * T::from_real(c.vectors[(i, j)]))
                })
                .collect()
        });
        r.par_chunks_mut(b).enumerate().for_each(|(config, block)| {
            let class = &self.classes[self.class_of[config]];
            if let Some(y) = &solved {
                for (i, u) in class.first.ground.iter().enumerate() {
                    block[i * inner] += y[config] * T::from_real(*u);
                }
            }
            self.transform_rest(class, block, false);
        });
        self.hadamard(r);
    }

    /// Lowest coarse eigenvectors lifted to the full space.
    fn lifted(&self, count: usize) -> Vec<Vec<f64>> {
        let Some(c) = &self.coarse else {
            return Vec::new();
        };
        let b = self.boson_dim;
        let inner = self.inner();
        (0..count.min(c.values.len()))
            .map(|j| {
                let mut v = vec![0.0; b << self.n_qubits];
                v.par_chunks_mut(b).enumerate().for_each(|(config, block)| {
                    let class = &self.classes[self.class_of[config]];
                    for (i, u) in class.first.ground.iter().enumerate() {
                        block[i * inner] = c.vectors[(config, j)] * u;
                    }
                    self.transform_rest(class, block, false);
                });
                self.hadamard(&mut v);
                v
            })
            .collect()
    }
}

/// Overlaps of the later-mode ground states of `a` with every later-mode
/// eigenvector product of `t`, by combined index.
fn rest_overlaps(a: &ConfigClass, t: &ConfigClass, inner: usize) -> Vec<f64> {
    (0..inner)
        .map(|j| {
            let mut rest = j;
            let mut o = 1.0;
            for (x, y) in a.rest.iter().zip(&t.rest).rev() {
                let dk = y.eigenvalues.len();
                o *= x.vectors.column(0).dot(&y.vectors.column(rest % dk));
                rest /= dk;
            }
            o
        })
        .collect()
}

/// `H` on the product of per-configuration oscillator ground states, with
/// the `sigma_z` terms to second order through the excited oscillator states.
fn coarse_matrix(class_of: &[usize], classes: &[ConfigClass], flip: &[f64], inner: usize) -> Coarse {
    let nc = class_of.len();
    let class = |config: usize| &classes[class_of[config]];
    let mut c = DMatrix::zeros(nc, nc);
    for config in 0..nc {
        let a = class(config);
        let e0 = a.ground_energy();
        c[(config, config)] += e0;
        for (q, &f) in flip.iter().enumerate() {
            let mid = config ^ (1 << q);
            let t = class(mid);
            let ket = rest_overlaps(a, t, inner);
            c[(mid, config)] += f * dot(&a.first.ground, &t.first.ground) * ket[0];
            // (H0(t) - e0)^{-1} applied to the flipped ground state, excited part only.
            let solved: Vec<Vec<f64>> = ket
                .iter()
                .enumerate()
                .map(|(j, &kj)| {
                    let mut x: Vec<f64> = a.first.ground.iter().map(|u| kj * u).collect();
                    if j == 0 {
                        project_out(&t.first.ground, &mut x);
                    }
                    let mut rest_e = 0.0;
                    let mut rest = j;
                    for m in t.rest.iter().rev() {
                        let dk = m.eigenvalues.len();
                        rest_e += m.eigenvalues[rest % dk];
                        rest /= dk;
                    }
                    let shift = e0 - t.constant - rest_e;
                    solve_tridiagonal(&t.first.diag, &t.first.off, shift, 1e-8, &mut x);
                    if j == 0 {
                        project_out(&t.first.ground, &mut x);
                    }
                    x
                })
                .collect();
            for (q2, &f2) in flip.iter().enumerate() {
                let target = mid ^ (1 << q2);
                let b = class(target);
                let bra = rest_overlaps(b, t, inner);
                let amp: f64 = solved
                    .iter()
                    .zip(&bra)
                    .map(|(y, bj)| bj * dot(&b.first.ground, y))
                    .sum();
                c[(target, config)] -= f * f2 * amp;
            }
        }
    }
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..nc).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Coarse {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: DMatrix::from_fn(nc, nc, |r, col| eig.eigenvectors[(r, order[col])]),
    }
}

impl Preconditioner for PolaronPreconditioner {
    fn apply_real(&self, theta: f64, r: &mut [f64]) {
        self.apply(theta, r);
    }

    fn apply_complex(&self, theta: f64, r: &mut [Complex64]) {
        self.apply(theta, r);
    }

    fn start_vectors(&self, count: usize) -> Vec<Vec<f64>> {
        self.lifted(count)
    }
}
