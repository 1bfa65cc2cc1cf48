//! Lowest eigenpairs of Hermitian operators and Fock-cutoff convergence.

mod krylov;
mod precond;

pub use precond::PolaronPreconditioner;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SparseOperator;
use crate::model::{build_two_mode, EdmSpec, FockPolicy, TwoModeParams};
use crate::HilbertSpace;

/// Largest dimension handled by dense diagonalization.
pub const DENSE_THRESHOLD: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 0x5eed_d1c4e;
/// Environment variable holding the memory budget in MiB.
pub const MEMORY_BUDGET_ENV: &str = "EDM_MEMORY_BUDGET_MB";
pub const DEFAULT_MEMORY_BUDGET_MB: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_matvecs: usize,
    pub seed: u64,
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_matvecs: 200_000,
            seed: DEFAULT_SEED,
            dense_threshold: DENSE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    /// Cutoff of the returned solve, if it came from a cutoff problem.
    pub n_max: Option<usize>,
    /// Cutoff of the solve it was compared against.
    pub previous_n_max: Option<usize>,
    pub converged: bool,
    pub solver: SolverKind,
    /// Operator applications spent by the iterative solver.
    pub matvecs: usize,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_state(&self) -> &[Complex64] {
        &self.eigenvectors[0]
    }

    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() > 1).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Approximate inverse of `H - theta`, applied in place to a residual.
pub trait Preconditioner: Sync {
    fn apply_real(&self, theta: f64, r: &mut [f64]);
    fn apply_complex(&self, theta: f64, r: &mut [Complex64]);
    /// Up to `count` orthonormal real guesses for the lowest eigenvectors.
    fn start_vectors(&self, _count: usize) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// Multiplies `v` by a phase so that its first largest-magnitude component is real positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("nonzero vector");
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// `k` lowest eigenpairs of Hermitian `h`, ascending.
pub fn lowest_eigenpairs(h: &SparseOperator, k: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    lowest_eigenpairs_preconditioned(h, k, opts, None)
}

/// As [`lowest_eigenpairs`]; the iterative path uses `precond` for its corrections.
pub fn lowest_eigenpairs_preconditioned(
    h: &SparseOperator,
    k: usize,
    opts: &SolverOptions,
    precond: Option<&dyn Preconditioner>,
) -> Result<SpectrumResult> {
    let dim = h.dim();
    if k == 0 || k >= dim {
        return Err(Error::InvalidParameter(format!("k must be in 1..{dim}, got {k}")));
    }
    let defect = h.hermitian_defect();
    if defect > 1e-12 * h.norm_bound().max(1.0) {
        return Err(Error::NonHermitian { defect });
    }
    let mut out = if dim <= opts.dense_threshold {
        dense(h, k)
    } else {
        iterative(h, k, opts, precond)
    };
    for v in &mut out.eigenvectors {
        fix_phase(v);
    }
    if !out.converged {
        return Err(Error::NoConvergence {
            iterations: out.matvecs,
            best_residual: out.max_residual(),
        });
    }
    Ok(out)
}

fn residual_norm(h: &SparseOperator, v: &[Complex64], e: f64) -> f64 {
    h.apply(v)
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv - x * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn dense(h: &SparseOperator, k: usize) -> SpectrumResult {
    let (values, vectors): (Vec<f64>, Vec<Vec<Complex64>>) = if h.is_real() {
        let m: DMatrix<f64> = h.to_dense().map(|z| z.re);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .iter()
            .take(k)
            .map(|&i| {
                let col = eig.eigenvectors.column(i);
                (eig.eigenvalues[i], col.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            })
            .unzip()
    } else {
        let eig = h.to_dense().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .iter()
            .take(k)
            .map(|&i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
            .unzip()
    };
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| residual_norm(h, v, e))
        .collect();
    SpectrumResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        n_max: None,
        previous_n_max: None,
        converged: true,
        solver: SolverKind::Dense,
        matvecs: 0,
    }
}

fn iterative(h: &SparseOperator, k: usize, opts: &SolverOptions, precond: Option<&dyn Preconditioner>) -> SpectrumResult {
    let shift = h.gershgorin_lower_bound();
    let kopts = krylov::KrylovOptions {
        k,
        tol: opts.tol,
        max_matvecs: opts.max_matvecs,
        seed: opts.seed,
    };
    let (values, vectors, converged, matvecs) = if h.is_real() {
        let (row_ptr, cols, vals) = h.real_csr();
        let op = krylov::ShiftedCsr {
            row_ptr: &row_ptr,
            cols: &cols,
            vals: &vals,
            shift,
        };
        let out = krylov::lowest(&op, &kopts, precond);
        let vectors = out
            .vectors
            .into_iter()
            .map(|v| v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
            .collect();
        (out.values, vectors, out.converged, out.matvecs)
    } else {
        let (row_ptr, cols, vals) = h.csr();
        let op = krylov::ShiftedCsr {
            row_ptr,
            cols,
            vals,
            shift,
        };
        let out = krylov::lowest(&op, &kopts, precond);
        (out.values, out.vectors, out.converged, out.matvecs)
    };
    // Residuals are recomputed on the unshifted operator.
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| residual_norm(h, v, e))
        .collect();
    let within = residuals
        .iter()
        .zip(&values)
        .all(|(r, e)| *r <= opts.tol * e.abs().max(1.0));
    SpectrumResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        n_max: None,
        previous_n_max: None,
        converged: converged && within,
        solver: SolverKind::Iterative,
        matvecs,
    }
}

/// Basis vectors kept by the Krylov solver for `k` wanted pairs.
pub fn krylov_basis_size(k: usize) -> usize {
    let p = k.clamp(2, 16);
    k + 2 * p + (4 * p).max(40)
}

/// Memory ceiling for a single solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBudget {
    pub bytes: u64,
    pub source: String,
}

impl MemoryBudget {
    pub fn from_mib(mib: u64, source: impl Into<String>) -> Self {
        Self {
            bytes: mib * 1024 * 1024,
            source: source.into(),
        }
    }

    /// Reads [`MEMORY_BUDGET_ENV`], falling back to the default.
    pub fn from_env() -> Result<Self> {
        match std::env::var(MEMORY_BUDGET_ENV) {
            Ok(s) => {
                let mib: u64 = s.trim().parse().map_err(|_| {
                    Error::InvalidParameter(format!("{MEMORY_BUDGET_ENV}={s:?} is not an integer"))
                })?;
                Ok(Self::from_mib(mib, MEMORY_BUDGET_ENV))
            }
            Err(_) => Ok(Self::from_mib(DEFAULT_MEMORY_BUDGET_MB, "default")),
        }
    }

    pub fn check(&self, required_bytes: u64) -> Result<()> {
        if required_bytes > self.bytes {
            return Err(Error::Resource {
                required_bytes,
                budget_bytes: self.bytes,
                budget_source: self.source.clone(),
            });
        }
        Ok(())
    }
}

/// A Hamiltonian family indexed by a photon cutoff.
pub trait CutoffProblem: Sync {
    fn hamiltonian(&self, n_max: usize) -> Result<SparseOperator>;
    fn dim(&self, n_max: usize) -> usize;
    /// Upper bound on stored entries per row.
    fn entries_per_row(&self) -> usize;
    fn initial_cutoff(&self) -> usize;
    /// Energy unit for the convergence tolerance.
    fn energy_scale(&self) -> f64;
    fn preconditioner(&self, _n_max: usize) -> Result<Option<Box<dyn Preconditioner>>> {
        Ok(None)
    }
}

impl CutoffProblem for EdmSpec {
    fn hamiltonian(&self, n_max: usize) -> Result<SparseOperator> {
        EdmSpec::hamiltonian(self, n_max)
    }

    fn dim(&self, n_max: usize) -> usize {
        (n_max + 1) << self.params.n_qubits
    }

    fn entries_per_row(&self) -> usize {
        let n = self.params.n_qubits;
        2 + 2 * n + n * (n - 1) / 2
    }

    fn initial_cutoff(&self) -> usize {
        EdmSpec::initial_cutoff(self)
    }

    fn energy_scale(&self) -> f64 {
        self.params.omega_r
    }

    fn preconditioner(&self, n_max: usize) -> Result<Option<Box<dyn Preconditioner>>> {
        Ok(Some(Box::new(PolaronPreconditioner::for_edm(&self.params, self.pair, n_max)?)))
    }
}

/// Two-mode problem; the second cutoff stays fixed while the first is refined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeSpec {
    pub params: TwoModeParams,
    pub fock: FockPolicy,
    pub high_mode_cutoff: usize,
}

impl TwoModeSpec {
    pub fn space(&self, n_max: usize) -> Result<HilbertSpace> {
        HilbertSpace::multimode(self.params.n_qubits(), vec![n_max, self.high_mode_cutoff])
    }
}

impl CutoffProblem for TwoModeSpec {
    fn hamiltonian(&self, n_max: usize) -> Result<SparseOperator> {
        build_two_mode(&self.space(n_max)?, &self.params)
    }

    fn dim(&self, n_max: usize) -> usize {
        ((n_max + 1) * (self.high_mode_cutoff + 1)) << self.params.n_qubits()
    }

    fn entries_per_row(&self) -> usize {
        let n = self.params.n_qubits();
        3 + 4 * n + n * (n - 1) / 2
    }

    fn initial_cutoff(&self) -> usize {
        match self.fock {
            FockPolicy::Fixed(n) => n,
            FockPolicy::Auto => {
                let g = self.params.g.iter().fold(0.0f64, |m, gk| m.max(gk[0].abs()));
                let gamma = g / self.params.omega_modes[0];
                let n = self.params.n_qubits() as f64;
                (gamma * gamma * n * n / 4.0 + 3.0 * gamma * n + 20.0 - 1e-9).ceil() as usize
            }
        }
    }

    fn energy_scale(&self) -> f64 {
        self.params.omega_modes[0]
    }

    fn preconditioner(&self, n_max: usize) -> Result<Option<Box<dyn Preconditioner>>> {
        let pc = PolaronPreconditioner::for_two_mode(&self.params, [n_max, self.high_mode_cutoff])?;
        Ok(Some(Box::new(pc)))
    }
}

/// Bytes needed to build and solve at cutoff `n_max`.
pub fn estimate_memory<P: CutoffProblem + ?Sized>(problem: &P, n_max: usize, k: usize) -> u64 {
    let dim = problem.dim(n_max) as u64;
    let nnz = dim * problem.entries_per_row() as u64;
    // CSR storage during assembly holds roughly three copies.
    let operator = 3 * (nnz * 24 + dim * 8);
    let basis = if dim as usize <= DENSE_THRESHOLD {
        dim * dim * 16 * 2
    } else {
        2 * krylov_basis_size(k) as u64 * dim * 16
    };
    operator + basis
}

#[derive(Debug, Clone)]
pub struct ConvergeOptions {
    pub k: usize,
    /// Absolute tolerance on the ground energy between consecutive cutoffs,
    /// in units of the problem's energy scale.
    pub tol_energy: f64,
    pub solver: SolverOptions,
    pub budget: MemoryBudget,
    pub max_doublings: usize,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            k: 2,
            tol_energy: 1e-8,
            solver: SolverOptions::default(),
            budget: MemoryBudget::from_mib(DEFAULT_MEMORY_BUDGET_MB, "default"),
            max_doublings: 8,
        }
    }
}

fn solve_at<P: CutoffProblem + ?Sized>(problem: &P, n_max: usize, opts: &ConvergeOptions) -> Result<SpectrumResult> {
    opts.budget.check(estimate_memory(problem, n_max, opts.k))?;
    let h = problem.hamiltonian(n_max)?;
    let k = opts.k.min(h.dim() - 1);
    let pc = if h.dim() > opts.solver.dense_threshold {
        problem.preconditioner(n_max)?
    } else {
        None
    };
    let mut r = lowest_eigenpairs_preconditioned(&h, k, &opts.solver, pc.as_deref())?;
    r.n_max = Some(n_max);
    Ok(r)
}

/// Solves at a fixed cutoff, checked against the memory budget.
pub fn solve_fixed<P: CutoffProblem + ?Sized>(problem: &P, n_max: usize, opts: &ConvergeOptions) -> Result<SpectrumResult> {
    solve_at(problem, n_max, opts)
}

/// Doubles the cutoff from the problem's initial value until the ground
/// energy moves by less than `tol_energy * energy_scale`.
pub fn converge_ground<P: CutoffProblem + ?Sized>(problem: &P, opts: &ConvergeOptions) -> Result<SpectrumResult> {
    let tol = opts.tol_energy * problem.energy_scale();
    let mut n_max = problem.initial_cutoff().max(1);
    let mut prev = solve_at(problem, n_max, opts)?;
    for _ in 0..opts.max_doublings {
        let next_cut = 2 * n_max;
        let mut next = solve_at(problem, next_cut, opts)?;
        next.previous_n_max = Some(n_max);
        if (next.ground_energy() - prev.ground_energy()).abs() < tol {
            return Ok(next);
        }
        prev = next;
        n_max = next_cut;
    }
    Err(Error::Cutoff(format!(
        "ground energy not converged after {} doublings (n_max = {n_max})",
        opts.max_doublings
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    fn diag(n: usize) -> SparseOperator {
        let d: Vec<f64> = (0..n).map(|i| i as f64).collect();
        SparseOperator::from_real_diagonal(&d)
    }

    #[test]
    fn diagonal_operator_dense_and_iterative() {
        for n in [50, 2000] {
            let r = lowest_eigenpairs(&diag(n), 5, &SolverOptions::default()).unwrap();
            for (i, e) in r.eigenvalues.iter().enumerate() {
                assert!((e - i as f64).abs() < 1e-10);
            }
            assert_eq!(r.solver, if n <= DENSE_THRESHOLD { SolverKind::Dense } else { SolverKind::Iterative });
        }
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(lowest_eigenpairs(&diag(4), 4, &SolverOptions::default()).is_err());
        assert!(lowest_eigenpairs(&diag(4), 0, &SolverOptions::default()).is_err());
        let t = SparseOperator::from_triplets(2, [(0, 1, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(
            lowest_eigenpairs(&t, 1, &SolverOptions::default()),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn phase_tie_break() {
        let mut v = vec![Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5), Complex64::new(0.1, 0.0)];
        fix_phase(&mut v);
        assert!((v[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn complex_hermitian_iterative() {
        // Tridiagonal with complex hopping: spectrum equals the real chain's.
        let n = 900;
        let mut t = Vec::new();
        let mut tr = Vec::new();
        for i in 0..n {
            t.push((i, i, Complex64::new((i % 7) as f64, 0.0)));
            tr.push((i, i, Complex64::new((i % 7) as f64, 0.0)));
            if i + 1 < n {
                let hop = Complex64::from_polar(1.0, 0.3 * i as f64);
                t.push((i, i + 1, hop));
                t.push((i + 1, i, hop.conj()));
                tr.push((i, i + 1, Complex64::new(1.0, 0.0)));
                tr.push((i + 1, i, Complex64::new(1.0, 0.0)));
            }
        }
        let hc = SparseOperator::from_triplets(n, t).unwrap();
        let hr = SparseOperator::from_triplets(n, tr).unwrap();
        let a = lowest_eigenpairs(&hc, 4, &SolverOptions::default()).unwrap();
        let b = lowest_eigenpairs(&hr, 4, &SolverOptions::default()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn single_qubit_gap_at_zero_coupling() {
        let spec = EdmSpec::new(ModelParams::edm_scaled(1, 0.6, 0.0, 0.0).unwrap());
        let r = converge_ground(&spec, &ConvergeOptions::default()).unwrap();
        assert!((r.gap().unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(r.n_max, Some(40));
        assert_eq!(r.previous_n_max, Some(20));
    }

    #[test]
    fn budget_violation_names_source() {
        let spec = EdmSpec::new(ModelParams::edm_scaled(6, 0.5, 2.0, 0.0).unwrap());
        let opts = ConvergeOptions {
            budget: MemoryBudget::from_mib(1, "test-budget"),
            ..ConvergeOptions::default()
        };
        match converge_ground(&spec, &opts) {
            Err(Error::Resource { budget_source, .. }) => assert_eq!(budget_source, "test-budget"),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
