use edm_core::analytic::effective_hamiltonian;
use edm_core::hilbert::total_spin_squared;
use edm_core::model::{EdmSpec, FockPolicy, PairCoupling};
use edm_core::observe::{expectation_real, ground_report, partial_trace_qubits, purity, reduced_qubit_density};
use edm_core::solve::{converge_ground, solve_fixed, ConvergeOptions, SolverKind, SolverOptions};
use edm_core::{ModelParams, Units};

fn opts(k: usize) -> ConvergeOptions {
    ConvergeOptions {
        k,
        ..Default::default()
    }
}

/// Sorted `delta m_x^2 + w_r n` over every qubit configuration and `n < n_levels`.
fn polaron_levels(n_qubits: usize, delta: f64, n_levels: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for cfg in 0..1usize << n_qubits {
        let m = cfg.count_ones() as f64 - n_qubits as f64 / 2.0;
        for n in 0..n_levels {
            out.push(delta * m * m + n as f64);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn vanishing_qubit_frequency_gives_displaced_oscillators() {
    for (n, gamma) in [(2usize, 1.0), (3, 1.5), (2, 2.0)] {
        let p = ModelParams::edm_scaled(n, 0.0, gamma, 0.1).unwrap();
        let k = 3 * (1 << n);
        let r = converge_ground(&EdmSpec::new(p), &opts(k)).unwrap();
        let want = polaron_levels(n, 0.1, 4);
        for (e, w) in r.eigenvalues.iter().zip(&want) {
            assert!((e - w).abs() < 1e-8, "N={n}: {e} vs {w}");
        }
    }
    let p = ModelParams::edm_scaled(2, 0.0, 1.0, 0.1).unwrap();
    let r = converge_ground(&EdmSpec::new(p), &opts(4)).unwrap();
    for (e, w) in r.eigenvalues.iter().zip([0.0, 0.0, 0.1, 0.1]) {
        assert!((e - w).abs() < 1e-8);
    }
}

#[test]
fn dense_and_iterative_agree() {
    let spec = EdmSpec::new(ModelParams::edm_scaled(4, 0.5, 1.0, 0.0).unwrap()).with_fock(FockPolicy::Fixed(40));
    let mut dense = opts(6);
    dense.solver.dense_threshold = usize::MAX;
    let mut iterative = opts(6);
    iterative.solver.dense_threshold = 0;
    let a = solve_fixed(&spec, 40, &dense).unwrap();
    let b = solve_fixed(&spec, 40, &iterative).unwrap();
    assert_eq!(a.solver, SolverKind::Dense);
    assert_eq!(b.solver, SolverKind::Iterative);
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
}

#[test]
fn converged_photon_number_is_stable_under_doubling() {
    let spec = EdmSpec::new(ModelParams::edm_scaled(2, 0.5, 3.0, 0.0).unwrap());
    let o = opts(2);
    let r = converge_ground(&spec, &o).unwrap();
    let n_max = r.n_max.unwrap();
    let more = solve_fixed(&spec, 2 * n_max, &o).unwrap();
    let a = ground_report(&r, &spec.space(n_max).unwrap()).unwrap();
    let b = ground_report(&more, &spec.space(2 * n_max).unwrap()).unwrap();
    assert!((a.n_photon - b.n_photon).abs() < 1e-6);
    assert!((r.ground_energy() - more.ground_energy()).abs() < 1e-8);
}

#[test]
fn uncoupled_model_converges_immediately() {
    let spec = EdmSpec::new(ModelParams::edm_scaled(3, 0.7, 0.0, 0.2).unwrap());
    let r = converge_ground(&spec, &opts(2)).unwrap();
    assert_eq!(r.previous_n_max, Some(spec.initial_cutoff()));
    let rep = ground_report(&r, &spec.space(r.n_max.unwrap()).unwrap()).unwrap();
    assert!(rep.n_photon.abs() < 1e-12);
    assert!((rep.parity.abs() - 1.0).abs() < 1e-9);

    let spec = EdmSpec::new(ModelParams::edm_scaled(3, 0.7, 0.0, 0.0).unwrap());
    let r = converge_ground(&spec, &opts(2)).unwrap();
    let rep = ground_report(&r, &spec.space(r.n_max.unwrap()).unwrap()).unwrap();
    assert!((rep.energy + 1.05).abs() < 1e-12);
    assert!((rep.sz + 1.5).abs() < 1e-12);
    assert!(rep.sx.abs() < 1e-12);
    assert!((rep.sx2 - 0.75).abs() < 1e-12);
    assert!(rep.entropy_q.abs() < 1e-9 && rep.entropy_1.abs() < 1e-9);
    assert!((rep.parity - 1.0).abs() < 1e-12);
}

#[test]
fn nondegenerate_ground_state_has_definite_parity() {
    for (n, wq, g, d) in [(1usize, 1.0, 0.8, 0.0), (3, 0.5, 1.0, 0.3), (4, 1.0, 1.5, 0.0)] {
        let spec = EdmSpec::new(ModelParams::edm_scaled(n, wq, g, d).unwrap());
        let r = converge_ground(&spec, &opts(2)).unwrap();
        assert!(r.gap().unwrap() > 1e-6);
        let rep = ground_report(&r, &spec.space(r.n_max.unwrap()).unwrap()).unwrap();
        assert!((rep.parity.abs() - 1.0).abs() < 1e-9, "parity {}", rep.parity);
    }
}

#[test]
fn qubit_without_coupling_factorizes() {
    let p = ModelParams::disordered(1.0, vec![0.8, 0.5, 0.6], vec![0.0, 1.2, 0.9], 0.0, Units::Resonator).unwrap();
    let rest = ModelParams::disordered(1.0, vec![0.5, 0.6], vec![1.2, 0.9], 0.0, Units::Resonator).unwrap();
    let spec = EdmSpec {
        pair: PairCoupling::PerQubit,
        ..EdmSpec::new(p)
    }
    .with_fock(FockPolicy::Fixed(30));
    let rest_spec = EdmSpec::new(rest).with_fock(FockPolicy::Fixed(30));
    let r = solve_fixed(&spec, 30, &opts(1)).unwrap();
    let r_rest = solve_fixed(&rest_spec, 30, &opts(1)).unwrap();
    assert!((r.ground_energy() - (r_rest.ground_energy() - 0.4)).abs() < 1e-10);

    let rho = reduced_qubit_density(r.ground_state(), &spec.space(30).unwrap()).unwrap();
    let rho0 = partial_trace_qubits(&rho, 3, &[0]).unwrap();
    assert!((purity(&rho0) - 1.0).abs() < 1e-10);
    // Qubit 0 sits in its lower sigma_z state (bit clear).
    assert!((rho0[(0, 0)].re - 1.0).abs() < 1e-10);
}

#[test]
fn effective_model_tracks_symmetric_sector() {
    for n in [2usize, 3, 4] {
        for gamma in [2.0, 2.5, 3.0, 3.5, 4.0] {
            let p = ModelParams::edm_scaled(n, 0.5, gamma, 0.0).unwrap();
            let eff = effective_hamiltonian(&p).unwrap();
            assert!(eff.valid);
            let spec = EdmSpec::new(p);
            let r = converge_ground(&spec, &opts(12)).unwrap();
            let s2 = total_spin_squared(&spec.space(r.n_max.unwrap()).unwrap()).unwrap();
            let s = n as f64 / 2.0;
            let sym: Vec<f64> = r
                .eigenvalues
                .iter()
                .zip(&r.eigenvectors)
                .filter(|(_, v)| (expectation_real(v, &s2).unwrap() - s * (s + 1.0)).abs() < 1e-6)
                .map(|(e, _)| *e)
                .collect();
            assert!(sym.len() > n);
            for (j, want) in eff.excitations().iter().enumerate().skip(1) {
                let got = sym[j] - sym[0];
                let tol = (0.3 * want).max(1e-3);
                assert!((got - want).abs() <= tol, "N={n} gamma={gamma} level {j}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn pair_term_suppresses_photons_above_threshold() {
    let edm = EdmSpec::new(ModelParams::edm_scaled(2, 0.5, 4.0, 0.0).unwrap());
    let dm = EdmSpec::new(ModelParams::dicke_scaled(2, 0.5, 4.0).unwrap());
    let o = opts(2);
    let a = converge_ground(&edm, &o).unwrap();
    let b = converge_ground(&dm, &o).unwrap();
    let ra = ground_report(&a, &edm.space(a.n_max.unwrap()).unwrap()).unwrap();
    let rb = ground_report(&b, &dm.space(b.n_max.unwrap()).unwrap()).unwrap();
    assert!(ra.n_photon < 1e-2, "{}", ra.n_photon);
    assert!(rb.n_photon > 10.0, "{}", rb.n_photon);
}

#[test]
fn iterative_solver_is_deterministic() {
    let spec = EdmSpec::new(ModelParams::edm_scaled(4, 0.5, 2.0, 0.1).unwrap());
    let mut o = opts(3);
    o.solver = SolverOptions {
        dense_threshold: 0,
        ..SolverOptions::default()
    };
    let a = solve_fixed(&spec, 60, &o).unwrap();
    let b = solve_fixed(&spec, 60, &o).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.eigenvectors, b.eigenvectors);
}
