//! One function per subcommand; each returns a [`Table`].

use edm_core::analytic::{asymptotics, effective_hamiltonian, hp_photon_number_smallg, hp_solve};
use edm_core::circuit::{
    compile_charge_circuit, flux_model_params, ghz_from_angular, zeta_charge, zeta_transmon, ChargeCircuit,
    FluxCircuit,
};
use edm_core::hilbert::boson_number_mode;
use edm_core::model::{
    default_alpha_grid, semiclassical_potentials, DisorderSpec, EdmSpec, FockPolicy, PairCoupling, TwoModeParams,
};
use edm_core::observe::{expectation_real, ground_report, reduced_qubit_density, spin_q_function, GroundStateReport};
use edm_core::solve::{
    converge_ground, estimate_memory, solve_fixed, ConvergeOptions, CutoffProblem, MemoryBudget, SolverOptions,
    TwoModeSpec,
};
use edm_core::{Error as CoreError, ModelParams, SpectrumResult};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Fock, ModelSource, PairRule, RunConfig, SweepVariable, TwoModeConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::Command;

pub const GROUND_COLUMNS: [&str; 16] = [
    "sweep_value",
    "E0",
    "gap",
    "n_photon",
    "Sz",
    "Sx",
    "Sx2",
    "entropy_q",
    "entropy_1",
    "parity",
    "n_max",
    "converged",
    "manifold_dim",
    "n_photon_avg",
    "Sz_avg",
    "Sx2_avg",
];

type Res<T> = Result<T, CliError>;

pub struct Runner<'a> {
    cfg: &'a RunConfig,
    budget: MemoryBudget,
    pool: rayon::ThreadPool,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a RunConfig) -> Res<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(Self {
            cfg,
            budget: MemoryBudget::from_env()?,
            pool,
        })
    }

    pub fn run(&self, command: Command) -> Res<Table> {
        if command != Command::Validate {
            if let Some(v) = self.cfg.violations(command.name()).into_iter().next() {
                return Err(CliError::Config(v));
            }
        }
        match command {
            Command::CircuitCharge => self.circuit_charge(),
            Command::CircuitFlux => self.circuit_flux(),
            Command::GroundSweep => self.ground_sweep(),
            Command::Spectrum => self.spectrum(),
            Command::Hp => self.hp(),
            Command::Effective => self.effective(),
            Command::BoPotential => self.bo_potential(),
            Command::Qfunc => self.qfunc(),
            Command::Disorder => self.disorder(),
            Command::TwoMode => self.two_mode(),
            Command::Validate => Err(CliError::Config("validate produces a report, not a table".into())),
        }
    }

    fn grid(&self) -> Vec<f64> {
        match &self.cfg.sweep {
            Some(s) => s.grid(),
            None => vec![self.default_sweep_value()],
        }
    }

    /// Sweep column value when no sweep is configured.
    fn default_sweep_value(&self) -> f64 {
        base_params(self.cfg).map(|p| p.gamma()).unwrap_or(f64::NAN)
    }

    fn params(&self, value: f64) -> Res<ModelParams> {
        params_at(self.cfg, self.cfg.sweep.as_ref().map(|s| (s.variable, value)))
    }

    fn converge_options(&self, k: usize) -> ConvergeOptions {
        ConvergeOptions {
            k,
            tol_energy: self.cfg.tol_energy,
            solver: SolverOptions::default(),
            budget: self.budget.clone(),
            max_doublings: self.cfg.max_doublings,
        }
    }

    fn fock_policy(&self) -> FockPolicy {
        match self.cfg.fock {
            Fock::Auto => FockPolicy::Auto,
            Fock::Start(n) | Fock::Fixed(n) => FockPolicy::Fixed(n),
        }
    }

    /// Returns the spectrum and whether the cutoff was verified.
    fn solve<P: CutoffProblem + Sync>(&self, problem: &P, k: usize) -> Res<(SpectrumResult, bool)> {
        let opts = self.converge_options(k);
        Ok(match self.cfg.fock {
            Fock::Fixed(n) => (solve_fixed(problem, n, &opts)?, false),
            _ => (converge_ground(problem, &opts)?, true),
        })
    }

    fn edm_spec(&self, params: ModelParams, pair: PairCoupling) -> EdmSpec {
        EdmSpec {
            params,
            pair,
            fock: self.fock_policy(),
        }
    }

    fn par_map<T: Send, F: Fn(f64) -> Res<T> + Sync>(&self, grid: &[f64], f: F) -> Res<Vec<T>> {
        self.pool.install(|| grid.par_iter().map(|&v| f(v)).collect())
    }

    fn ground_point(&self, pair: PairCoupling, params: ModelParams) -> Res<(GroundStateReport, usize, bool, f64)> {
        let spec = self.edm_spec(params, pair);
        let (r, ok) = self.solve(&spec, self.cfg.k)?;
        let n_max = r.n_max.unwrap_or(0);
        let rep = ground_report(&r, &spec.space(n_max)?)?;
        Ok((rep, n_max, ok, r.max_residual()))
    }

    fn ground_sweep(&self) -> Res<Table> {
        let grid = self.grid();
        let points = self.par_map(&grid, |v| self.ground_point(PairCoupling::PerQubit, self.params(v)?))?;
        let mut t = Table::new(&GROUND_COLUMNS);
        let mut residuals = Vec::new();
        for (v, (rep, n_max, ok, res)) in grid.iter().zip(points) {
            t.push(ground_cells(*v, &rep, n_max, ok));
            residuals.push(res);
        }
        t.metadata.insert("residuals".into(), json!(residuals));
        Ok(t)
    }

    fn spectrum(&self) -> Res<Table> {
        let grid = self.grid();
        let k = self.cfg.k.max(2);
        let points = self.par_map(&grid, |v| {
            let spec = self.edm_spec(self.params(v)?, PairCoupling::PerQubit);
            self.solve(&spec, k)
        })?;
        let mut columns = vec!["sweep_value".to_string(), "E0".to_string()];
        columns.extend((1..k).map(|j| format!("dE_{j}")));
        columns.extend(["n_max".to_string(), "converged".to_string()]);
        let mut t = Table::new(&columns);
        let mut residuals = Vec::new();
        for (v, (r, ok)) in grid.iter().zip(points) {
            let e0 = r.ground_energy();
            let mut row: Vec<Cell> = vec![(*v).into(), e0.into()];
            row.extend((1..k).map(|j| r.eigenvalues.get(j).map_or(Cell::Empty, |e| (e - e0).into())));
            row.extend([r.n_max.unwrap_or(0).into(), ok.into()]);
            t.push(row);
            residuals.push(r.max_residual());
        }
        t.metadata.insert("residuals".into(), json!(residuals));
        Ok(t)
    }

    fn hp(&self) -> Res<Table> {
        let mut t = Table::new(&["sweep_value", "omega_plus", "omega_minus", "n_photon", "n_photon_smallg", "unstable"]);
        for v in self.grid() {
            let p = self.params(v)?;
            let small = match hp_photon_number_smallg(&p) {
                Ok(x) => x,
                Err(CoreError::Division(_)) => f64::NAN,
                Err(e) => return Err(e.into()),
            };
            match hp_solve(&p) {
                Ok(h) => t.push(vec![v.into(), h.omega_plus.into(), h.omega_minus.into(), h.n_photon.into(), small.into(), false.into()]),
                Err(CoreError::Instability { .. } | CoreError::Division(_)) => {
                    t.push(vec![v.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), small.into(), true.into()])
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(t)
    }

    fn effective(&self) -> Res<Table> {
        let n = base_params(self.cfg)?.n_qubits;
        let mut columns: Vec<String> = ["sweep_value", "gamma", "c1", "c2", "valid"].map(String::from).to_vec();
        columns.extend((1..=n).map(|j| format!("level_{j}")));
        columns.extend(["n_photon_even", "gap_even", "n_photon_odd", "gap_odd", "Sz_tail"].map(String::from));
        let mut t = Table::new(&columns);
        let mut warnings = Vec::new();
        for v in self.grid() {
            let p = self.params(v)?;
            let mut row: Vec<Cell> = vec![v.into(), p.gamma().into()];
            match effective_hamiltonian(&p) {
                Ok(m) => {
                    row.extend([m.c1.into(), m.c2.into(), m.valid.into()]);
                    row.extend(m.excitations().into_iter().skip(1).map(Cell::from));
                    for w in m.warnings {
                        warnings.push(json!({"sweep_value": v, "warning": w}));
                    }
                }
                Err(CoreError::InvalidParameter(msg)) => {
                    row.extend([f64::NAN.into(), f64::NAN.into(), false.into()]);
                    row.extend((0..n).map(|_| Cell::from(f64::NAN)));
                    warnings.push(json!({"sweep_value": v, "warning": msg}));
                }
                Err(e) => return Err(e.into()),
            }
            match asymptotics(&p) {
                Ok(a) => row.extend([a.n_photon_even, a.gap_even, a.n_photon_odd, a.gap_odd, a.sz_tail].map(Cell::from)),
                Err(CoreError::InvalidParameter(_)) => row.extend((0..5).map(|_| Cell::from(f64::NAN))),
                Err(e) => return Err(e.into()),
            }
            t.push(row);
        }
        t.metadata.insert("warnings".into(), Value::Array(warnings));
        Ok(t)
    }

    fn bo_potential(&self) -> Res<Table> {
        let curves = self.cfg.bo.curves;
        let mut columns = vec!["sweep_value".to_string(), "alpha".to_string()];
        columns.extend((0..curves).map(|j| format!("E_{j}")));
        let mut t = Table::new(&columns);
        let mut minima = Vec::new();
        for v in self.grid() {
            let p = self.params(v)?;
            let alpha = match &self.cfg.bo.alpha {
                Some(a) => a.grid(),
                None => default_alpha_grid(&p),
            };
            let bo = semiclassical_potentials(&p, &alpha, curves)?;
            for (i, a) in alpha.iter().enumerate() {
                let mut row: Vec<Cell> = vec![v.into(), (*a).into()];
                row.extend(bo.curves.iter().map(|c| Cell::from(c[i])));
                t.push(row);
            }
            minima.push(json!({"sweep_value": v, "minima": bo.local_minima(0)}));
        }
        t.metadata.insert("ground_curve_minima".into(), Value::Array(minima));
        Ok(t)
    }

    fn qfunc(&self) -> Res<Table> {
        let v = self.grid()[0];
        let spec = self.edm_spec(self.params(v)?, PairCoupling::PerQubit);
        let (r, _) = self.solve(&spec, self.cfg.k)?;
        let space = spec.space(r.n_max.unwrap_or(0))?;
        let rho = reduced_qubit_density(r.ground_state(), &space)?;
        let q = self
            .pool
            .install(|| spin_q_function(&rho, space.n_qubits(), self.cfg.qfunc.n_theta, self.cfg.qfunc.n_phi))?;
        let mut t = Table::new(&["theta", "phi", "q"]);
        for (i, th) in q.theta.iter().enumerate() {
            for (j, ph) in q.phi.iter().enumerate() {
                t.push(vec![(*th).into(), (*ph).into(), q.values[i][j].into()]);
            }
        }
        t.metadata.insert("sweep_value".into(), json!(v));
        t.metadata.insert("integral".into(), json!(q.integrate()));
        t.metadata.insert("energy".into(), json!(r.ground_energy()));
        Ok(t)
    }

    fn disorder(&self) -> Res<Table> {
        let d = self.cfg.disorder.as_ref().expect("checked by violations");
        let seed = d.seed.expect("checked by violations");
        let spec = DisorderSpec {
            omega_q_width: d.omega_q_width,
            g_width: d.g_width,
            pair: d.pair,
        };
        let grid = self.grid();
        let jobs: Vec<(usize, f64)> = (0..d.samples).flat_map(|s| grid.iter().map(move |&v| (s, v))).collect();
        let points: Vec<(GroundStateReport, usize, bool, f64)> = self.pool.install(|| {
            jobs.par_iter()
                .map(|&(s, v)| {
                    let p = spec.realize(&self.params(v)?, sample_seed(seed, s))?;
                    self.ground_point(d.pair, p)
                })
                .collect::<Res<_>>()
        })?;

        let mut columns = vec!["sample", "seed"];
        columns.extend(GROUND_COLUMNS);
        let mut t = Table::new(&columns);
        let mut residuals = Vec::new();
        for (&(s, v), (rep, n_max, ok, res)) in jobs.iter().zip(&points) {
            let mut row: Vec<Cell> = vec![s.into(), Cell::Int(sample_seed(seed, s) as i64)];
            row.extend(ground_cells(v, rep, *n_max, *ok));
            t.push(row);
            residuals.push(*res);
        }
        for (i, &v) in grid.iter().enumerate() {
            let at: Vec<&(GroundStateReport, usize, bool, f64)> =
                (0..d.samples).map(|s| &points[s * grid.len() + i]).collect();
            let mean = |f: fn(&GroundStateReport) -> f64| at.iter().map(|x| f(&x.0)).sum::<f64>() / at.len() as f64;
            let mut row: Vec<Cell> = vec!["mean".into(), Cell::Empty, v.into()];
            row.extend(
                [
                    mean(|r| r.energy),
                    mean(|r| r.gap),
                    mean(|r| r.n_photon),
                    mean(|r| r.sz),
                    mean(|r| r.sx),
                    mean(|r| r.sx2),
                    mean(|r| r.entropy_q),
                    mean(|r| r.entropy_1),
                    mean(|r| r.parity),
                ]
                .map(Cell::from),
            );
            row.push(at.iter().map(|x| x.1).max().unwrap_or(0).into());
            row.push(at.iter().all(|x| x.2).into());
            row.push(mean(|r| r.manifold_dim as f64).into());
            row.extend([mean(|r| r.n_photon_avg), mean(|r| r.sz_avg), mean(|r| r.sx2_avg)].map(Cell::from));
            t.push(row);
        }
        t.metadata.insert("residuals".into(), json!(residuals));
        Ok(t)
    }

    fn two_mode(&self) -> Res<Table> {
        let tc = self.cfg.two_mode.as_ref().expect("checked by violations");
        let grid = self.grid();
        let points = self.par_map(&grid, |v| {
            let p = self.params(v)?;
            let spec = TwoModeSpec {
                params: two_mode_params(self.cfg, tc, &p)?,
                fock: self.fock_policy(),
                high_mode_cutoff: tc.high_mode_cutoff,
            };
            let (r, ok) = self.solve(&spec, self.cfg.k)?;
            let n_max = r.n_max.unwrap_or(0);
            let space = spec.space(n_max)?;
            let rep = ground_report(&r, &space)?;
            let n2 = expectation_real(r.ground_state(), &boson_number_mode(&space, 1)?)?;
            let single = self.ground_point(PairCoupling::PerQubit, p)?;
            Ok((rep, n2, single.0.n_photon, n_max, ok && single.2, r.max_residual()))
        })?;
        let mut t = Table::new(&["sweep_value", "E0", "gap", "n_photon", "n_photon_2", "n_photon_single", "n_max", "converged"]);
        let mut residuals = Vec::new();
        for (v, (rep, n2, single, n_max, ok, res)) in grid.iter().zip(points) {
            t.push(vec![
                (*v).into(),
                rep.energy.into(),
                rep.gap.into(),
                rep.n_photon.into(),
                n2.into(),
                single.into(),
                n_max.into(),
                ok.into(),
            ]);
            residuals.push(res);
        }
        t.metadata.insert("residuals".into(), json!(residuals));
        Ok(t)
    }

    fn circuit_charge(&self) -> Res<Table> {
        let ModelSource::Charge { circuit } = &self.cfg.model else {
            return Err(CliError::Config("circuit-charge needs a charge model source".into()));
        };
        let ratios = match &self.cfg.sweep {
            Some(s) => s.grid(),
            None => vec![circuit.c_g / circuit.c_r],
        };
        let mut t = Table::new(&[
            "c_g_ratio",
            "omega_r_ghz",
            "omega_q_ghz",
            "g_ghz",
            "d_ghz",
            "delta_ghz",
            "zeta",
            "zeta_charge",
            "zeta_transmon",
            "e_c_ghz",
            "anharmonicity_ghz",
            "cbar_q",
            "cbar_r",
            "cbar_g",
            "cbar_qq",
        ]);
        for r in ratios {
            let c = ChargeCircuit {
                c_g: r * circuit.c_r,
                ..*circuit
            };
            let comp = compile_charge_circuit(&c)?;
            let p = &comp.params;
            let ghz_energy = edm_core::circuit::energy_from_ghz(1.0);
            t.push(
                [
                    r,
                    ghz_from_angular(p.omega_r),
                    ghz_from_angular(p.omega_q[0]),
                    ghz_from_angular(p.g[0]),
                    ghz_from_angular(p.d),
                    ghz_from_angular(p.delta),
                    comp.zeta,
                    zeta_charge(&c, comp.e_c)?,
                    zeta_transmon(&c),
                    comp.e_c / ghz_energy,
                    comp.cpb.anharmonicity / ghz_energy,
                    comp.capacitances.cbar_q,
                    comp.capacitances.cbar_r,
                    comp.capacitances.cbar_g,
                    comp.capacitances.cbar_qq,
                ]
                .map(Cell::from)
                .to_vec(),
            );
        }
        Ok(t)
    }

    fn circuit_flux(&self) -> Res<Table> {
        let ModelSource::Flux { circuit } = &self.cfg.model else {
            return Err(CliError::Config("circuit-flux needs a flux model source".into()));
        };
        let ratios = match &self.cfg.sweep {
            Some(s) => s.grid(),
            None => vec![circuit.l_g / circuit.l_r],
        };
        let mut t = Table::new(&[
            "l_g_ratio",
            "omega_r_ghz",
            "omega_q_ghz",
            "g_ghz",
            "d_ghz",
            "delta_ghz",
            "zeta",
            "l_bar",
        ]);
        for r in ratios {
            let c = FluxCircuit {
                l_g: r * circuit.l_r,
                ..*circuit
            };
            let p = flux_model_params(&c)?;
            t.push(
                [
                    r,
                    ghz_from_angular(p.omega_r),
                    ghz_from_angular(p.omega_q[0]),
                    ghz_from_angular(p.g[0]),
                    ghz_from_angular(p.d),
                    ghz_from_angular(p.delta),
                    p.zeta(),
                    c.renormalized_inductance(),
                ]
                .map(Cell::from)
                .to_vec(),
            );
        }
        Ok(t)
    }

    /// Dry run: grid checks, cutoff and memory predictions, resolved parameters.
    pub fn validate(&self, target: Command) -> Value {
        let cfg = self.cfg;
        let mut violations = cfg.violations(target.name());
        let mut report = serde_json::Map::new();
        report.insert("target".into(), json!(target.name()));
        report.insert("config_hash".into(), json!(cfg.hash()));
        match base_params(cfg) {
            Ok(p) => {
                report.insert("params".into(), json!(p));
            }
            Err(e) => violations.push(e.to_string()),
        }
        if let ModelSource::Flux { circuit } = &cfg.model {
            match flux_model_params(circuit) {
                Ok(p) => {
                    report.insert(
                        "flux".into(),
                        json!({"delta": p.delta, "delta_ghz": ghz_from_angular(p.delta), "delta_positive": p.delta > 0.0}),
                    );
                }
                Err(e) => violations.push(e.to_string()),
            }
        }
        let needs_solver = matches!(
            target,
            Command::GroundSweep | Command::Spectrum | Command::Qfunc | Command::Disorder | Command::TwoMode
        );
        let mut points = Vec::new();
        if violations.is_empty() {
            for v in self.grid() {
                let p = match self.params(v) {
                    Ok(p) => p,
                    Err(e) => {
                        violations.push(format!("sweep value {v}: {e}"));
                        continue;
                    }
                };
                let mut entry = serde_json::Map::new();
                entry.insert("sweep_value".into(), json!(v));
                if needs_solver {
                    let estimate = if target == Command::TwoMode {
                        cfg.two_mode.as_ref().and_then(|tc| two_mode_params(cfg, tc, &p).ok()).map(|params| {
                            let spec = TwoModeSpec {
                                params,
                                fock: self.fock_policy(),
                                high_mode_cutoff: cfg.two_mode.as_ref().map_or(0, |t| t.high_mode_cutoff),
                            };
                            self.cutoff_estimate(&spec)
                        })
                    } else {
                        Some(self.cutoff_estimate(&self.edm_spec(p.clone(), PairCoupling::PerQubit)))
                    };
                    if let Some(e) = estimate {
                        for (k, val) in e {
                            entry.insert(k.into(), val);
                        }
                    }
                }
                if target == Command::Effective {
                    let valid = effective_hamiltonian(&p).map(|m| m.valid).unwrap_or(false);
                    entry.insert("effective_valid".into(), json!(valid));
                }
                points.push(Value::Object(entry));
            }
        }
        report.insert("points".into(), Value::Array(points));
        report.insert("memory_budget_bytes".into(), json!(self.budget.bytes));
        report.insert("memory_budget_source".into(), json!(self.budget.source));
        report.insert("ok".into(), json!(violations.is_empty()));
        report.insert("violations".into(), json!(violations));
        Value::Object(report)
    }

    fn cutoff_estimate<P: CutoffProblem>(&self, spec: &P) -> Vec<(&'static str, Value)> {
        let n_max = spec.initial_cutoff();
        let k = self.cfg.k;
        let doubled = 2 * n_max;
        let mem = estimate_memory(spec, doubled, k);
        vec![
            ("n_max", json!(n_max)),
            ("dim", json!(spec.dim(n_max))),
            ("dim_first_doubling", json!(spec.dim(doubled))),
            ("memory_bytes", json!(mem)),
            ("within_budget", json!(self.budget.check(mem).is_ok())),
        ]
    }
}

/// Seed of disorder sample `s`.
pub fn sample_seed(base: u64, s: usize) -> u64 {
    base.wrapping_add(s as u64)
}

fn ground_cells(v: f64, rep: &GroundStateReport, n_max: usize, converged: bool) -> Vec<Cell> {
    vec![
        v.into(),
        rep.energy.into(),
        rep.gap.into(),
        rep.n_photon.into(),
        rep.sz.into(),
        rep.sx.into(),
        rep.sx2.into(),
        rep.entropy_q.into(),
        rep.entropy_1.into(),
        rep.parity.into(),
        n_max.into(),
        converged.into(),
        rep.manifold_dim.into(),
        rep.n_photon_avg.into(),
        rep.sz_avg.into(),
        rep.sx2_avg.into(),
    ]
}

/// Configured model in resonator units.
pub fn base_params(cfg: &RunConfig) -> Res<ModelParams> {
    let p = match &cfg.model {
        ModelSource::Scaled {
            n_qubits,
            omega_q,
            g,
            delta,
        } => {
            if cfg.dicke {
                ModelParams::dicke_scaled(*n_qubits, *omega_q, *g)?
            } else {
                ModelParams::edm_scaled(*n_qubits, *omega_q, *g, *delta)?
            }
        }
        ModelSource::Explicit { params } => {
            if params.omega_q.len() != params.n_qubits || params.g.len() != params.n_qubits {
                return Err(CliError::Config("explicit params: omega_q and g need one entry per qubit".into()));
            }
            ModelParams::disordered(params.omega_r, params.omega_q.clone(), params.g.clone(), params.delta, params.units)
                .map(|mut p| {
                    p.d = params.d;
                    p
                })?
        }
        ModelSource::Charge { circuit } => compile_charge_circuit(circuit)?.params,
        ModelSource::Flux { circuit } => flux_model_params(circuit)?,
    };
    Ok(p.to_resonator_units())
}

/// Model at one sweep point. `g` and `delta` sweeps keep `D = g^2/w_r + delta`
/// (or `D = 0` for the Dicke model).
pub fn params_at(cfg: &RunConfig, point: Option<(SweepVariable, f64)>) -> Res<ModelParams> {
    let Some((var, v)) = point else {
        return base_params(cfg);
    };
    let pair = |p: &mut ModelParams| {
        let g = p.g_mean();
        p.d = if cfg.dicke { 0.0 } else { g * g / p.omega_r + p.delta };
        if cfg.dicke {
            p.delta = -g * g / p.omega_r;
        }
    };
    match var {
        SweepVariable::G => {
            let mut p = base_params(cfg)?;
            p.g = vec![v; p.n_qubits];
            pair(&mut p);
            Ok(p)
        }
        SweepVariable::OmegaQ => {
            let mut p = base_params(cfg)?;
            p.omega_q = vec![v; p.n_qubits];
            Ok(p)
        }
        SweepVariable::Delta => {
            let mut p = base_params(cfg)?;
            p.delta = v;
            pair(&mut p);
            Ok(p)
        }
        SweepVariable::CgRatio => match &cfg.model {
            ModelSource::Charge { circuit } => Ok(compile_charge_circuit(&ChargeCircuit {
                c_g: v * circuit.c_r,
                ..*circuit
            })?
            .params
            .to_resonator_units()),
            _ => Err(CliError::Config("c_g_ratio sweep needs a charge circuit".into())),
        },
        SweepVariable::LgRatio => match &cfg.model {
            ModelSource::Flux { circuit } => Ok(flux_model_params(&FluxCircuit {
                l_g: v * circuit.l_r,
                ..*circuit
            })?
            .to_resonator_units()),
            _ => Err(CliError::Config("l_g_ratio sweep needs a flux circuit".into())),
        },
    }
}

/// Two-mode parameters around the uniform single-mode model `p`.
pub fn two_mode_params(cfg: &RunConfig, tc: &TwoModeConfig, p: &ModelParams) -> Res<TwoModeParams> {
    if tc.g_ratios.len() != p.n_qubits {
        return Err(CliError::Config(format!(
            "two_mode.g_ratios has {} rows for {} qubits",
            tc.g_ratios.len(),
            p.n_qubits
        )));
    }
    let g = p.g_uniform()?;
    let wq = p.omega_q_uniform()?;
    let omega_modes = [p.omega_r, tc.omega_ex * p.omega_r];
    let couplings: Vec<[f64; 2]> = tc.g_ratios.iter().map(|r| [r[0] * g, r[1] * g]).collect();
    let d = if cfg.dicke {
        0.0
    } else {
        match tc.pair_rule {
            PairRule::Polaron => TwoModeParams::polaron_consistent_d(omega_modes, &couplings, p.delta)?,
            PairRule::LowerMode => g * g / p.omega_r + p.delta,
        }
    };
    Ok(TwoModeParams {
        omega_modes,
        omega_q: vec![wq; p.n_qubits],
        g: couplings,
        d,
    })
}
