//! Run configuration: a versioned JSON document plus `--set path=value` overrides.

use edm_core::circuit::{ChargeCircuit, FluxCircuit};
use edm_core::model::PairCoupling;
use edm_core::ModelParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelSource,
    /// `D = 0` whenever a sweep rewrites the couplings.
    #[serde(default)]
    pub dicke: bool,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub fock: Fock,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_tol_energy")]
    pub tol_energy: f64,
    #[serde(default = "default_max_doublings")]
    pub max_doublings: usize,
    #[serde(default)]
    pub disorder: Option<DisorderConfig>,
    #[serde(default)]
    pub two_mode: Option<TwoModeConfig>,
    #[serde(default)]
    pub qfunc: QFuncConfig,
    #[serde(default)]
    pub bo: BoConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads for sweep points; 0 uses every core.
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn default_k() -> usize {
    2
}

fn default_tol_energy() -> f64 {
    1e-8
}

fn default_max_doublings() -> usize {
    8
}

fn default_threads() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSource {
    /// Uniform model in resonator units (`w_r = 1`); `g` is `g / w_r`.
    Scaled {
        n_qubits: usize,
        omega_q: f64,
        g: f64,
        #[serde(default)]
        delta: f64,
    },
    Explicit {
        params: ModelParams,
    },
    Charge {
        circuit: ChargeCircuit,
    },
    Flux {
        circuit: FluxCircuit,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// `g / w_r`.
    G,
    /// `w_q / w_r`.
    OmegaQ,
    /// `delta / w_r`.
    Delta,
    /// `C_g / C_r` of a charge circuit.
    CgRatio,
    /// `L_g / L_r` of a flux circuit.
    LgRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Sweep {
    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.from];
        }
        let span = self.to - self.from;
        let last = (self.points - 1) as f64;
        (0..self.points).map(|i| self.from + span * i as f64 / last).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fock {
    /// Start from the coupling-based estimate and double until converged.
    #[default]
    Auto,
    /// Start from this cutoff and double until converged.
    Start(usize),
    /// Solve at exactly this cutoff; convergence is not checked.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    #[serde(default)]
    pub omega_q_width: f64,
    #[serde(default)]
    pub g_width: f64,
    #[serde(default)]
    pub pair: PairCoupling,
    pub seed: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairRule {
    /// `D = sum_k g_1k g_2k / w_k + delta`.
    #[default]
    Polaron,
    /// `D = g^2 / w_r + delta` from the lower mode alone.
    LowerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeConfig {
    /// `w_ex / w_r`.
    pub omega_ex: f64,
    /// `g_ik / g` for qubit `i` and mode `k`; the entry `[0][0]` is 1.
    pub g_ratios: Vec<[f64; 2]>,
    #[serde(default)]
    pub pair_rule: PairRule,
    #[serde(default = "default_high_cutoff")]
    pub high_mode_cutoff: usize,
}

fn default_high_cutoff() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QFuncConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for QFuncConfig {
    fn default() -> Self {
        Self { n_theta: 61, n_phi: 120 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoConfig {
    pub curves: usize,
    /// Defaults to the model's own grid.
    #[serde(default)]
    pub alpha: Option<Sweep>,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self { curves: 4, alpha: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    /// Parses `text`, applies overrides, then checks the version.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| CliError::Config(format!("field `{}`: {}", e.path(), e.inner())))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    /// Problems that make a run pointless.
    pub fn violations(&self, command: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(s) = &self.sweep {
            if s.points == 0 {
                out.push("sweep.points must be at least 1".into());
            }
            if !s.from.is_finite() || !s.to.is_finite() {
                out.push("sweep bounds must be finite".into());
            }
            let fits = match (s.variable, &self.model) {
                (SweepVariable::CgRatio, ModelSource::Charge { .. }) => true,
                (SweepVariable::LgRatio, ModelSource::Flux { .. }) => true,
                (SweepVariable::CgRatio | SweepVariable::LgRatio, _) => false,
                _ => true,
            };
            if !fits {
                out.push(format!("sweep variable {:?} does not apply to this model source", s.variable));
            }
        }
        if self.k == 0 {
            out.push("k must be at least 1".into());
        }
        if let Some(d) = &self.disorder {
            if d.seed.is_none() {
                out.push("disorder requested without a seed".into());
            }
            if d.samples == 0 {
                out.push("disorder.samples must be at least 1".into());
            }
        } else if command == "disorder" {
            out.push("disorder command needs a `disorder` section".into());
        }
        if command == "two-mode" && self.two_mode.is_none() {
            out.push("two-mode command needs a `two_mode` section".into());
        }
        if self.qfunc.n_theta < 2 || self.qfunc.n_phi < 2 {
            out.push("qfunc grid needs at least 2 points per axis".into());
        }
        if let Some(a) = &self.bo.alpha {
            if a.points == 0 {
                out.push("bo.alpha.points must be at least 1".into());
            }
        }
        out
    }
}

/// `a.b.c=value`; the value is parsed as JSON and falls back to a string.
fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not of the form path=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{path}`: `{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj
            .entry((*key).to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Config(format!("override `{spec}` has an empty path")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"version": 1, "model": {"source": "scaled", "n_qubits": 2, "omega_q": 0.5, "g": 1.0}}"#;

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = RunConfig::load(
            BASE,
            &["sweep={\"variable\":\"g\",\"from\":0,\"to\":1,\"points\":3}".into(), "model.n_qubits=4".into(), "output.format=json".into()],
        )
        .unwrap();
        assert_eq!(cfg.sweep.unwrap().grid(), vec![0.0, 0.5, 1.0]);
        assert!(matches!(cfg.model, ModelSource::Scaled { n_qubits: 4, .. }));
        assert_eq!(cfg.output.format, Format::Json);
    }

    #[test]
    fn parse_errors_name_location() {
        let err = RunConfig::load("{\"version\": 1,\n \"model\": }", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::load(BASE, &["model.omega_q=\"fast\"".into()]).unwrap_err();
        assert!(err.to_string().contains("model"), "{err}");
        let err = RunConfig::load(BASE, &["version=2".into()]).unwrap_err();
        assert!(err.to_string().contains("version"));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::load(BASE, &[]).unwrap();
        let b = RunConfig::load(BASE, &["k=3".into()]).unwrap();
        assert_eq!(a.hash(), RunConfig::load(BASE, &[]).unwrap().hash());
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn missing_seed_is_a_violation() {
        let cfg = RunConfig::load(BASE, &["disorder={\"g_width\":0.3}".into()]).unwrap();
        assert!(cfg.violations("disorder").iter().any(|v| v.contains("seed")));
    }
}
