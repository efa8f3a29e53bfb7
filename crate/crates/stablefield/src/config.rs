//! Declarative experiment configuration: schema, validation with precise
//! field paths, and resolution into the core types.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{FieldKernel, KernelEntry, MixingAtom, Regime, StableFieldSpec};
use crate::harness::{EventSpec, ExperimentConfig};
use crate::lattice::{analyze_action, GroupStructure, HElement, IntMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub action: ActionConfig,
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ActionConfig {
    /// Trivial kernel: the field lives on `Z^d` itself.
    Trivial { d: usize },
    /// Kernel spanned by the given vectors (each of length `d`).
    Kernel { d: usize, basis: Vec<Vec<i64>> },
}

impl ActionConfig {
    pub fn dim(&self) -> usize {
        match self {
            ActionConfig::Trivial { d } | ActionConfig::Kernel { d, .. } => *d,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub alpha: f64,
    pub mixing: Vec<MixingAtom>,
    pub regime: Regime,
    pub kernel: Vec<KernelEntryConfig>,
    #[serde(default)]
    pub q: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntryConfig {
    pub v: String,
    /// dissipative site `u in Z^d`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<i64>>,
    /// conservative site: coset index (1-based) and free coordinates
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free: Option<Vec<i64>>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ExperimentSection {
    pub n_schedule: Vec<i64>,
    pub delta: f64,
    pub replicates: u64,
    pub seed: u64,
    pub event: EventSpec,
    #[serde(default)]
    pub parallelism: usize,
    /// run the Frechet weak-convergence check alongside the experiment
    #[serde(default)]
    pub weak_check: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default)]
    pub field_csv: bool,
}

fn default_dir() -> String {
    "out".to_string()
}

/// Parses a UTF-8 JSON document into the schema; unknown keys are
/// rejected with the offending path in the message.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::config("$", e.to_string()))
}

/// A validated configuration resolved into core types.
#[derive(Debug)]
pub struct ResolvedConfig {
    pub structure: GroupStructure,
    pub spec: StableFieldSpec,
    pub experiment: Option<ExperimentConfig>,
    pub out_dir: String,
    pub field_csv: bool,
    pub weak_check: bool,
    /// SHA-256 of the canonical serialized config; stamped into outputs.
    pub hash: String,
}

pub fn resolve(cfg: &RunConfig) -> Result<ResolvedConfig> {
    if cfg.version != 1 {
        return Err(Error::config("version", "unsupported schema version"));
    }
    let d = cfg.action.dim();
    if d == 0 {
        return Err(Error::config("action.d", "dimension must be positive"));
    }

    // action
    let structure = match &cfg.action {
        ActionConfig::Trivial { d } => analyze_action(&IntMatrix::zeros(*d, 0))
            .map_err(|e| Error::config("action", e.to_string()))?,
        ActionConfig::Kernel { d, basis } => {
            for (i, b) in basis.iter().enumerate() {
                if b.len() != *d {
                    return Err(Error::config(
                        format!("action.basis[{i}]"),
                        format!("kernel vector must have length {d}"),
                    ));
                }
            }
            let m = IntMatrix::from_cols(*d, basis)
                .map_err(|e| Error::config("action.basis", e.to_string()))?;
            analyze_action(&m).map_err(|e| Error::config("action.basis", e.to_string()))?
        }
    };

    // regime consistency
    match (cfg.field.regime, &cfg.action) {
        (Regime::Conservative, ActionConfig::Trivial { .. }) => {
            return Err(Error::config(
                "field.regime",
                "conservative field requires a kernel action, got the trivial action",
            ));
        }
        (Regime::Dissipative, ActionConfig::Kernel { .. }) => {
            return Err(Error::config(
                "field.regime",
                "dissipative field uses the trivial action; drop the kernel basis",
            ));
        }
        _ => {}
    }

    if !(cfg.field.alpha > 0.0 && cfg.field.alpha < 2.0) {
        return Err(Error::config("field.alpha", "alpha must lie in (0,2)"));
    }

    let label_index = |label: &str, path: &str| -> Result<usize> {
        cfg.field
            .mixing
            .iter()
            .position(|a| a.label == label)
            .ok_or_else(|| Error::config(path, format!("unknown mixing label {label:?}")))
    };

    // kernel
    let kernel = match cfg.field.regime {
        Regime::Dissipative => {
            let mut entries = Vec::with_capacity(cfg.field.kernel.len());
            for (i, e) in cfg.field.kernel.iter().enumerate() {
                let path = format!("field.kernel[{i}]");
                if e.coset.is_some() || e.free.is_some() {
                    return Err(Error::config(
                        path,
                        "dissipative entries are indexed by \"u\", not coset/free",
                    ));
                }
                let u = e
                    .u
                    .clone()
                    .ok_or_else(|| Error::config(&path, "missing site \"u\""))?;
                entries.push(KernelEntry {
                    v: label_index(&e.v, &format!("{path}.v"))?,
                    at: u,
                    value: e.value,
                });
            }
            FieldKernel::Dissipative { d, entries }
        }
        Regime::Conservative => {
            let mut entries = Vec::with_capacity(cfg.field.kernel.len());
            for (i, e) in cfg.field.kernel.iter().enumerate() {
                let path = format!("field.kernel[{i}]");
                if e.u.is_some() {
                    return Err(Error::config(
                        path,
                        "conservative entries are indexed by coset/free, not \"u\"",
                    ));
                }
                let coset = e
                    .coset
                    .ok_or_else(|| Error::config(&path, "missing coset index"))?;
                let free = e
                    .free
                    .clone()
                    .ok_or_else(|| Error::config(&path, "missing free coordinates"))?;
                entries.push(KernelEntry {
                    v: label_index(&e.v, &format!("{path}.v"))?,
                    at: HElement { coset, free },
                    value: e.value,
                });
            }
            FieldKernel::Conservative {
                structure: structure.clone(),
                entries,
            }
        }
    };

    // duplicate sites would double-count silently
    {
        let mut keys: Vec<String> = cfg
            .field
            .kernel
            .iter()
            .map(|e| format!("{}|{:?}|{:?}|{:?}", e.v, e.u, e.coset, e.free))
            .collect();
        keys.sort_unstable();
        let before = keys.len();
        keys.dedup();
        if keys.len() != before {
            return Err(Error::config("field.kernel", "duplicate kernel entries"));
        }
    }

    let spec = StableFieldSpec {
        alpha: cfg.field.alpha,
        mixing: cfg.field.mixing.clone(),
        kernel,
        q: cfg.field.q,
    };
    spec.validate()?;

    let experiment = match &cfg.experiment {
        Some(x) => {
            let parallelism = thread_override(x.parallelism);
            let ec = ExperimentConfig {
                spec: spec.clone(),
                n_schedule: x.n_schedule.clone(),
                delta_exponent: x.delta,
                replicates: x.replicates,
                seed: x.seed,
                event: x.event.clone(),
                parallelism,
            };
            ec.validate()?;
            Some(ec)
        }
        None => None,
    };

    let canonical = serde_json::to_string(cfg)?;
    let hash = hex_digest(canonical.as_bytes());

    Ok(ResolvedConfig {
        structure,
        spec,
        experiment,
        out_dir: cfg
            .output
            .as_ref()
            .map(|o| o.dir.clone())
            .unwrap_or_else(default_dir),
        field_csv: cfg.output.as_ref().map(|o| o.field_csv).unwrap_or(false),
        weak_check: cfg.experiment.as_ref().map(|x| x.weak_check).unwrap_or(false),
        hash,
    })
}

/// `STABLEFIELD_THREADS` overrides the config value; 0 means all cores.
fn thread_override(configured: usize) -> usize {
    match std::env::var("STABLEFIELD_THREADS") {
        Ok(v) => v.parse().unwrap_or(configured),
        Err(_) => configured,
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
