//! Experiment configuration formats.
//!
//! Every subcommand takes `--config FILE` pointing at a JSON document;
//! unknown keys are rejected so typos fail loudly. The JSON Schema documents
//! under `schemas/` describe the same shapes for external tooling.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sdg::concepts::{class_zoo, load_class, ConceptClass, ZooName};

/// How a run names its concept class.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    /// Zoo construction, mutually exclusive with `file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zoo: Option<ZooSpec>,
    /// Class file in the `n k` + bit-rows format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Close the class under complement before use. The sequential game
    /// requires this; defaults on.
    #[serde(default = "default_true")]
    pub symmetrize: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZooSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ClassSpec {
    pub fn build(&self) -> Result<ConceptClass> {
        let base = match (&self.zoo, &self.file) {
            (Some(z), None) => {
                let name = ZooName::parse(&z.name)
                    .with_context(|| format!("unknown zoo class {:?}", z.name))?;
                class_zoo(name, z.n, z.k, z.seed)?
            }
            (None, Some(path)) => load_class(path)
                .with_context(|| format!("loading class file {}", path.display()))?,
            _ => bail!("class spec needs exactly one of `zoo` or `file`"),
        };
        Ok(if self.symmetrize {
            base.symmetrize()
        } else {
            base
        })
    }

    pub fn describe(&self) -> String {
        match (&self.zoo, &self.file) {
            (Some(z), _) => format!("{}(n={},k={},seed={})", z.name, z.n, z.k, z.seed),
            (_, Some(f)) => f.display().to_string(),
            _ => "<invalid>".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub class: ClassSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoolConfig {
    pub class: ClassSpec,
    pub eps: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// `mw` or `agnostic_soa`.
    #[serde(default = "default_learner")]
    pub learner: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBoundConfig {
    pub class: ClassSpec,
    pub eps: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpFoolConfig {
    pub class: ClassSpec,
    pub eps0: f64,
    pub delta0: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub sample_size: usize,
    #[serde(default = "default_alpha")]
    pub learner_alpha: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub override_size_checks: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SanitizeConfig {
    pub class: ClassSpec,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub sample_size: usize,
    #[serde(default = "default_alpha")]
    pub learner_alpha: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub override_size_checks: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PucConfigFile {
    pub class: ClassSpec,
    pub eps: f64,
    pub delta: f64,
    pub m_points: usize,
    pub sample_size: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_alpha")]
    pub learner_alpha: f64,
    /// Probability of flipping the planted label.
    #[serde(default = "default_flip")]
    pub flip_noise: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub override_size_checks: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// `exp_mech`, `thresh`, or `randomized_response`.
    pub mechanism: String,
    #[serde(default = "default_audit_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Declared privacy parameter to audit against.
    pub alpha: f64,
    #[serde(default)]
    pub slack: f64,
}

fn default_trials() -> u64 {
    10
}

fn default_audit_trials() -> u64 {
    100_000
}

fn default_learner() -> String {
    "mw".into()
}

fn default_kappa() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    1.0
}

fn default_flip() -> f64 {
    0.1
}

/// Load a config file and remember its content hash for output headers.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, String)> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let cfg: T = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok((cfg, hex_prefix(&digest, 16)))
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut s = String::with_capacity(chars);
    for b in bytes {
        use std::fmt::Write;
        write!(s, "{b:02x}").unwrap();
        if s.len() >= chars {
            break;
        }
    }
    s.truncate(chars);
    s
}
