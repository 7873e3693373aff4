//! Run configuration documents and their hashes.

use std::path::{Path, PathBuf};

use qmolgen_core::gan::{preset, ArchitectureConfig, TrainOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;
const EVAL_SAMPLES: usize = 128;

/// A preset name or a full architecture object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchitectureSpec {
    Preset(String),
    Explicit(Box<ArchitectureConfig>),
}

fn default_batch() -> usize {
    32
}
fn default_eval_interval() -> u64 {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// The JSON run document. Omitting `dataset_path` selects the bundled
/// sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub version: Option<u32>,
    pub architecture: ArchitectureSpec,
    #[serde(default)]
    pub dataset_path: Option<PathBuf>,
    pub iterations: u64,
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_eval_interval")]
    pub eval_interval: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write an intermediate checkpoint every this many iterations.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
}

impl RunConfig {
    pub fn for_preset(name: &str, iterations: u64, seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            version: Some(CONFIG_VERSION),
            architecture: ArchitectureSpec::Preset(name.to_string()),
            dataset_path: None,
            iterations,
            seed,
            batch_size: default_batch(),
            eval_interval: default_eval_interval(),
            output_dir: output_dir.into(),
            checkpoint_every: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        if let Some(v) = c.version {
            if v != CONFIG_VERSION {
                return Err(CliError::Usage(format!("config version {v} is not supported")));
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn architecture(&self) -> Result<ArchitectureConfig, CliError> {
        Ok(match &self.architecture {
            ArchitectureSpec::Preset(name) => preset(name)?,
            ArchitectureSpec::Explicit(c) => (**c).clone().expand()?,
        })
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            iterations: self.iterations,
            batch_size: self.batch_size,
            eval_interval: self.eval_interval,
            eval_samples: EVAL_SAMPLES,
            seed: self.seed,
        }
    }
}

/// Fully expanded inputs that determine a run's trajectory. Output
/// location, dataset path and iteration count are left out: the dataset
/// enters by content, and a shorter run is a prefix of a longer one, which
/// lets a checkpoint be resumed with a larger `iterations`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedConfig {
    pub version: u32,
    pub architecture: ArchitectureConfig,
    pub dataset_sha256: String,
    pub batch_size: usize,
    pub eval_interval: u64,
    pub eval_samples: usize,
    pub seed: u64,
}

impl ExpandedConfig {
    pub fn new(run: &RunConfig, dataset_sha256: &str) -> Result<Self, CliError> {
        Ok(Self {
            version: CONFIG_VERSION,
            architecture: run.architecture()?,
            dataset_sha256: dataset_sha256.to_string(),
            batch_size: run.batch_size,
            eval_interval: run.eval_interval,
            eval_samples: EVAL_SAMPLES,
            seed: run.seed,
        })
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let ok = r#"{"architecture":"QGAN-HG","iterations":5,"seed":1}"#;
        let c = RunConfig::from_json(ok).unwrap();
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.output_dir, PathBuf::from("runs"));
        let bad = r#"{"architecture":"QGAN-HG","iterations":5,"seed":1,"learning_rate":1}"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Usage(_))));
        let version = r#"{"version":9,"architecture":"QGAN-HG","iterations":5,"seed":1}"#;
        assert!(RunConfig::from_json(version).is_err());
    }

    #[test]
    fn explicit_architecture_and_preset_hash_identically() {
        let by_name = RunConfig::for_preset("QWGAN-GP-HG-P4-L2", 10, 3, "a");
        let expanded = by_name.architecture().unwrap();
        let mut explicit = by_name.clone();
        explicit.architecture = ArchitectureSpec::Explicit(Box::new(expanded));
        explicit.output_dir = PathBuf::from("elsewhere");
        let h1 = ExpandedConfig::new(&by_name, "d").unwrap().hash();
        let h2 = ExpandedConfig::new(&explicit, "d").unwrap().hash();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);
        let h3 = ExpandedConfig::new(&RunConfig::for_preset("QWGAN-GP-HG-P4-L2", 10, 4, "a"), "d")
            .unwrap()
            .hash();
        assert_ne!(h1, h3);
        let longer = RunConfig::for_preset("QWGAN-GP-HG-P4-L2", 50, 3, "a");
        assert_eq!(ExpandedConfig::new(&longer, "d").unwrap().hash(), h1);
    }

    #[test]
    fn invalid_preset_lists_valid_names() {
        let c = RunConfig::for_preset("NOPE", 1, 1, "x");
        match c.architecture() {
            Err(CliError::Usage(m)) => assert!(m.contains("QGAN-HG") && m.contains("MolGAN")),
            other => panic!("{other:?}"),
        }
    }
}
