use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DatasetSpec;
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::models::{GaussianFixedVarHead, Head, Network};
use crate::stepper::StepPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    LinearGaussian,
    LinearLeastSquares,
    MlpGaussian,
    MlpLeastSquares,
    SoftmaxLinear,
    SoftmaxMlp,
}

fn default_hidden() -> usize {
    16
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: ModelId,
    /// Hidden width for the MLP variants.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Standard deviation of the Gaussian head.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl ModelConfig {
    pub fn new(id: ModelId) -> Self {
        Self {
            id,
            hidden: default_hidden(),
            beta: default_beta(),
        }
    }

    pub fn build(&self, input_dim: usize, output_dim: usize) -> Result<Network> {
        let gaussian = || -> Result<Head> {
            Ok(Head::Gaussian(
                GaussianFixedVarHead::new(self.beta).map_err(|e| Error::Config(e.to_string()))?,
            ))
        };
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        Ok(match self.id {
            ModelId::LinearGaussian => Network::linear(input_dim, output_dim, gaussian()?),
            ModelId::LinearLeastSquares => Network::linear(input_dim, output_dim, Head::SquaredError),
            ModelId::MlpGaussian => Network::mlp(input_dim, self.hidden, output_dim, gaussian()?),
            ModelId::MlpLeastSquares => {
                Network::mlp(input_dim, self.hidden, output_dim, Head::SquaredError)
            }
            ModelId::SoftmaxLinear => Network::linear(input_dim, output_dim, Head::Softmax),
            ModelId::SoftmaxMlp => Network::mlp(input_dim, self.hidden, output_dim, Head::Softmax),
        })
    }
}

fn all_methods() -> Vec<MetricKind> {
    MetricKind::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: a model, a dataset, the methods to compare and the step
/// policy they share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub dataset: DatasetSpec,
    #[serde(default = "all_methods")]
    pub methods: Vec<MetricKind>,
    pub policy: StepPolicy,
    /// Fixed damping; absent means the automatic floor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub iterations: usize,
    /// Absent means full batch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Master seed; per-method seeds are derived from it.
    pub seed: u64,
    /// Record real wall-clock times in traces (breaks byte reproducibility).
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.dataset.size == 0 {
            return Err(Error::Config("dataset size must be positive".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods must not repeat".into()));
        }
        self.policy
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be non-negative, got {l}")));
            }
        }
        if !(self.model.beta > 0.0 && self.model.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.model.beta)));
        }
        let softmax = matches!(self.model.id, ModelId::SoftmaxLinear | ModelId::SoftmaxMlp);
        if softmax != (self.dataset.name == "spiral3") {
            return Err(Error::Config(format!(
                "model {:?} does not fit dataset `{}` (softmax models need one-hot labels)",
                self.model.id, self.dataset.name
            )));
        }
        Ok(())
    }
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical JSON form, ignoring where outputs are written.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut value = serde_json::to_value(cfg).expect("config serializes");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("output_dir");
    }
    let canonical = serde_json::to_string(&value).expect("value serializes");
    to_hex(&Sha256::digest(canonical.as_bytes()))
}

/// Per-method seed: first 8 bytes of `SHA-256(seed_le ‖ method name)`.
pub fn sub_seed(master: u64, kind: MetricKind) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(kind.name().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "model": {"id": "mlp_gaussian", "hidden": 8},
        "dataset": {"name": "sine", "size": 64, "noise": 0.1, "seed": 7},
        "methods": ["identity", "hessian"],
        "policy": {"type": "trust_region", "epsilon": 0.05},
        "iterations": 10,
        "seed": 1
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        assert_eq!(cfg.model.beta, 1.0);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn hash_ignores_output_dir() {
        let cfg = ExperimentConfig::from_json(SAMPLE).unwrap();
        let mut moved = cfg.clone();
        moved.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(config_hash(&cfg), config_hash(&moved));
        let mut reseeded = cfg.clone();
        reseeded.seed = 2;
        assert_ne!(config_hash(&cfg), config_hash(&reseeded));
        assert_eq!(config_hash(&cfg).len(), 64);
    }

    #[test]
    fn sub_seeds_differ_per_method() {
        let seeds: Vec<u64> = MetricKind::ALL.iter().map(|&k| sub_seed(5, k)).collect();
        let mut uniq = seeds.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), 6);
        assert_eq!(sub_seed(5, MetricKind::Hessian), sub_seed(5, MetricKind::Hessian));
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            SAMPLE.replace("\"iterations\": 10", "\"iterations\": 0"),
            SAMPLE.replace("mlp_gaussian", "resnet"),
            SAMPLE.replace("\"hessian\"", "\"identity\""),
            SAMPLE.replace("0.05", "-1"),
            SAMPLE.replace("mlp_gaussian", "softmax_mlp"),
            SAMPLE.replace("\"seed\": 1", "\"seed\": 1, \"typo\": 3"),
        ] {
            assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
