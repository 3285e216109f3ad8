use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use percept_core::analysis::synth::EngagementSpec;
use percept_core::analysis::DEFAULT_VIF_THRESHOLD;
use percept_core::corpus::synth::PoolSpec;
use percept_core::corpus::{GeneratorParams, SampleConfig};
use percept_core::perceiver::{BackendSpec, TrainConfig};
use percept_core::reliability::Metric;
use percept_core::DimensionId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Light,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw articles for `clean`.
    pub raw: Option<PathBuf>,
    /// Cleaned documents.
    pub corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub participants: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    /// Engagement predictors served by `serve`.
    pub predictors: Option<PathBuf>,
    /// `split.json` restricting `evaluate` to the test documents.
    pub split: Option<PathBuf>,
    /// Parent of the timestamped run directories.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Participants per country.
    pub participants: usize,
    /// Records per document per country.
    pub labels_per_doc: usize,
    pub params: GeneratorParams,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { participants: 200, labels_per_doc: 2, params: GeneratorParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeavyConfig {
    /// Directory with config.json, tokenizer.json and model.safetensors.
    pub model_dir: Option<PathBuf>,
    pub max_tokens: usize,
}

impl Default for HeavyConfig {
    fn default() -> Self {
        Self { model_dir: None, max_tokens: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub vif_threshold: f64,
    /// Dimensions modeled by `study-perception`.
    pub dimensions: Vec<DimensionId>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { vif_threshold: DEFAULT_VIF_THRESHOLD, dimensions: DimensionId::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub port: u16,
    pub max_body_bytes: usize,
    pub max_text_bytes: usize,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        let d = percept_service::ServiceConfig::default();
        Self { port: 8080, max_body_bytes: d.max_body_bytes, max_text_bytes: d.max_text_bytes }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub pool: PoolSpec,
    pub engagement: EngagementSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds every stochastic stage.
    pub seed: u64,
    pub backend: Backend,
    pub paths: Paths,
    pub sample: SampleConfig,
    pub simulate: SimulateConfig,
    pub train: TrainConfig,
    pub heavy: HeavyConfig,
    pub reliability_metric: Metric,
    pub study: StudyConfig,
    pub service: ServiceSettings,
    pub synthetic: SyntheticConfig,
}

impl RunConfig {
    /// Reads a config file, or the `config` of a run manifest.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if value.get("subcommand").is_some() {
            if let Some(inner) = value.get_mut("config") {
                value = inner.take();
            }
        }
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Propagates the top-level seed and checks every section.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        self.sample.seed = self.seed;
        self.train.seed = self.seed;
        self.sample.validate()?;
        self.train.validate()?;
        self.simulate.params.validate()?;
        if !(self.study.vif_threshold.is_finite() && self.study.vif_threshold >= 1.0) {
            bail!("study.vif_threshold must be at least 1, got {}", self.study.vif_threshold);
        }
        Ok(self)
    }

    pub fn backend_spec(&self) -> anyhow::Result<BackendSpec> {
        match self.backend {
            Backend::Light => Ok(BackendSpec::light()),
            Backend::Heavy => {
                let Some(model_dir) = self.heavy.model_dir.clone() else {
                    bail!("the heavy backend needs heavy.model_dir in the config");
                };
                Ok(BackendSpec::Heavy { model_dir, max_tokens: self.heavy.max_tokens })
            }
        }
    }

    /// A path from the config, or an error naming the missing key.
    pub fn require(&self, value: &Option<PathBuf>, key: &str) -> anyhow::Result<PathBuf> {
        match value {
            Some(p) if p.exists() => Ok(p.clone()),
            Some(p) => bail!("paths.{key} `{}` does not exist", p.display()),
            None => bail!("paths.{key} is not set; add it to the config or pass the matching flag"),
        }
    }
}
