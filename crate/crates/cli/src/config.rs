use std::path::Path;

use serde::{Deserialize, Serialize};
use usage_eval::annotation::ParseConfig;
use usage_eval::corpus::SignificanceConfig;
use usage_eval::dataset::{FilterConfig, SplitSizes};
use usage_eval::wms::WmsConfig;
use usage_eval::{SimilarityConfig, WeightScheme};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Hams4,
    Wms,
    Both,
}

impl Metric {
    pub fn hams4(self) -> bool {
        matches!(self, Metric::Hams4 | Metric::Both)
    }

    pub fn wms(self) -> bool {
        matches!(self, Metric::Wms | Metric::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnotationSettings {
    /// Chat-completions URL; falls back to the environment when unset.
    pub endpoint: Option<String>,
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub concurrency: usize,
    pub requests_per_second: Option<f64>,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub parse: ParseConfig,
}

impl Default for AnnotationSettings {
    fn default() -> Self {
        AnnotationSettings {
            endpoint: None,
            model: "gpt-4".into(),
            prompt: "plain-6".into(),
            temperature: usage_eval::annotation::DEFAULT_TEMPERATURE,
            concurrency: 4,
            requests_per_second: None,
            max_retries: 5,
            timeout_secs: 120,
            parse: ParseConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSettings {
    pub seed: u64,
    #[serde(flatten)]
    pub sizes: SplitSizes,
}

/// Everything a run can be configured with. Loaded from TOML, then
/// overridden by command-line flags; the result is echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub jobs: Option<usize>,
    pub metric: Metric,
    pub weights: WeightScheme,
    pub similarity: SimilarityConfig,
    pub significance: SignificanceConfig,
    pub wms: WmsConfig,
    pub annotation: AnnotationSettings,
    pub filter: FilterConfig,
    pub split: SplitSettings,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}
