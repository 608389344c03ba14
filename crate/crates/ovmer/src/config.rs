//! Run configuration, read from a TOML document.
//!
//! ```toml
//! wheel = "wheel.json"          # optional, bundled wheel when absent
//! dataset = "dataset.jsonl"
//! output_dir = "run"
//! checkpoint_every = 100        # 0 writes only the final checkpoint
//! report_format = "both"        # csv | json | both
//!
//! [train]
//! group_size = 8
//! clip_eps = 0.2
//!
//! [train.cold_start]
//! steps = 100
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::path::{Path, PathBuf};

use ovmer_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl ReportFormat {
    pub fn csv(self) -> bool {
        matches!(self, ReportFormat::Csv | ReportFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, ReportFormat::Json | ReportFormat::Both)
    }
}

fn default_checkpoint_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wheel: Option<PathBuf>,
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub report_format: ReportFormat,
    #[serde(default)]
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
        config.wheel = config.wheel.as_deref().map(resolve);
        config.dataset = resolve(&config.dataset);
        config.output_dir = resolve(&config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !self.dataset.is_file() {
            return Err(Error::Config(format!(
                "dataset `{}` does not exist",
                self.dataset.display()
            )));
        }
        if let Some(wheel) = &self.wheel {
            if !wheel.is_file() {
                return Err(Error::Config(format!("wheel `{}` does not exist", wheel.display())));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
