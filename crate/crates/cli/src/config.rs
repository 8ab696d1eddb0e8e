//! Pipeline configuration: a TOML file of defaults, overridden by flags.

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use xcbridge::plt::PltConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub mode: Option<String>,
    pub budget: Option<usize>,
    pub beam: Option<usize>,
    pub top_k: Option<usize>,
    pub ks: Option<Vec<usize>>,
    pub plan: Option<String>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub plt: PltFileConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PltFileConfig {
    pub epochs: Option<u32>,
    pub learning_rate: Option<f32>,
    pub l2: Option<f32>,
    pub negative_cap: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse config {}", path.display()))
    }
}

/// Flags always win; the file fills gaps; defaults come last.
pub fn merge<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Resolves a required path from a flag or the config's `[paths]` table.
pub fn need_path(flag: &Option<PathBuf>, file: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone().or_else(|| file.clone()).ok_or_else(|| {
        anyhow::anyhow!("missing {what}: pass --{what} or set paths.{what} in the config file")
    })
}

/// Validates the metric cutoffs: non-empty, ascending.
pub fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks[0] < 1 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(xcbridge::Error::InvalidArgument {
            detail: "ks must be a non-empty ascending list of positive integers".into(),
        }
        .into());
    }
    Ok(())
}

pub fn plt_config(
    file: &PltFileConfig,
    epochs: Option<u32>,
    learning_rate: Option<f32>,
    l2: Option<f32>,
    negative_cap: Option<usize>,
    beam: usize,
    seed: u64,
) -> PltConfig {
    let defaults = PltConfig::default();
    PltConfig {
        epochs: merge(epochs, file.epochs, defaults.epochs),
        learning_rate: merge(learning_rate, file.learning_rate, defaults.learning_rate),
        l2: merge(l2, file.l2, defaults.l2),
        negative_cap: merge(negative_cap, file.negative_cap, defaults.negative_cap),
        beam,
        seed,
    }
}
