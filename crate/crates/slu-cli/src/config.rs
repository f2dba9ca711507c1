//! Declarative run configuration.
//!
//! A run file holds a seed, data paths, and per-model hyperparameter
//! sections. Every field is optional; resolution is flags > file >
//! built-in defaults, and each command writes the fully resolved values
//! beside its outputs so a run is reproducible from the echo alone.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use slu_core::ranker::RankerConfig;
use slu_core::slm::SlmConfig;
use slu_core::tagger::TaggerConfig;
use slu_core::wcn::{CorrectionHead, WcnModelConfig};

/// Train/dev/test corpus locations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

/// Synthetic-corpus knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub count: Option<usize>,
    pub nbest: Option<usize>,
    pub sub: Option<f64>,
    pub del: Option<f64>,
    pub ins: Option<f64>,
}

/// Language-model knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlmSection {
    pub order: Option<usize>,
    pub discount: Option<f64>,
    pub min_count: Option<usize>,
}

/// Baseline-tagger knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggerSection {
    pub embed_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
}

/// Hypothesis-ranker knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerSection {
    pub embed_dim: Option<usize>,
    pub conv_filters: Option<usize>,
    pub hidden: Option<usize>,
    pub nbest: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
}

/// Joint-model knobs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WcnSection {
    pub embed_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub nbest: Option<usize>,
    pub attention_heads: Option<usize>,
    pub head: Option<CorrectionHead>,
    pub w_ptr: Option<f64>,
    pub w_gen: Option<f64>,
    pub w_tag: Option<f64>,
    pub w_act: Option<f64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
}

/// The full declarative run file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub data: DataPaths,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub slm: SlmSection,
    #[serde(default)]
    pub tagger: TaggerSection,
    #[serde(default)]
    pub ranker: RankerSection,
    #[serde(default)]
    pub wcn: WcnSection,
}

impl RunConfig {
    /// Load a config file, or the empty config when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }
}

/// `flag` beats `file` beats `default`.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Assemble a tagger config from flag/file/default layers.
pub fn tagger_config(seed: u64, flags: &TaggerSection, file: &TaggerSection) -> TaggerConfig {
    let d = TaggerConfig::default();
    TaggerConfig {
        embed_dim: resolve(flags.embed_dim, file.embed_dim, d.embed_dim),
        hidden: resolve(flags.hidden, file.hidden, d.hidden),
        epochs: resolve(flags.epochs, file.epochs, d.epochs),
        lr: resolve(flags.lr, file.lr, d.lr),
        seed,
        ..d
    }
}

/// Assemble a ranker config from flag/file/default layers.
pub fn ranker_config(seed: u64, flags: &RankerSection, file: &RankerSection) -> RankerConfig {
    let d = RankerConfig::default();
    RankerConfig {
        embed_dim: resolve(flags.embed_dim, file.embed_dim, d.embed_dim),
        conv_filters: resolve(flags.conv_filters, file.conv_filters, d.conv_filters),
        hidden: resolve(flags.hidden, file.hidden, d.hidden),
        nbest: resolve(flags.nbest, file.nbest, d.nbest),
        epochs: resolve(flags.epochs, file.epochs, d.epochs),
        lr: resolve(flags.lr, file.lr, d.lr),
        seed,
        ..d
    }
}

/// Assemble a joint-model config from flag/file/default layers.
pub fn wcn_config(seed: u64, flags: &WcnSection, file: &WcnSection) -> WcnModelConfig {
    let d = WcnModelConfig::default();
    WcnModelConfig {
        embed_dim: resolve(flags.embed_dim, file.embed_dim, d.embed_dim),
        hidden: resolve(flags.hidden, file.hidden, d.hidden),
        nbest: resolve(flags.nbest, file.nbest, d.nbest),
        attention_heads: resolve(flags.attention_heads, file.attention_heads, d.attention_heads),
        head: resolve(flags.head, file.head, d.head),
        w_ptr: resolve(flags.w_ptr, file.w_ptr, d.w_ptr),
        w_gen: resolve(flags.w_gen, file.w_gen, d.w_gen),
        w_tag: resolve(flags.w_tag, file.w_tag, d.w_tag),
        w_act: resolve(flags.w_act, file.w_act, d.w_act),
        epochs: resolve(flags.epochs, file.epochs, d.epochs),
        lr: resolve(flags.lr, file.lr, d.lr),
        seed,
        ..d
    }
}

/// Assemble a language-model config from flag/file/default layers.
pub fn slm_config(flags: &SlmSection, file: &SlmSection) -> SlmConfig {
    let d = SlmConfig::default();
    SlmConfig {
        order: resolve(flags.order, file.order, d.order),
        discount: resolve(flags.discount, file.discount, d.discount),
        min_count: resolve(flags.min_count, file.min_count, d.min_count),
    }
}

/// Write the fully resolved settings beside an output artifact, as
/// `<artifact>.config.json`.
pub fn echo_beside(artifact: &Path, resolved: &serde_json::Value) -> Result<()> {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".config.json");
    let path = artifact.with_file_name(name);
    write_echo(&path, resolved)
}

/// Write the fully resolved settings to an explicit path.
pub fn write_echo(path: &Path, resolved: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(resolved)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing config echo {}", path.display()))?;
    Ok(())
}

/// Create the parent directory of an output path if needed.
pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating output directory {}", parent.display()))?;
        }
    }
    Ok(())
}
