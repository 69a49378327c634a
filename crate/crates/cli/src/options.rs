//! Subcommand options and their merge with the config file.
//!
//! Every field is optional so that an absent flag can fall back to the file
//! and then to the built-in default.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn load_config(path: &Path) -> Result<toml::Table> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Overlays the flags that were given on top of the `[section]` table of the
/// config file.
pub fn merge<A: Serialize + DeserializeOwned>(
    flags: A,
    file: Option<&toml::Table>,
    section: &str,
) -> Result<A> {
    let mut base = match file.and_then(|t| t.get(section)) {
        Some(v) => serde_json::to_value(v)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let given = serde_json::to_value(&flags)?;
    if let (Some(base), Some(given)) = (base.as_object_mut(), given.as_object()) {
        for (k, v) in given {
            if !v.is_null() {
                base.insert(k.clone(), v.clone());
            }
        }
    }
    serde_json::from_value(base)
        .with_context(|| format!("invalid [{section}] options in config file"))
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateArgs {
    /// World spec TOML.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlArgs {
    /// World spec TOML; the world is regenerated deterministically.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Overrides the world spec's rng_seed.
    #[arg(long)]
    pub world_seed: Option<u64>,
    /// Saved crawl state to continue.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Comma-separated seed node ids.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Number of seeds drawn from the organization when --seeds is absent.
    #[arg(long)]
    pub seed_count: Option<usize>,
    /// Random seed for drawing seed nodes.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Organization index in the world spec.
    #[arg(long)]
    pub org: Option<usize>,
    /// File with one keyword per line.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Comma-separated keywords, used when --keywords is absent.
    #[arg(long)]
    pub keyword: Option<String>,
    /// v1, v2 or bfs.
    #[arg(long)]
    pub version: Option<String>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Maximum number of fetches.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Pause after this many fetches and save state.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CentralityArgs {
    /// Edge list, or a .graphml file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// `all` or a comma list such as `dg,cl,bc,h,pr,ec,cc,lc`.
    #[arg(long)]
    pub measures: Option<String>,
    /// Output CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time per measure in the footer.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub timings: Option<bool>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub damping: Option<f64>,
    /// `dense` or `lanczos`.
    #[arg(long)]
    pub cc_method: Option<String>,
    #[arg(long)]
    pub lanczos_steps: Option<usize>,
    /// Largest component size for dense communicability.
    #[arg(long)]
    pub cc_cap: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RankArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Comma-separated cutoffs.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub hidden_k: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// `all` or a comma list such as `zr,oner,knn3,nb,dt,lr,rf`.
    #[arg(long)]
    pub classifiers: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CommunitiesArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// `partition.csv,report.csv`.
    #[arg(long)]
    pub out: Option<String>,
    /// Category map TOML replacing the built-in one.
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[arg(long)]
    pub min_support: Option<f64>,
    #[arg(long)]
    pub min_labeled: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Pipeline output directory.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExportArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Comma list of edge-list, graphml, dot, csv.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub retain_labels: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineArgs {
    /// Pipeline config TOML.
    #[arg(value_name = "PIPELINE_CONFIG")]
    pub pipeline_config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
