//! End-to-end run: acquire a graph (crawl a synthetic world or import a
//! dataset), compute centralities, rank and evaluate leadership, detect
//! communities, and export an anonymized copy. Every artifact is written to
//! one directory together with a manifest of SHA-256 digests.
//!
//! All randomness derives from the top-level `seed` through
//! [`derive_seed`] with a fixed stage name. Text artifacts start with a
//! `# run: <id>` line (an XML comment for GraphML), where the run id is the
//! digest of the canonical configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{centrality_table, CentralityConfig, CentralityTable, Column};
use crate::community::{
    community_report, detect_communities, infer_roles, report_csv, CategoryMap, RoleConfig,
};
use crate::crawler::{crawl, CrawlConfig, CrawlStats, CrawlVersion};
use crate::graph::io::{export_graph, load_graph, write_edge_list, write_profiles, ExportFormat};
use crate::graph::{anonymize, LabelTable, SocialGraph};
use crate::leadership::{
    classify_all, cross_validate, hidden_manager_report, predictions_csv, ranking_report,
    ClassifierKind, EvalReport, RankedList,
};
use crate::synthworld::{generate_world, WorldSpec};
use crate::util::{derive_seed, sha256_hex};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PipelineError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

/// A synthetic world, given inline or by path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldInput {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub spec: Option<WorldSpec>,
}

/// An imported edge list with optional profiles and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInput {
    pub edges: PathBuf,
    #[serde(default)]
    pub profiles: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    #[serde(default)]
    pub world: Option<WorldInput>,
    #[serde(default)]
    pub dataset: Option<DatasetInput>,
}

fn default_seed_count() -> usize {
    3
}
fn default_version() -> CrawlVersion {
    CrawlVersion::V1
}
fn default_window() -> usize {
    1000
}
fn default_width() -> usize {
    1
}

/// Crawl settings for world input. Seeds are drawn from the target
/// organization's members; keywords default to the organization's own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlStage {
    #[serde(default)]
    pub org: usize,
    #[serde(default = "default_seed_count")]
    pub seeds: usize,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default = "default_version")]
    pub version: CrawlVersion,
    #[serde(default = "default_window")]
    pub window_size: usize,
    #[serde(default)]
    pub max_fetches: Option<u64>,
    #[serde(default = "default_width")]
    pub concurrency_width: usize,
}

impl Default for CrawlStage {
    fn default() -> Self {
        CrawlStage {
            org: 0,
            seeds: default_seed_count(),
            keywords: Vec::new(),
            version: default_version(),
            window_size: default_window(),
            max_fetches: None,
            concurrency_width: default_width(),
        }
    }
}

fn default_ks() -> Vec<usize> {
    vec![10, 20]
}
fn default_hidden_k() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingStage {
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default = "default_hidden_k")]
    pub hidden_k: usize,
}

impl Default for RankingStage {
    fn default() -> Self {
        RankingStage {
            ks: default_ks(),
            hidden_k: default_hidden_k(),
        }
    }
}

fn default_classifiers() -> String {
    "all".into()
}
fn default_folds() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationStage {
    /// `all` or a comma-separated list of classifier names.
    #[serde(default = "default_classifiers")]
    pub classifiers: String,
    #[serde(default = "default_folds")]
    pub folds: usize,
}

impl Default for EvaluationStage {
    fn default() -> Self {
        EvaluationStage {
            classifiers: default_classifiers(),
            folds: default_folds(),
        }
    }
}

fn default_min_support() -> f64 {
    0.3
}
fn default_min_labeled() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityStage {
    #[serde(default = "default_min_support")]
    pub min_support: f64,
    #[serde(default = "default_min_labeled")]
    pub min_labeled: usize,
    /// Category map file; the built-in map when absent.
    #[serde(default)]
    pub categories: Option<PathBuf>,
}

impl Default for CommunityStage {
    fn default() -> Self {
        CommunityStage {
            min_support: default_min_support(),
            min_labeled: default_min_labeled(),
            categories: None,
        }
    }
}

fn default_formats() -> Vec<String> {
    vec!["edge-list".into(), "graphml".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportStage {
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
    /// Keep member/manager flags and community attributes in the export.
    #[serde(default)]
    pub retain_labels: bool,
}

impl Default for ExportStage {
    fn default() -> Self {
        ExportStage {
            formats: default_formats(),
            retain_labels: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub input: InputConfig,
    #[serde(default)]
    pub crawl: CrawlStage,
    #[serde(default)]
    pub centrality: CentralityConfig,
    #[serde(default)]
    pub ranking: RankingStage,
    #[serde(default)]
    pub evaluation: EvaluationStage,
    #[serde(default)]
    pub communities: CommunityStage,
    #[serde(default)]
    pub export: ExportStage,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative input paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(w) = &mut self.input.world {
            if let Some(p) = &mut w.path {
                fix(p);
            }
        }
        if let Some(d) = &mut self.input.dataset {
            fix(&mut d.edges);
            if let Some(p) = &mut d.profiles {
                fix(p);
            }
            if let Some(p) = &mut d.labels {
                fix(p);
            }
        }
        if let Some(p) = &mut self.communities.categories {
            fix(p);
        }
        if let Some(p) = &mut self.out_dir {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.input.world, &self.input.dataset) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(PipelineError::Config(
                    "exactly one input source is required: [input.world] or [input.dataset]".into(),
                ))
            }
            (Some(w), None) => {
                if w.path.is_some() == w.spec.is_some() {
                    return Err(PipelineError::Config(
                        "[input.world] needs exactly one of `path` or `spec`".into(),
                    ));
                }
            }
            (None, Some(_)) => {}
        }
        if self.crawl.seeds == 0 {
            return Err(PipelineError::Config(
                "crawl.seeds must be at least 1".into(),
            ));
        }
        if self.evaluation.folds < 2 {
            return Err(PipelineError::Config(
                "evaluation.folds must be at least 2".into(),
            ));
        }
        ClassifierKind::parse_list(&self.evaluation.classifiers)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        for f in &self.export.formats {
            f.parse::<ExportFormat>()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Digest of the canonical serialized configuration.
    pub fn run_id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        sha256_hex(canonical.as_bytes())[..16].to_string()
    }
}

/// Loads an edge list with optional profiles and labels; labels must refer
/// to nodes of the graph.
pub fn import_dataset(
    edges: &Path,
    profiles: Option<&Path>,
    labels: Option<&Path>,
) -> Result<(SocialGraph, Option<LabelTable>), crate::graph::GraphError> {
    let g = load_graph(edges, profiles)?;
    let labels = labels.map(LabelTable::load).transpose()?;
    if let Some(l) = &labels {
        l.check_against(&g)?;
    }
    Ok((g, labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run_id: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub completed_stages: Vec<String>,
    pub failed_stage: Option<String>,
    pub notices: Vec<String>,
    pub artifacts: Vec<ArtifactEntry>,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub crawl_stats: Option<CrawlStats>,
    pub eval: EvalReport,
}

struct Run {
    dir: PathBuf,
    run_id: String,
    manifest: Manifest,
}

impl Run {
    fn write(&mut self, rel: &str, body: &str) -> Result<(), PipelineError> {
        let stamped = stamp(rel, &self.run_id, body);
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.display().to_string(),
                source,
            })?;
        }
        std::fs::write(&path, stamped.as_bytes()).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.manifest.artifacts.push(ArtifactEntry {
            path: rel.to_string(),
            sha256: sha256_hex(stamped.as_bytes()),
        });
        Ok(())
    }

    fn done(&mut self, stage: &str) {
        self.manifest.completed_stages.push(stage.to_string());
    }

    fn notice(&mut self, msg: String) {
        self.manifest.notices.push(msg);
    }

    fn finish(&mut self) -> Result<(), PipelineError> {
        let text =
            serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, text).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Prepends the run marker in a form the artifact's own parser skips.
fn stamp(name: &str, run_id: &str, body: &str) -> String {
    if name.ends_with(".graphml") {
        match body.split_once('\n') {
            Some((decl, rest)) if decl.starts_with("<?xml") => {
                format!("{decl}\n<!-- run: {run_id} -->\n{rest}")
            }
            _ => format!("<!-- run: {run_id} -->\n{body}"),
        }
    } else {
        format!("# run: {run_id}\n{body}")
    }
}

const STAGE_NAMES: [&str; 5] = ["world", "crawl", "evaluate", "classify", "anonymize"];

/// Runs every stage, writing artifacts under `out_dir` (which overrides the
/// config's `out_dir`). On failure the artifacts written so far are kept and
/// the manifest records the failed stage.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineReport, PipelineError> {
    cfg.validate()?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| PipelineError::Config("no output directory given".into()))?;
    std::fs::create_dir_all(&dir).map_err(|source| PipelineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let run_id = cfg.run_id();
    let manifest = Manifest {
        tool: "orgmine".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run_id: run_id.clone(),
        config_sha256: sha256_hex(
            serde_json::to_string(cfg)
                .expect("config serializes")
                .as_bytes(),
        ),
        seed: cfg.seed,
        stage_seeds: STAGE_NAMES
            .iter()
            .map(|s| (s.to_string(), derive_seed(cfg.seed, s)))
            .collect(),
        completed_stages: Vec::new(),
        failed_stage: None,
        notices: Vec::new(),
        artifacts: Vec::new(),
    };
    let mut run = Run {
        dir,
        run_id,
        manifest,
    };
    let result = run_stages(cfg, &mut run);
    if let Err(e) = &result {
        run.manifest.failed_stage = Some(e.stage().unwrap_or("io").to_string());
    }
    run.finish()?;
    let (crawl_stats, eval) = result?;
    Ok(PipelineReport {
        out_dir: run.dir.clone(),
        manifest: run.manifest,
        crawl_stats,
        eval,
    })
}

fn run_stages(
    cfg: &PipelineConfig,
    run: &mut Run,
) -> Result<(Option<CrawlStats>, EvalReport), PipelineError> {
    let seed = |stage: &str| derive_seed(cfg.seed, stage);

    // Acquire.
    let (graph, labels, crawl_stats) = match (&cfg.input.world, &cfg.input.dataset) {
        (Some(w), None) => {
            let mut spec = match (&w.path, &w.spec) {
                (Some(p), None) => WorldSpec::load(p).map_err(stage_err("world"))?,
                (None, Some(s)) => s.clone(),
                _ => unreachable!("validated"),
            };
            spec.rng_seed = seed("world");
            let world = generate_world(&spec).map_err(stage_err("world"))?;
            run.write("world/truth.csv", &world.truth_csv())?;
            run.done("world");

            let org = spec
                .orgs
                .get(cfg.crawl.org)
                .ok_or_else(|| PipelineError::Stage {
                    stage: "crawl",
                    message: format!("world has no organization {}", cfg.crawl.org),
                })?;
            let members = world.org_members(cfg.crawl.org);
            let mut rng = ChaCha8Rng::seed_from_u64(seed("crawl"));
            let seeds: Vec<_> = members
                .choose_multiple(&mut rng, cfg.crawl.seeds.min(members.len()))
                .copied()
                .collect();
            let keywords = if cfg.crawl.keywords.is_empty() {
                org.name_keywords.clone()
            } else {
                cfg.crawl.keywords.clone()
            };
            let mut cc = CrawlConfig::new(seeds, keywords, cfg.crawl.version);
            cc.window_size = cfg.crawl.window_size;
            cc.max_fetches = cfg.crawl.max_fetches;
            cc.concurrency_width = cfg.crawl.concurrency_width;
            let src = world.source();
            let out = crawl(&src, &cc).map_err(stage_err("crawl"))?;
            let stats = out.stats.clone();
            run.write("crawl/stats.csv", &stats.to_csv(Some(members.len())))?;
            run.write("crawl/graph.edges", &write_edge_list(&out.graph))?;
            run.write("crawl/graph.profiles", &write_profiles(&out.graph))?;
            // Ground truth stands in for manual inspection of crawled profiles.
            let labels = LabelTable::from_profiles(&out.graph);
            run.write("crawl/labels.csv", &labels.to_csv())?;
            run.done("crawl");
            (out.graph, Some(labels), Some(stats))
        }
        (None, Some(d)) => {
            let (g, labels) = import_dataset(&d.edges, d.profiles.as_deref(), d.labels.as_deref())
                .map_err(stage_err("import"))?;
            run.write("input/graph.edges", &write_edge_list(&g))?;
            if labels.is_none() {
                run.notice(
                    "no labels supplied: ranking, hidden-manager and classifier stages skipped"
                        .into(),
                );
            }
            run.done("import");
            (g, labels, None)
        }
        _ => unreachable!("validated"),
    };
    if graph.is_empty() {
        return Err(PipelineError::Stage {
            stage: "centrality",
            message: "acquired graph has no nodes".into(),
        });
    }

    // Centrality.
    let table: CentralityTable<f64> =
        centrality_table(&graph, &cfg.centrality).map_err(stage_err("centrality"))?;
    for (m, e) in table.gaps() {
        run.notice(format!("centrality measure {m} unavailable: {e}"));
    }
    run.write("centrality.csv", &table.to_csv(false))?;
    run.done("centrality");

    // Supervised stages.
    let mut eval = EvalReport::default();
    match labels.as_ref().filter(|l| !l.is_empty()) {
        None => {}
        Some(labels) => {
            eval.precision = ranking_report(&table, labels, &Column::FEATURES, &cfg.ranking.ks)
                .map_err(stage_err("rank"))?;
            run.write("leadership/ranking.csv", &eval.precision_csv())?;
            let k = cfg.ranking.hidden_k.min(table.len());
            let ranked = Column::FEATURES
                .iter()
                .filter(|c| table.column(**c).is_some())
                .map(|&c| RankedList::from_table(&table, c, Some(labels)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(stage_err("rank"))?;
            eval.hidden = hidden_manager_report(&ranked, labels, k).map_err(stage_err("rank"))?;
            run.write("leadership/hidden_managers.csv", &eval.hidden_csv())?;
            run.done("rank");

            let kinds = ClassifierKind::parse_list(&cfg.evaluation.classifiers)
                .map_err(stage_err("evaluate"))?;
            match crate::leadership::labeled_instances(&table, labels) {
                Err(e) => run.notice(format!("classifier evaluation skipped: {e}")),
                Ok(data) => {
                    let managers = data.iter().filter(|d| d.is_manager).count();
                    if data.len() < cfg.evaluation.folds || managers == 0 || managers == data.len()
                    {
                        run.notice(format!(
                            "classifier evaluation skipped: {} labeled instances ({managers} managers) cannot fill {} stratified folds",
                            data.len(),
                            cfg.evaluation.folds
                        ));
                    } else {
                        for kind in &kinds {
                            let r = cross_validate(
                                *kind,
                                &data,
                                cfg.evaluation.folds,
                                seed("evaluate"),
                            )
                            .map_err(stage_err("evaluate"))?;
                            if !r.fallback_folds.is_empty() {
                                run.notice(format!(
                                    "{}: folds {:?} trained on a single class and used the majority rule",
                                    r.classifier, r.fallback_folds
                                ));
                            }
                            eval.classifiers.push(r);
                        }
                        run.write("leadership/classifiers.csv", &eval.classifier_csv())?;
                        run.done("evaluate");
                    }
                    if labels.len() < table.len() && !eval.classifiers.is_empty() {
                        let outcome = classify_all(&kinds, &table, labels, seed("classify"))
                            .map_err(stage_err("classify"))?;
                        run.write("leadership/predictions.csv", &predictions_csv(&outcome))?;
                        run.notice(format!(
                            "estimated manager fraction {:.4} ({} unlabeled nodes classified)",
                            outcome.estimated_manager_fraction,
                            outcome.predictions.len()
                        ));
                        run.done("classify");
                    }
                }
            }
        }
    }

    // Communities.
    let partition = detect_communities::<f64>(&graph);
    let categories = match &cfg.communities.categories {
        Some(p) => CategoryMap::load(p).map_err(stage_err("communities"))?,
        None => CategoryMap::default(),
    };
    let role_cfg = RoleConfig {
        min_support: cfg.communities.min_support,
        min_labeled: cfg.communities.min_labeled,
        categories,
    };
    let roles = infer_roles(&graph, &partition, labels.as_ref(), &role_cfg);
    let report = community_report(&graph, &partition, &roles);
    run.write("communities/partition.csv", &partition.to_csv())?;
    let mut summary = report_csv(&report);
    let _ = writeln!(summary, "# modularity: {}", partition.modularity());
    run.write("communities/report.csv", &summary)?;
    run.done("communities");

    // Anonymized export.
    let mut annotated = graph.clone();
    if cfg.export.retain_labels {
        for (id, c) in partition.assignment() {
            annotated.set_attr(*id, "community", c.to_string());
        }
    }
    let (anon, map) = anonymize(&annotated, seed("anonymize"), cfg.export.retain_labels);
    for f in &cfg.export.formats {
        let fmt: ExportFormat = f.parse().map_err(stage_err("export"))?;
        for file in export_graph(&anon, fmt) {
            let body = String::from_utf8(file.bytes).expect("exports are UTF-8");
            run.write(&format!("export/{}", file.name), &body)?;
        }
    }
    if cfg.export.retain_labels {
        if let Some(l) = &labels {
            run.write("export/labels.csv", &l.remap(&map).to_csv())?;
        }
    }
    run.done("export");
    Ok((crawl_stats, eval))
}

/// Re-hashes every artifact listed in a run directory's manifest and returns
/// the paths whose content no longer matches.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut bad = Vec::new();
    for a in &manifest.artifacts {
        match std::fs::read(dir.join(&a.path)) {
            Ok(bytes) if sha256_hex(&bytes) == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}
