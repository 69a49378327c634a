//! `orgmine` command-line front end.
//!
//! Every subcommand option can also be set in a TOML file passed with
//! `--config`, under a table named after the subcommand; flags given on the
//! command line win over the file.

mod options;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orgmine::centrality::Column;
use orgmine::centrality::{centrality_table, CentralityConfig, CommunicabilityMethod, Measure};
use orgmine::community::{
    community_report, detect_communities, infer_roles, report_csv, CategoryMap, RoleConfig,
};
use orgmine::crawler::{resume, save_state, CrawlConfig, CrawlState, CrawlVersion, FrontierMode};
use orgmine::graph::io::{
    export_graph, load_graph, parse_graphml, write_edge_list, write_profiles, ExportFormat,
};
use orgmine::graph::{anonymize, LabelTable, SocialGraph};
use orgmine::leadership::{
    cross_validate, hidden_manager_report, labeled_instances, ranking_report, ClassifierKind,
    EvalReport, RankedList,
};
use orgmine::pipeline::{run_pipeline, verify_manifest, Manifest, PipelineConfig, MANIFEST_NAME};
use orgmine::synthworld::{generate_world, FetchSource, World, WorldSpec};
use orgmine::util::derive_seed;
use orgmine::CentralityTable;

use options::{
    load_config, merge, CentralityArgs, CommunitiesArgs, CrawlArgs, EvaluateArgs, ExportArgs,
    GenerateArgs, PipelineArgs, RankArgs, ReportArgs,
};

/// Environment variable naming the root directory for outputs whose
/// location is not given explicitly.
const OUT_ENV: &str = "ORGMINE_OUT";

#[derive(Parser)]
#[command(
    name = "orgmine",
    version,
    about = "Mine organizational structure from social graphs"
)]
struct Cli {
    /// TOML file with one table per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world with ground truth.
    Generate(GenerateArgs),
    /// Crawl an organization out of a synthetic world, or resume a crawl.
    Crawl(CrawlArgs),
    /// Compute centrality measures for every node.
    Centrality(CentralityArgs),
    /// Precision@k and hidden-manager tables for each measure.
    Rank(RankArgs),
    /// Cross-validate leadership classifiers on centrality features.
    Evaluate(EvaluateArgs),
    /// Detect communities and infer their roles.
    Communities(CommunitiesArgs),
    /// Verify a run directory and print its tables.
    Report(ReportArgs),
    /// Write an anonymized copy of a graph.
    Export(ExportArgs),
    /// Run every stage from one pipeline config.
    Pipeline(PipelineArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = cli.config.as_deref().map(load_config).transpose()?;
    let file = file.as_ref();
    match cli.command {
        Command::Generate(a) => generate(merge(a, file, "generate")?),
        Command::Crawl(a) => crawl_cmd(merge(a, file, "crawl")?),
        Command::Centrality(a) => centrality(merge(a, file, "centrality")?),
        Command::Rank(a) => rank(merge(a, file, "rank")?),
        Command::Evaluate(a) => evaluate(merge(a, file, "evaluate")?),
        Command::Communities(a) => communities(merge(a, file, "communities")?),
        Command::Report(a) => report(merge(a, file, "report")?),
        Command::Export(a) => export(merge(a, file, "export")?),
        Command::Pipeline(a) => pipeline(merge(a, file, "pipeline")?),
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("orgmine-out"), PathBuf::from)
}

fn out_dir(explicit: Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let dir = explicit.unwrap_or_else(|| out_root().join(name));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("missing required option --{flag}"))
}

fn read_graph(path: &Path, profiles: Option<&Path>) -> Result<SocialGraph> {
    let is_graphml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("graphml"));
    let g = if is_graphml {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        parse_graphml(&text)?
    } else {
        load_graph(path, profiles)?
    };
    Ok(g)
}

fn read_labels(path: Option<&Path>, g: Option<&SocialGraph>) -> Result<Option<LabelTable>> {
    let Some(path) = path else { return Ok(None) };
    let labels = LabelTable::load(path)?;
    if let Some(g) = g {
        labels.check_against(g)?;
    }
    Ok(Some(labels))
}

fn parse_ks(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|k| {
            k.trim()
                .parse::<usize>()
                .with_context(|| format!("bad cutoff `{k}`"))
        })
        .collect()
}

fn load_world(spec: &Path, seed: Option<u64>) -> Result<World> {
    let mut spec = WorldSpec::load(spec)?;
    if let Some(s) = seed {
        spec.rng_seed = s;
    }
    Ok(generate_world(&spec)?)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let world = load_world(&required(a.spec, "spec")?, a.seed)?;
    let dir = out_dir(a.out, "world")?;
    write(&dir.join("world.edges"), &write_edge_list(&world.graph))?;
    write(&dir.join("world.profiles"), &write_profiles(&world.graph))?;
    write(&dir.join("truth.csv"), &world.truth_csv())?;
    write(&dir.join("spec.toml"), &world.spec.to_toml())?;
    println!(
        "world: {} nodes, {} edges, fingerprint {}",
        world.graph.node_count(),
        world.graph.edge_count(),
        world.spec.fingerprint()
    );
    Ok(())
}

fn read_keywords(a: &CrawlArgs, world: &World, org: usize) -> Result<Vec<String>> {
    if let Some(path) = &a.keywords {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect());
    }
    if let Some(list) = &a.keyword {
        return Ok(list.split(',').map(|k| k.trim().to_string()).collect());
    }
    let o = world
        .spec
        .orgs
        .get(org)
        .ok_or_else(|| anyhow!("world has no organization {org}"))?;
    Ok(o.name_keywords.clone())
}

fn crawl_cmd(a: CrawlArgs) -> Result<()> {
    let world = load_world(&required(a.world.clone(), "world")?, a.world_seed)?;
    let src = world.source();
    let org = a.org.unwrap_or(0);
    let mut state = match &a.resume {
        Some(path) => resume(path, &src)?,
        None => {
            let seeds = match &a.seeds {
                Some(list) => list
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<u64>()
                            .map(orgmine::NodeId)
                            .with_context(|| format!("bad seed id `{s}`"))
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => {
                    let members = world.org_members(org);
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(a.seed.unwrap_or(0), "crawl"));
                    members
                        .choose_multiple(&mut rng, a.seed_count.unwrap_or(3))
                        .copied()
                        .collect()
                }
            };
            let version = a.version.as_deref().unwrap_or("v1");
            let (version, mode) = match version {
                "bfs" => (CrawlVersion::V1, FrontierMode::Fifo),
                v => (v.parse::<CrawlVersion>()?, FrontierMode::Priority),
            };
            let mut cfg = CrawlConfig::new(seeds, read_keywords(&a, &world, org)?, version);
            if let Some(w) = a.window {
                cfg.window_size = w;
            }
            cfg.max_fetches = a.budget;
            if let Some(w) = a.width {
                cfg.concurrency_width = w;
            }
            CrawlState::new(cfg, mode, src.fingerprint())?
        }
    };
    state.run(&src, a.steps)?;
    let dir = out_dir(a.out, "crawl")?;
    let g = state.collected_graph();
    let stats = state.stats();
    let org_size = world.org_members(org).len();
    write(&dir.join("graph.edges"), &write_edge_list(&g))?;
    write(&dir.join("graph.profiles"), &write_profiles(&g))?;
    write(
        &dir.join("labels.csv"),
        &LabelTable::from_profiles(&g).to_csv(),
    )?;
    write(&dir.join("stats.csv"), &stats.to_csv(Some(org_size)))?;
    let state_path = dir.join("state.json");
    save_state(&state, &state_path)?;
    eprintln!("wrote {}", state_path.display());
    print!("{}", stats.to_csv(Some(org_size)));
    if !state.is_finished() {
        eprintln!(
            "crawl paused after {} fetches; continue with the same world options and --resume {}",
            state.fetch_count(),
            state_path.display()
        );
    }
    Ok(())
}

fn centrality(a: CentralityArgs) -> Result<()> {
    let g = read_graph(&required(a.graph, "graph")?, a.profiles.as_deref())?;
    let mut cfg = CentralityConfig::default();
    if let Some(m) = &a.measures {
        cfg.measures = Measure::parse_list(m)?;
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(i) = a.max_iter {
        cfg.max_iter = i;
    }
    if let Some(d) = a.damping {
        cfg.damping = d;
    }
    if let Some(c) = a.cc_cap {
        cfg.cc_node_cap = c;
    }
    match a.cc_method.as_deref() {
        None | Some("dense") => {}
        Some("lanczos") => {
            cfg.cc_method = CommunicabilityMethod::Lanczos {
                steps: a.lanczos_steps.unwrap_or(30),
            }
        }
        Some(other) => bail!("unknown communicability method `{other}` (dense or lanczos)"),
    }
    let table: CentralityTable = centrality_table(&g, &cfg)?;
    for (m, e) in table.gaps() {
        eprintln!("warning: {m} unavailable: {e}");
    }
    let text = table.to_csv(a.timings.unwrap_or(false));
    match a.out {
        Some(p) => write(&p, &text),
        None => write(&out_dir(None, "centrality")?.join("table.csv"), &text),
    }
}

fn read_table(path: &Path) -> Result<CentralityTable> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(CentralityTable::from_csv(&text)?)
}

fn rank(a: RankArgs) -> Result<()> {
    let table = read_table(&required(a.table, "table")?)?;
    let labels = read_labels(Some(&required(a.labels, "labels")?), None)?.expect("path given");
    let ks = parse_ks(a.k.as_deref().unwrap_or("10,20"))?;
    let mut report = EvalReport {
        precision: ranking_report(&table, &labels, &Column::FEATURES, &ks)?,
        ..EvalReport::default()
    };
    let hidden_k = a.hidden_k.unwrap_or(20).min(table.len());
    let ranked = Column::FEATURES
        .iter()
        .filter(|c| table.column(**c).is_some())
        .map(|&c| RankedList::from_table(&table, c, Some(&labels)))
        .collect::<Result<Vec<_>, _>>()?;
    report.hidden = hidden_manager_report(&ranked, &labels, hidden_k)?;
    let dir = out_dir(a.out, "rank")?;
    write(&dir.join("ranking.csv"), &report.precision_csv())?;
    write(&dir.join("hidden_managers.csv"), &report.hidden_csv())?;
    print!("{}\n{}", report.precision_csv(), report.hidden_csv());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let table = read_table(&required(a.table, "table")?)?;
    let labels = read_labels(Some(&required(a.labels, "labels")?), None)?.expect("path given");
    let kinds = ClassifierKind::parse_list(a.classifiers.as_deref().unwrap_or("all"))?;
    let data = labeled_instances(&table, &labels)?;
    let folds = a.folds.unwrap_or(10);
    let seed = a.seed.unwrap_or(0);
    let mut report = EvalReport::default();
    for kind in kinds {
        let r = cross_validate(kind, &data, folds, seed)?;
        if !r.fallback_folds.is_empty() {
            eprintln!(
                "note: {} folds {:?} had one training class and used the majority rule",
                r.classifier, r.fallback_folds
            );
        }
        report.classifiers.push(r);
    }
    let text = report.classifier_csv();
    match a.out {
        Some(p) => write(&p, &text)?,
        None => write(&out_dir(None, "evaluate")?.join("classifiers.csv"), &text)?,
    }
    print!("{text}");
    Ok(())
}

fn communities(a: CommunitiesArgs) -> Result<()> {
    let g = read_graph(&required(a.graph, "graph")?, a.profiles.as_deref())?;
    let labels = read_labels(a.labels.as_deref(), Some(&g))?;
    let (partition_path, report_path) = match a.out.as_deref() {
        Some(spec) => {
            let (p, r) = spec
                .split_once(',')
                .ok_or_else(|| anyhow!("--out expects `partition.csv,report.csv`"))?;
            (PathBuf::from(p.trim()), PathBuf::from(r.trim()))
        }
        None => {
            let dir = out_dir(None, "communities")?;
            (dir.join("partition.csv"), dir.join("report.csv"))
        }
    };
    let mut cfg = RoleConfig::default();
    if let Some(s) = a.min_support {
        cfg.min_support = s;
    }
    if let Some(l) = a.min_labeled {
        cfg.min_labeled = l;
    }
    if let Some(p) = &a.categories {
        cfg.categories = CategoryMap::load(p)?;
    }
    let partition = detect_communities::<f64>(&g);
    let roles = infer_roles(&g, &partition, labels.as_ref(), &cfg);
    let rows = community_report(&g, &partition, &roles);
    write(&partition_path, &partition.to_csv())?;
    let text = report_csv(&rows);
    write(&report_path, &text)?;
    println!(
        "modularity {:.6}, {} communities",
        partition.modularity(),
        partition.community_count()
    );
    print!("{text}");
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let dir = required(a.dir, "dir")?;
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))
        .with_context(|| format!("reading {}", dir.join(MANIFEST_NAME).display()))?;
    let manifest: Manifest = serde_json::from_str(&text).context("parsing manifest")?;
    println!(
        "run {} (seed {}, {} {})",
        manifest.run_id, manifest.seed, manifest.tool, manifest.version
    );
    println!("stages: {}", manifest.completed_stages.join(", "));
    for n in &manifest.notices {
        println!("notice: {n}");
    }
    for table in [
        "crawl/stats.csv",
        "leadership/ranking.csv",
        "leadership/hidden_managers.csv",
        "leadership/classifiers.csv",
        "communities/report.csv",
    ] {
        if let Ok(body) = std::fs::read_to_string(dir.join(table)) {
            println!("\n== {table}");
            body.lines()
                .filter(|l| !l.starts_with("# run:"))
                .for_each(|l| println!("{l}"));
        }
    }
    let bad = verify_manifest(&dir)?;
    if !bad.is_empty() {
        bail!("artifacts do not match the manifest: {}", bad.join(", "));
    }
    if let Some(stage) = &manifest.failed_stage {
        bail!("run failed at stage `{stage}`");
    }
    println!(
        "\nmanifest verified: {} artifacts",
        manifest.artifacts.len()
    );
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let g = read_graph(&required(a.graph, "graph")?, a.profiles.as_deref())?;
    let labels = read_labels(a.labels.as_deref(), Some(&g))?;
    let retain = a.retain_labels.unwrap_or(false);
    let (anon, map) = anonymize(&g, derive_seed(a.seed.unwrap_or(0), "anonymize"), retain);
    let dir = out_dir(a.out, "export")?;
    for f in a.format.as_deref().unwrap_or("edge-list").split(',') {
        let fmt: ExportFormat = f.trim().parse()?;
        for file in export_graph(&anon, fmt) {
            let text = String::from_utf8(file.bytes).expect("exports are UTF-8");
            write(&dir.join(&file.name), &text)?;
        }
    }
    if let (true, Some(l)) = (retain, labels) {
        write(&dir.join("labels.csv"), &l.remap(&map).to_csv())?;
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let path = required(a.pipeline_config, "pipeline config")?;
    let mut cfg = PipelineConfig::load(&path)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = a
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| out_root().join("pipeline"));
    let report = run_pipeline(&cfg, Some(&out))?;
    for n in &report.manifest.notices {
        eprintln!("notice: {n}");
    }
    println!(
        "run {} complete: {} artifacts in {}",
        report.manifest.run_id,
        report.manifest.artifacts.len(),
        report.out_dir.display()
    );
    Ok(())
}
