use std::collections::BTreeMap;
use std::path::Path;

use orgmine::graph::anonymize;
use orgmine::graph::io::{load_graph, write_edge_list};
use orgmine::pipeline::{
    import_dataset, run_pipeline, verify_manifest, PipelineConfig, MANIFEST_NAME,
};

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn tiny_world_runs_end_to_end() {
    let cfg = PipelineConfig::load(&configs().join("tiny-pipeline.toml")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let report = run_pipeline(&cfg, Some(out.path())).unwrap();
    for f in [
        "crawl/graph.edges",
        "crawl/stats.csv",
        "centrality.csv",
        "leadership/ranking.csv",
        "leadership/hidden_managers.csv",
        "leadership/classifiers.csv",
        "communities/partition.csv",
        "communities/report.csv",
        "export/graph.edges",
        MANIFEST_NAME,
    ] {
        assert!(out.path().join(f).is_file(), "missing {f}");
    }
    assert!(report.manifest.failed_stage.is_none());
    assert!(verify_manifest(out.path()).unwrap().is_empty());
    let marker = format!("# run: {}", report.manifest.run_id);
    for a in &report.manifest.artifacts {
        let text = std::fs::read_to_string(out.path().join(&a.path)).unwrap();
        assert!(
            text.contains(&report.manifest.run_id),
            "{} lacks run id",
            a.path
        );
        if !a.path.ends_with(".graphml") {
            assert!(text.starts_with(&marker));
        }
    }

    // Tampering is detected.
    let victim = out.path().join("centrality.csv");
    let mut text = std::fs::read_to_string(&victim).unwrap();
    text.push_str("\n");
    std::fs::write(&victim, text).unwrap();
    assert_eq!(
        verify_manifest(out.path()).unwrap(),
        vec!["centrality.csv".to_string()]
    );
}

#[test]
fn rerun_is_byte_identical() {
    let cfg = PipelineConfig::load(&configs().join("tiny-pipeline.toml")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&cfg, Some(a.path())).unwrap();
    run_pipeline(&cfg, Some(b.path())).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn unlabeled_dataset_skips_supervised_stages() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.edges");
    std::fs::write(&edges, "0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n2 3\n").unwrap();
    let text = format!(
        "seed = 1\n[input.dataset]\nedges = {:?}\n",
        edges.display().to_string()
    );
    let cfg = PipelineConfig::from_toml(&text).unwrap();
    let out = dir.path().join("run");
    let report = run_pipeline(&cfg, Some(&out)).unwrap();
    assert!(report
        .manifest
        .notices
        .iter()
        .any(|n| n.contains("skipped")));
    assert!(out.join("centrality.csv").is_file());
    assert!(out.join("communities/partition.csv").is_file());
    assert!(!out.join("leadership/ranking.csv").exists());
    assert!(!report.manifest.completed_stages.iter().any(|s| s == "rank"));
}

#[test]
fn failing_stage_is_named_and_earlier_artifacts_survive() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.edges");
    std::fs::write(&edges, "0 1\n1 2\n").unwrap();
    let cats = dir.path().join("missing-categories.toml");
    let text = format!(
        "seed = 1\n[input.dataset]\nedges = {:?}\n[communities]\ncategories = {:?}\n",
        edges.display().to_string(),
        cats.display().to_string()
    );
    let cfg = PipelineConfig::from_toml(&text).unwrap();
    let out = dir.path().join("run");
    let err = run_pipeline(&cfg, Some(&out)).unwrap_err();
    assert_eq!(err.stage(), Some("communities"));
    assert!(out.join("centrality.csv").is_file());
    let manifest = std::fs::read_to_string(out.join(MANIFEST_NAME)).unwrap();
    assert!(manifest.contains("\"failed_stage\": \"communities\""));
}

#[test]
fn import_examples() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.edges");
    std::fs::write(&edges, "1 2\n2 3\n3 1\n").unwrap();
    let (g, labels) = import_dataset(&edges, None, None).unwrap();
    assert_eq!(g.edge_count(), 3);
    assert!(labels.is_none());

    let labels = dir.path().join("labels.csv");
    std::fs::write(
        &labels,
        "node,is_manager,discloses_position\n1,true,true\n3,false,false\n",
    )
    .unwrap();
    let (_, l) = import_dataset(&edges, None, Some(&labels)).unwrap();
    assert_eq!(l.unwrap().len(), 2);
    std::fs::write(
        &labels,
        "node,is_manager,discloses_position\n1,true,true\n99,false,false\n",
    )
    .unwrap();
    let err = import_dataset(&edges, None, Some(&labels)).unwrap_err();
    assert!(err.to_string().contains("99"), "{err}");

    let (anon, _) = anonymize(&g, 5, false);
    let again = dir.path().join("anon.edges");
    std::fs::write(&again, write_edge_list(&anon)).unwrap();
    let back = load_graph(&again, None).unwrap();
    let (d1, d2) = (g.degree_sequence(), back.degree_sequence());
    assert_eq!(
        (g.node_count(), g.edge_count(), d1),
        (back.node_count(), back.edge_count(), d2)
    );
}
