use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_orgmine"));
    c.env_remove("ORGMINE_OUT");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn crawl_into(dir: &Path, extra: &[&str]) -> Output {
    let world = configs().join("tiny-world.toml");
    bin()
        .args(["crawl", "--world"])
        .arg(&world)
        .args([
            "--world-seed",
            "5",
            "--seed-count",
            "3",
            "--seed",
            "2",
            "--budget",
            "45",
            "--out",
        ])
        .arg(dir)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn stage_by_stage_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(bin()
        .args(["generate", "--spec"])
        .arg(configs().join("tiny-world.toml"))
        .args(["--seed", "5", "--out"])
        .arg(d.join("world"))
        .output()
        .unwrap());
    assert!(d.join("world/truth.csv").is_file());

    let crawl = d.join("crawl");
    let stats = ok(crawl_into(&crawl, &[]));
    assert!(stats.starts_with("fetched,confirmed,not_found,precision"));

    let table = d.join("table.csv");
    ok(bin()
        .args(["centrality", "--graph"])
        .arg(crawl.join("graph.edges"))
        .args(["--measures", "all", "--out"])
        .arg(&table)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("node,dg,cl,bc,hits_authority,hits_hub,pr,ec,cc,lc\n"));
    assert!(text.contains("# provenance: pr ok"));

    let ranked = ok(bin()
        .args(["rank", "--table"])
        .arg(&table)
        .arg("--labels")
        .arg(crawl.join("labels.csv"))
        .args(["--k", "10,20", "--out"])
        .arg(d.join("rank"))
        .output()
        .unwrap());
    assert!(ranked.starts_with("measure,p@10,p@20\n"));

    let cv = ok(bin()
        .args(["evaluate", "--table"])
        .arg(&table)
        .arg("--labels")
        .arg(crawl.join("labels.csv"))
        .args([
            "--classifiers",
            "zr,lr",
            "--folds",
            "5",
            "--seed",
            "1",
            "--out",
        ])
        .arg(d.join("cv.csv"))
        .output()
        .unwrap());
    assert!(cv.starts_with("classifier,accuracy,f_measure,auc"));
    assert!(cv.contains("\nzero-r,"));

    let out = format!(
        "{},{}",
        d.join("p.csv").display(),
        d.join("r.csv").display()
    );
    let report = ok(bin()
        .args(["communities", "--graph"])
        .arg(crawl.join("graph.edges"))
        .arg("--profiles")
        .arg(crawl.join("graph.profiles"))
        .arg("--labels")
        .arg(crawl.join("labels.csv"))
        .args(["--out", &out])
        .output()
        .unwrap());
    assert!(report.contains("community,users,links,with_position,classified,managers,description"));
    assert!(std::fs::read_to_string(d.join("p.csv"))
        .unwrap()
        .starts_with("node,community\n"));

    ok(bin()
        .args(["export", "--graph"])
        .arg(crawl.join("graph.edges"))
        .args(["--format", "graphml,dot,csv", "--out"])
        .arg(d.join("export"))
        .output()
        .unwrap());
    for f in ["graph.graphml", "graph.dot", "nodes.csv", "edges.csv"] {
        assert!(d.join("export").join(f).is_file(), "{f}");
    }
}

#[test]
fn resumed_crawl_matches_uninterrupted() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    let rest = tmp.path().join("rest");
    ok(crawl_into(&full, &[]));
    ok(crawl_into(&part, &["--steps", "12"]));
    let state = part.join("state.json");
    ok(crawl_into(&rest, &["--resume", state.to_str().unwrap()]));
    for f in ["graph.edges", "graph.profiles", "stats.csv", "state.json"] {
        assert_eq!(
            std::fs::read(full.join(f)).unwrap(),
            std::fs::read(rest.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn config_file_supplies_options_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let edges = d.join("g.edges");
    std::fs::write(&edges, "0 1\n1 2\n2 0\n2 3\n").unwrap();
    let cfg = d.join("orgmine.toml");
    std::fs::write(
        &cfg,
        format!(
            "[centrality]\ngraph = {:?}\nmeasures = \"dg,pr\"\nout = {:?}\n",
            edges.display().to_string(),
            d.join("from_file.csv").display().to_string()
        ),
    )
    .unwrap();
    ok(bin()
        .arg("--config")
        .arg(&cfg)
        .arg("centrality")
        .output()
        .unwrap());
    let text = std::fs::read_to_string(d.join("from_file.csv")).unwrap();
    assert!(text.starts_with("node,dg,pr\n"));

    ok(bin()
        .arg("--config")
        .arg(&cfg)
        .args(["centrality", "--measures", "cl"])
        .output()
        .unwrap());
    let text = std::fs::read_to_string(d.join("from_file.csv")).unwrap();
    assert!(text.starts_with("node,cl\n"));

    std::fs::write(&cfg, "[centrality]\ngrpah = \"x\"\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("centrality")
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("g.edges");
    std::fs::write(&edges, "0 1\n1 2\n").unwrap();
    let root = tmp.path().join("root");
    ok(bin()
        .env("ORGMINE_OUT", &root)
        .args(["centrality", "--measures", "dg", "--graph"])
        .arg(&edges)
        .output()
        .unwrap());
    assert!(root.join("centrality/table.csv").is_file());
}

#[test]
fn pipeline_then_report_and_tamper_detection() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let out = ok(bin()
        .arg("pipeline")
        .arg(configs().join("tiny-pipeline.toml"))
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap());
    assert!(out.contains("complete"));
    let report = ok(bin().arg("report").arg("--dir").arg(&run).output().unwrap());
    assert!(report.contains("manifest verified"));

    let victim = run.join("communities/partition.csv");
    let mut text = std::fs::read_to_string(&victim).unwrap();
    text = text.replacen(",0\n", ",1\n", 1);
    std::fs::write(&victim, text).unwrap();
    let out = bin().arg("report").arg("--dir").arg(&run).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["centrality", "--graph"])
        .arg(tmp.path().join("missing.edges"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.edges"));

    let out = bin().args(["rank"]).output().unwrap();
    assert!(!out.status.success());

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[input]\n").unwrap();
    let out = bin()
        .arg("pipeline")
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
}
