//! Acceptance suite: one check per criterion, each printing a PASS or FAIL
//! line. Runs without the libtest harness so the lines always show; the
//! process exits nonzero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use orgmine::centrality::{
    betweenness_centrality, centrality_table, closeness_centrality, communicability_centrality,
    degree_centrality, eigenvector_centrality, hits, load_centrality, pagerank, CentralityConfig,
    Column, CommunicabilityMethod,
};
use orgmine::community::{
    adjusted_rand_index, detect_communities, infer_roles, modularity, RoleConfig,
};
use orgmine::crawler::{bfs_crawl, crawl, CrawlConfig, CrawlState, CrawlVersion, FrontierMode};
use orgmine::graph::{from_edges, LabelTable, NodeId, SocialGraph};
use orgmine::leadership::{
    accuracy, auc_rank, auc_trapezoid, cross_validate, cross_validate_with_predictions, f_measure,
    hidden_manager_report, labeled_instances, precision_at_k, stratified_folds, ClassifierKind,
    RankedList,
};
use orgmine::pipeline::{run_pipeline, PipelineConfig};
use orgmine::synthworld::{generate_world, FetchSource, OrgSpec, World, WorldSpec};
use orgmine::util::derive_seed;
use orgmine::CentralityTable;

/// Lower bound on (AUC - 0.5) for logistic regression and random forest on
/// the boost-3 world. Measured once over seeds 0..10 with
/// `--measure-margin`: every run reached AUC 1.0 (excess 0.5), since a
/// threefold degree boost separates managers outright. Frozen with 0.05
/// slack for platform float differences.
const PINNED_AUC_MARGIN: f64 = 0.45;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

// ---------------------------------------------------------------------------
// 1. Centrality oracles

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, err: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(err);
    };
    let graphs = 200;
    for i in 0..graphs {
        let n = rng.random_range(3..=30);
        let p = rng.random_range(0.05..0.6);
        let (g, edges) = random_graph(n, p, 1000 + i);
        let adj = adjacency_matrix(n, &edges);

        note(
            "dg",
            max_abs_diff(&degree_centrality::<f64>(&g), &degree(&adj)),
        );
        note(
            "cl",
            max_abs_diff(&closeness_centrality::<f64>(&g), &closeness(&adj)),
        );
        let exact: Vec<f64> = betweenness_exact(&adj)
            .iter()
            .map(|r| r.to_f64().unwrap())
            .collect();
        note(
            "bc",
            max_abs_diff(&betweenness_centrality::<f64>(&g), &exact),
        );
        note(
            "lc",
            max_abs_diff(&load_centrality::<f64>(&g), &load_flow(&adj)),
        );
        let pr =
            pagerank::<f64>(&g, 0.85, 1e-13, 100_000).map_err(|e| format!("graph {i}: {e}"))?;
        note("pr", max_abs_diff(&pr.scores, &pagerank_solve(&adj, 0.85)));
        let h = hits::<f64>(&g, 1e-13, 1_000_000).map_err(|e| format!("graph {i}: {e}"))?;
        note("hits", max_abs_diff(&h.authority, &hits_dense(&adj)));
        note("hits", max_abs_diff(&h.hub, &h.authority));
        if edges.is_empty() {
            if eigenvector_centrality::<f64>(&g, 1e-12, 1000).is_ok() {
                return Err(format!("graph {i}: eigenvector accepted an edgeless graph"));
            }
        } else {
            let ec = eigenvector_centrality::<f64>(&g, 1e-13, 1_000_000)
                .map_err(|e| format!("graph {i}: {e}"))?;
            note("ec", max_abs_diff(&ec.scores, &eigenvector_dense(&adj)));
        }
        let cc = communicability_centrality::<f64>(&g, CommunicabilityMethod::Dense, 20_000)
            .map_err(|e| format!("graph {i}: {e}"))?;
        // Subgraph centrality grows like exp(lambda_max); compare relatively.
        note("cc(rel)", max_rel_diff(&cc, &subgraph_taylor(&adj)));
    }
    let elapsed = start.elapsed();
    let summary = worst
        .iter()
        .map(|(k, v)| format!("{k}={v:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    let within = worst.values().all(|&e| e <= 1e-8);
    check(
        within && elapsed < Duration::from_secs(120),
        format!(
            "{graphs} graphs, worst error {summary}, {:.1}s",
            elapsed.as_secs_f64()
        ),
        format!(
            "worst error {summary} (limit 1e-8), {:.1}s (limit 120s)",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Hand-computed anchors

fn cycle(n: usize) -> SocialGraph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    from_edges(n, &edges).unwrap()
}

fn complete(n: usize) -> SocialGraph {
    let edges: Vec<_> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    from_edges(n, &edges).unwrap()
}

fn petersen() -> SocialGraph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    from_edges(10, &edges).unwrap()
}

fn hypercube(d: usize) -> SocialGraph {
    let n = 1 << d;
    let edges: Vec<_> = (0..n)
        .flat_map(|v| {
            (0..d)
                .map(move |b| (v, v ^ (1 << b)))
                .filter(|(u, w)| u < w)
        })
        .collect();
    from_edges(n, &edges).unwrap()
}

fn criterion_2() -> Outcome {
    let p3 = from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let cl = closeness_centrality::<f64>(&p3);
    let bc = betweenness_centrality::<f64>(&p3);
    let cl_ok = max_abs_diff(&cl, &[2.0 / 3.0, 1.0, 2.0 / 3.0]) < 1e-12;
    let bc_ok = max_abs_diff(&bc, &[0.0, 1.0, 0.0]) < 1e-12;
    if !(cl_ok && bc_ok) {
        return Err(format!("P3 closeness {cl:?}, betweenness {bc:?}"));
    }
    let k2 = from_edges(2, &[(0, 1)]).unwrap();
    let cc = communicability_centrality::<f64>(&k2, CommunicabilityMethod::Dense, 100).unwrap();
    if (cc[0] - 1f64.cosh()).abs() > 1e-6 || (cc[1] - 1f64.cosh()).abs() > 1e-6 {
        return Err(format!("K2 subgraph centrality {cc:?}"));
    }

    let transitive = [cycle(7), complete(6), petersen(), hypercube(4), cycle(40)];
    let mut worst_uniform: f64 = 0.0;
    for g in &transitive {
        let pr = pagerank::<f64>(g, 0.85, 1e-12, 10_000).unwrap().scores;
        let u = 1.0 / g.node_count() as f64;
        worst_uniform = worst_uniform.max(pr.iter().map(|x| (x - u).abs()).fold(0.0, f64::max));
    }

    let mut worst_sum: f64 = 0.0;
    let mut graphs: Vec<SocialGraph> = transitive.to_vec();
    graphs.push(p3);
    graphs.push(k2);
    for i in 0..200 {
        graphs.push(
            random_graph(
                3 + (i as usize % 28),
                0.05 + (i % 10) as f64 * 0.05,
                1000 + i,
            )
            .0,
        );
    }
    for g in &graphs {
        let pr = pagerank::<f64>(g, 0.85, 1e-10, 10_000).unwrap().scores;
        worst_sum = worst_sum.max((pr.iter().sum::<f64>() - 1.0).abs());
    }
    check(
        worst_uniform <= 1e-9 && worst_sum <= 1e-9,
        format!(
            "P3/K2 exact, PR uniform dev {worst_uniform:.1e}, PR sum dev {worst_sum:.1e} over {} graphs",
            graphs.len()
        ),
        format!("PR uniform dev {worst_uniform:.1e}, PR sum dev {worst_sum:.1e} (limit 1e-9)"),
    )
}

// ---------------------------------------------------------------------------
// 3. Modularity anchors

fn criterion_3() -> Outcome {
    let tri = from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
    let one: BTreeMap<NodeId, usize> = tri.node_ids().iter().map(|&id| (id, 0)).collect();
    let q_one: f64 = modularity(&tri, &one).unwrap();
    if q_one.abs() > 1e-12 {
        return Err(format!("single community Q = {q_one}"));
    }
    let p = detect_communities::<f64>(&tri);
    let exact = p.community_count() == 2
        && (0..3).all(|i| p.community_of(NodeId(i)) == p.community_of(NodeId(0)))
        && (3..6).all(|i| p.community_of(NodeId(i)) == p.community_of(NodeId(3)))
        && p.community_of(NodeId(0)) != p.community_of(NodeId(3));
    if !exact || (p.modularity() - 0.5).abs() > 1e-12 {
        return Err(format!(
            "two triangles: Q = {}, {} communities",
            p.modularity(),
            p.community_count()
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut instances = 0;
    let mut min_gap = f64::MAX;
    while instances < 50 {
        let n = rng.random_range(4..=10);
        let (g, edges) = random_graph(n, rng.random_range(0.15..0.6), rng.random());
        if edges.is_empty() {
            continue;
        }
        instances += 1;
        let part = detect_communities::<f64>(&g);
        let labels: Vec<usize> = (0..n)
            .map(|i| part.community_of(NodeId(i as u64)).unwrap())
            .collect();
        let q_def = modularity_def(n, &edges, &labels);
        if (q_def - part.modularity()).abs() > 1e-12 {
            return Err(format!(
                "reported Q {} but definition gives {q_def}",
                part.modularity()
            ));
        }
        let best = best_modularity(n, &edges);
        if part.modularity() > best + 1e-12 {
            return Err(format!(
                "greedy Q {} exceeds optimum {best}",
                part.modularity()
            ));
        }
        min_gap = min_gap.min(best - part.modularity());
    }
    check(
        true,
        format!("Q(one)=0, two triangles Q=0.5 recovered, greedy <= optimum on {instances} graphs (min gap {min_gap:.2e})"),
        String::new(),
    )
}

// ---------------------------------------------------------------------------
// 4. Crawler correctness

fn audit_world(seed: u64) -> World {
    let mut org = OrgSpec::new("Acme", 80, 0.12);
    org.community_count = 2;
    org.inter_community_edge_prob = 0.02;
    generate_world(&WorldSpec {
        total_population: 400,
        orgs: vec![org],
        background_edge_prob: 0.01,
        cross_boundary_edge_prob: 0.01,
        rng_seed: seed,
    })
    .unwrap()
}

fn pick_seeds(world: &World, count: usize, seed: u64) -> Vec<NodeId> {
    let members = world.org_members(0);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "crawl-seeds"));
    members.choose_multiple(&mut rng, count).copied().collect()
}

fn criterion_4() -> Outcome {
    let mut audits = 0u64;
    for seed in 0..20 {
        let world = audit_world(seed);
        let src = world.source();
        let seeds = pick_seeds(&world, 3, seed);
        let mut cfg = CrawlConfig::new(seeds.clone(), vec!["acme".into()], CrawlVersion::V1);
        cfg.max_fetches = Some(250);
        let mut state =
            CrawlState::new(cfg.clone(), FrontierMode::Priority, src.fingerprint()).unwrap();
        let seed_set: BTreeSet<NodeId> = seeds.iter().copied().collect();
        loop {
            let confirmed: BTreeSet<NodeId> = state.confirmed().collect();
            for (id, prio) in state.frontier().iter() {
                let from_members = world
                    .graph
                    .neighbor_ids(id)
                    .iter()
                    .filter(|n| confirmed.contains(n))
                    .count() as u32;
                let expected = from_members + u32::from(seed_set.contains(&id)) * cfg.seed_priority;
                if prio != expected {
                    return Err(format!(
                        "world {seed}: node {id} queued at {prio}, expected {expected} after {} fetches",
                        state.fetch_count()
                    ));
                }
                audits += 1;
            }
            if !state.step(&src) {
                break;
            }
        }
        let order = state.fetch_order();
        let unique: BTreeSet<_> = order.iter().collect();
        if unique.len() != order.len() {
            return Err(format!("world {seed}: a node was fetched twice"));
        }

        let full = crawl(&src, &cfg).unwrap().state.to_snapshot();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let mut part =
            CrawlState::new(cfg.clone(), FrontierMode::Priority, src.fingerprint()).unwrap();
        part.run(&src, Some(37)).unwrap();
        orgmine::crawler::save_state(&part, &path).unwrap();
        drop(part);
        let mut resumed = orgmine::crawler::resume(&path, &src).unwrap();
        resumed.run(&src, None).unwrap();
        if resumed.to_snapshot() != full {
            return Err(format!(
                "world {seed}: resumed crawl differs from uninterrupted run"
            ));
        }
    }
    Ok(format!(
        "20 worlds, {audits} frontier priorities audited, resume byte-identical"
    ))
}

// ---------------------------------------------------------------------------
// 5. Homophily crawl beats BFS

/// The criterion leaves member-to-outsider density open. At 0.05 a member
/// has about 90 outside friends against 40 coworkers, the noisy regime the
/// comparison is about; at 0.01 or below both crawls exhaust the
/// organization inside the budget and tie at precision 1/3.
const CROSS_BOUNDARY: f64 = 0.05;

fn standard_world(seed: u64) -> World {
    let org = OrgSpec::new("Acme", 200, 0.2);
    generate_world(&WorldSpec {
        total_population: 2000,
        orgs: vec![org],
        background_edge_prob: 0.002,
        cross_boundary_edge_prob: CROSS_BOUNDARY,
        rng_seed: seed,
    })
    .unwrap()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..20 {
        let world = standard_world(seed);
        let mut cfg = CrawlConfig::new(
            pick_seeds(&world, 3, seed),
            vec!["acme".into()],
            CrawlVersion::V1,
        );
        cfg.max_fetches = Some(600);
        let v1 = crawl(&world.source(), &cfg).unwrap().stats.precision;
        let bfs = bfs_crawl(&world.source(), &cfg).unwrap().stats.precision;
        if v1 > bfs {
            wins += 1;
        }
        rows.push(format!("{v1:.3}/{bfs:.3}"));
    }
    let elapsed = start.elapsed();
    check(
        wins >= 18 && elapsed < Duration::from_secs(60),
        format!(
            "V1 beats BFS in {wins}/20 worlds, {:.1}s",
            elapsed.as_secs_f64()
        ),
        format!(
            "V1 beats BFS in {wins}/20 (need 18), {:.1}s; precision v1/bfs: {}",
            elapsed.as_secs_f64(),
            rows.join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 6 and 7. Leadership signal and hidden-manager accounting

fn leadership_world(seed: u64, size: usize, disclosure: f64) -> World {
    let mut org = OrgSpec::new("Acme", size, 0.1);
    org.manager_fraction = 0.15;
    org.manager_degree_boost = 3.0;
    org.position_disclosure_rate = disclosure;
    generate_world(&WorldSpec {
        total_population: size + 100,
        orgs: vec![org],
        background_edge_prob: 0.01,
        cross_boundary_edge_prob: 0.005,
        rng_seed: seed,
    })
    .unwrap()
}

fn truth_labels(world: &World) -> LabelTable {
    let mut t = LabelTable::new();
    for id in world.org_members(0) {
        let r = world.truth_row(id).unwrap();
        t.insert(
            id,
            orgmine::graph::Label {
                is_manager: r.is_manager,
                discloses_position: r.discloses_position,
            },
        );
    }
    t
}

fn org_table(world: &World, measures: &str) -> CentralityTable {
    let g = world.org_graph(0);
    let cfg = CentralityConfig {
        measures: orgmine::centrality::Measure::parse_list(measures).unwrap(),
        ..CentralityConfig::default()
    };
    centrality_table(&g, &cfg).unwrap()
}

fn criterion_6() -> Outcome {
    let mut hits_ = 0;
    let mut seen = Vec::new();
    for seed in 0..20 {
        let world = leadership_world(seed, 200, 0.6);
        let labels = truth_labels(&world);
        let base = labels.iter().filter(|(_, l)| l.is_manager).count() as f64 / labels.len() as f64;
        let table = org_table(&world, "cl");
        let ranked = RankedList::from_table(&table, Column::Cl, Some(&labels)).unwrap();
        let p20 = precision_at_k(&ranked, &labels, 20).unwrap();
        if p20 >= 2.0 * base {
            hits_ += 1;
        }
        seen.push(format!("{p20:.2}"));
    }
    check(
        hits_ >= 18,
        format!("closeness P@20 >= 2x base rate (0.15) in {hits_}/20 worlds"),
        format!(
            "closeness P@20 >= 2x base in {hits_}/20 (need 18): {}",
            seen.join(" ")
        ),
    )
}

fn criterion_7() -> Outcome {
    for seed in 0..20 {
        let world = leadership_world(seed, 200, 0.6);
        let labels = truth_labels(&world);
        let table = org_table(&world, "cl");
        let ranked = RankedList::from_table(&table, Column::Cl, Some(&labels)).unwrap();
        let row = &hidden_manager_report(&[ranked], &labels, 20).unwrap()[0];

        // Independent count: rank by score then id, read disclosure off the
        // crawled profiles.
        let col = table.column(Column::Cl).unwrap();
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&a, &b| {
            col[b]
                .total_cmp(&col[a])
                .then(table.nodes()[a].cmp(&table.nodes()[b]))
        });
        let top_managers: Vec<NodeId> = order[..20]
            .iter()
            .map(|&i| table.nodes()[i])
            .filter(|id| world.truth_row(*id).unwrap().is_manager)
            .collect();
        let disclosed = top_managers
            .iter()
            .filter(|id| world.graph.profile(**id).unwrap().position.is_some())
            .count();
        if row.managers != top_managers.len() || row.hidden != top_managers.len() - disclosed {
            return Err(format!(
                "world {seed}: report {}/{} hidden, independent count {}/{}",
                row.hidden,
                row.managers,
                top_managers.len() - disclosed,
                top_managers.len()
            ));
        }
        if let Some(f) = row.hidden_fraction() {
            let observed = disclosed as f64 / top_managers.len() as f64;
            if f != 1.0 - observed && (f - (1.0 - observed)).abs() > 1e-15 {
                return Err(format!(
                    "world {seed}: hidden fraction {f} vs 1 - {observed}"
                ));
            }
        }
    }
    Ok("hidden = managers - disclosed among top-20 closeness, 20/20 worlds".into())
}

// ---------------------------------------------------------------------------
// 8. Classifier protocol

fn criterion_8() -> Outcome {
    let world = leadership_world(3, 200, 0.6);
    let labels = truth_labels(&world);
    let table = org_table(&world, "all");
    let data = labeled_instances(&table, &labels).unwrap();
    let y: Vec<bool> = data.iter().map(|d| d.is_manager).collect();
    let (zr, preds) =
        cross_validate_with_predictions(ClassifierKind::ZeroR, &data, 10, 11).unwrap();
    let managers = y.iter().filter(|&&b| b).count();
    let majority = managers.max(y.len() - managers);
    let rate = 100.0 * majority as f64 / y.len() as f64;
    if zr.accuracy != rate || zr.f_measure != 0.0 || (zr.auc - 0.5).abs() > 1e-12 {
        return Err(format!(
            "zero-r accuracy {} (majority {rate}), F {}, AUC {}",
            zr.accuracy, zr.f_measure, zr.auc
        ));
    }
    if accuracy(&preds.predicted, &y) != rate || f_measure(&preds.predicted, &y) != 0.0 {
        return Err("zero-r held-out predictions disagree with the pooled metrics".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..200);
        let levels = rng.random_range(2..30);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.3).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        let a = auc_rank(&scores, &labels).unwrap();
        let b = auc_trapezoid(&scores, &labels).unwrap();
        worst = worst.max((a - b).abs());
    }
    if worst > 1e-9 {
        return Err(format!("rank vs trapezoid AUC differ by {worst:.2e}"));
    }

    for (n, rate, folds) in [(200, 0.15, 10), (97, 0.4, 5), (53, 0.1, 10), (500, 0.5, 7)] {
        let labels: Vec<bool> = (0..n).map(|i| (i as f64) < rate * n as f64).collect();
        let pos = labels.iter().filter(|&&b| b).count() as f64;
        let assign = stratified_folds(&labels, folds, 9);
        for f in 0..folds {
            let members: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
            let fold_pos = members.iter().filter(|&&i| labels[i]).count() as f64;
            let expected = members.len() as f64 * pos / n as f64;
            if (fold_pos - expected).abs() > 1.0 {
                return Err(format!(
                    "fold {f} of {n}: {fold_pos} positives, expected {expected:.2}"
                ));
            }
        }
    }
    Ok(format!(
        "zero-r acc {rate:.2}% = majority, F 0, AUC 0.5; rank/trapezoid AUC max diff {worst:.1e}; folds stratified"
    ))
}

// ---------------------------------------------------------------------------
// 9. Classifier signal

fn excess_aucs(seed: u64) -> (f64, f64) {
    let world = leadership_world(seed, 500, 0.6);
    let labels = truth_labels(&world);
    let table = org_table(&world, "all");
    let data = labeled_instances(&table, &labels).unwrap();
    let lr = cross_validate(ClassifierKind::Logistic, &data, 10, seed)
        .unwrap()
        .auc;
    let rf = cross_validate(ClassifierKind::DEFAULT_FOREST, &data, 10, seed)
        .unwrap()
        .auc;
    (lr - 0.5, rf - 0.5)
}

fn criterion_9() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    let mut smallest = f64::MAX;
    for seed in 0..10 {
        let (lr, rf) = excess_aucs(seed);
        smallest = smallest.min(lr).min(rf);
        ok &= lr > PINNED_AUC_MARGIN && rf > PINNED_AUC_MARGIN;
        rows.push(format!("{:.3}/{:.3}", lr + 0.5, rf + 0.5));
    }
    check(
        ok,
        format!(
            "LR/RF AUC > 0.5 + {PINNED_AUC_MARGIN} in 10/10 worlds (smallest excess {smallest:.3})"
        ),
        format!("AUC lr/rf: {} (margin {PINNED_AUC_MARGIN})", rows.join(" ")),
    )
}

// ---------------------------------------------------------------------------
// 10. Community recovery and roles

fn criterion_10() -> Outcome {
    let mut recovered = 0;
    let mut aris = Vec::new();
    let (mut qualifying, mut correct) = (0, 0);
    for seed in 0..10 {
        let mut org = OrgSpec::new("Acme", 80, 0.5);
        org.community_count = 2;
        org.inter_community_edge_prob = 0.02;
        org.position_disclosure_rate = 0.4;
        org.location_labels = vec!["Haifa".into(), "Berlin".into()];
        org.department_labels = vec!["R&D".into(), "Sales".into()];
        let world = generate_world(&WorldSpec {
            total_population: 80,
            orgs: vec![org],
            background_edge_prob: 0.0,
            cross_boundary_edge_prob: 0.0,
            rng_seed: seed,
        })
        .unwrap();
        let g = world.org_graph(0);
        let part = detect_communities::<f64>(&g);
        let found: Vec<usize> = g
            .node_ids()
            .iter()
            .map(|id| part.community_of(*id).unwrap())
            .collect();
        let planted: Vec<usize> = g
            .node_ids()
            .iter()
            .map(|id| world.truth_row(*id).unwrap().community.unwrap())
            .collect();
        let ari = adjusted_rand_index(&found, &planted);
        if ari > 0.8 {
            recovered += 1;
        }
        aris.push(format!("{ari:.2}"));

        let cfg = RoleConfig::default();
        for role in infer_roles(&g, &part, None, &cfg) {
            let Some(vote) = &role.position else { continue };
            if vote.labeled < cfg.min_labeled {
                continue;
            }
            qualifying += 1;
            let members = &part.communities()[role.community];
            let mut tally: BTreeMap<(String, String), usize> = BTreeMap::new();
            for id in members {
                let t = world.truth_row(*id).unwrap();
                *tally
                    .entry((t.department.clone().unwrap(), t.location.clone().unwrap()))
                    .or_default() += 1;
            }
            let ((dept, loc), _) = tally.iter().max_by_key(|(_, c)| **c).unwrap();
            if role.role.as_deref() == Some(format!("{dept} / {loc}").as_str()) {
                correct += 1;
            }
        }
    }
    let share = correct as f64 / qualifying.max(1) as f64;
    check(
        recovered >= 9 && qualifying > 0 && share >= 0.8,
        format!("ARI > 0.8 in {recovered}/10; planted role on {correct}/{qualifying} qualifying communities"),
        format!(
            "ARI > 0.8 in {recovered}/10 (need 9) [{}]; roles {correct}/{qualifying} (need 80%)",
            aris.join(" ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 11. End-to-end determinism

fn tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(dir).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn criterion_11() -> Outcome {
    let path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/tiny-pipeline.toml");
    let cfg = PipelineConfig::load(&path).map_err(|e| e.to_string())?;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    run_pipeline(&cfg, Some(a.path())).map_err(|e| e.to_string())?;
    let once = start.elapsed();
    run_pipeline(&cfg, Some(b.path())).map_err(|e| e.to_string())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let differing: Vec<&String> = ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect();
    check(
        ta.keys().eq(tb.keys()) && differing.is_empty() && once < Duration::from_secs(30),
        format!(
            "{} artifacts byte-identical across reruns, one run {:.2}s",
            ta.len(),
            once.as_secs_f64()
        ),
        format!(
            "differing artifacts {differing:?}, one run {:.2}s",
            once.as_secs_f64()
        ),
    )
}

fn main() {
    // Listing mode used by test runners that enumerate tests.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    if std::env::args().any(|a| a == "--measure-margin") {
        for seed in 0..10 {
            let (lr, rf) = excess_aucs(seed);
            println!("seed {seed}: lr excess {lr:.4}, rf excess {rf:.4}");
        }
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("centrality oracle suite", criterion_1),
        ("hand-computed anchors", criterion_2),
        ("modularity anchors", criterion_3),
        ("crawler correctness", criterion_4),
        ("homophily crawl beats BFS", criterion_5),
        ("leadership signal", criterion_6),
        ("hidden-manager accounting", criterion_7),
        ("classifier protocol", criterion_8),
        ("classifier signal", criterion_9),
        ("community recovery and roles", criterion_10),
        ("end-to-end determinism", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
