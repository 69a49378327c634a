//! Brute-force reference implementations shared by the integration tests.
//! None of these reuse library code paths: distances come from
//! Floyd-Warshall, path counts from explicit enumeration, spectra from
//! nalgebra.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orgmine::graph::{from_edges, SocialGraph};

pub const INF: usize = usize::MAX;

/// Erdos-Renyi graph on `n` nodes with edge probability `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> (SocialGraph, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    (from_edges(n, &edges).unwrap(), edges)
}

pub fn adjacency_matrix(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in edges {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

pub fn floyd_warshall(adj: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if adj[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn degree(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    adj.iter()
        .map(|row| row.iter().filter(|&&b| b).count() as f64 / (n - 1) as f64)
        .collect()
}

/// Closeness scaled by the reachable fraction.
pub fn closeness(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let d = floyd_warshall(adj);
    (0..n)
        .map(|v| {
            let reach: Vec<usize> = (0..n)
                .filter(|&u| u != v && d[v][u] != INF)
                .map(|u| d[v][u])
                .collect();
            if reach.is_empty() {
                return 0.0;
            }
            let r = reach.len() as f64;
            let total: usize = reach.iter().sum();
            (r / (n - 1) as f64) * (r / total as f64)
        })
        .collect()
}

/// Every shortest path from `s` to `t`, listed explicitly.
pub fn shortest_paths(adj: &[Vec<bool>], d: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = vec![s];
    fn walk(
        adj: &[Vec<bool>],
        d: &[Vec<usize>],
        t: usize,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        for w in 0..adj.len() {
            if adj[u][w] && d[w][t] != INF && d[w][t] + 1 == d[u][t] {
                path.push(w);
                walk(adj, d, t, path, out);
                path.pop();
            }
        }
    }
    if d[s][t] != INF {
        walk(adj, d, t, &mut path, &mut out);
    }
    out
}

/// Betweenness in exact rational arithmetic, normalized over unordered
/// pairs.
pub fn betweenness_exact(adj: &[Vec<bool>]) -> Vec<Ratio<u64>> {
    let n = adj.len();
    let d = floyd_warshall(adj);
    let mut bc = vec![Ratio::from_integer(0u64); n];
    for s in 0..n {
        for t in s + 1..n {
            let paths = shortest_paths(adj, &d, s, t);
            if paths.is_empty() {
                continue;
            }
            let total = paths.len() as u64;
            let mut through = vec![0u64; n];
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    through[v] += 1;
                }
            }
            for v in 0..n {
                if through[v] > 0 {
                    bc[v] += Ratio::new(through[v], total);
                }
            }
        }
    }
    let pairs = ((n - 1) * (n - 2) / 2) as u64;
    bc.into_iter().map(|b| b / pairs).collect()
}

/// Load by simulating, for every ordered pair, a unit of flow that splits
/// evenly over the next hops toward the target.
pub fn load_flow(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let d = floyd_warshall(adj);
    let mut load = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || d[s][t] == INF {
                continue;
            }
            let mut flow = vec![0.0; n];
            flow[s] = 1.0;
            let mut order: Vec<usize> = (0..n)
                .filter(|&v| d[v][t] != INF && d[v][t] <= d[s][t])
                .collect();
            order.sort_by_key(|&v| std::cmp::Reverse(d[v][t]));
            for &u in &order {
                if u == t || flow[u] == 0.0 {
                    continue;
                }
                let next: Vec<usize> = (0..n)
                    .filter(|&w| adj[u][w] && d[w][t] + 1 == d[u][t])
                    .collect();
                let share = flow[u] / next.len() as f64;
                for w in next {
                    flow[w] += share;
                }
            }
            for v in 0..n {
                if v != s && v != t {
                    load[v] += flow[v];
                }
            }
        }
    }
    let scale = ((n - 1) * (n - 2)) as f64;
    load.into_iter().map(|l| l / scale).collect()
}

fn dense(adj: &[Vec<bool>]) -> DMatrix<f64> {
    let n = adj.len();
    DMatrix::from_fn(n, n, |i, j| if adj[i][j] { 1.0 } else { 0.0 })
}

/// PageRank as the solution of the linear system
/// `(I - d P^T - d/n 1 z^T) x = (1-d)/n 1`, where `z` marks isolated nodes.
pub fn pagerank_solve(adj: &[Vec<bool>], damping: f64) -> Vec<f64> {
    let n = adj.len();
    let deg: Vec<usize> = adj
        .iter()
        .map(|r| r.iter().filter(|&&b| b).count())
        .collect();
    let nf = n as f64;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let mut v = if i == j { 1.0 } else { 0.0 };
        if adj[j][i] {
            v -= damping / deg[j] as f64;
        }
        if deg[j] == 0 {
            v -= damping / nf;
        }
        v
    });
    let rhs = DVector::from_element(n, (1.0 - damping) / nf);
    let x = m.lu().solve(&rhs).expect("nonsingular for damping < 1");
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Orthogonal projection of `start` onto the span of the eigenvectors of
/// the adjacency whose eigenvalue satisfies `keep`, rescaled to unit length.
fn project_onto(
    adj: &[Vec<bool>],
    start: &DVector<f64>,
    keep: impl Fn(f64, f64) -> bool,
) -> Vec<f64> {
    let eig = dense(adj).symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let mut x = DVector::zeros(adj.len());
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if keep(lam, lmax) {
            let v = eig.eigenvectors.column(k);
            x += v * v.dot(start);
        }
    }
    let norm = x.norm();
    x.iter().map(|v| (v / norm).abs()).collect()
}

/// Eigenvector centrality: the all-ones vector projected onto the dominant
/// eigenspace of the adjacency.
pub fn eigenvector_dense(adj: &[Vec<bool>]) -> Vec<f64> {
    let ones = DVector::from_element(adj.len(), 1.0);
    project_onto(adj, &ones, |lam, lmax| (lam - lmax).abs() < 1e-9)
}

/// HITS authority: `A 1` projected onto the dominant eigenspace of `A^2`,
/// which holds the eigenvectors of `A` with eigenvalue `lmax` or `-lmax`.
pub fn hits_dense(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let a = dense(adj);
    let start = &a * DVector::from_element(n, 1.0);
    if start.norm() == 0.0 {
        return vec![1.0 / (n as f64).sqrt(); n];
    }
    project_onto(adj, &start, |lam, lmax| (lam.abs() - lmax).abs() < 1e-9)
}

/// Diagonal of `exp(A)` by summing the Taylor series until terms vanish.
/// All terms are nonnegative, so the sum carries no cancellation error.
pub fn subgraph_taylor(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    let a = dense(adj);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..2000 {
        term = &term * &a / k as f64;
        sum += &term;
        let tmax = term.iter().cloned().fold(0.0, f64::max);
        let smin = sum.diagonal().iter().cloned().fold(f64::MAX, f64::min);
        if tmax <= smin * 1e-18 {
            break;
        }
    }
    sum.diagonal().iter().cloned().collect()
}

/// Modularity straight from the definition
/// `Q = sum_c (l_c/m - (d_c/2m)^2)`.
pub fn modularity_def(n: usize, edges: &[(usize, usize)], label: &[usize]) -> f64 {
    let m = edges.len() as f64;
    let mut deg = vec![0usize; n];
    for &(u, v) in edges {
        deg[u] += 1;
        deg[v] += 1;
    }
    let mut inside: BTreeMap<usize, f64> = BTreeMap::new();
    let mut tot: BTreeMap<usize, f64> = BTreeMap::new();
    for &(u, v) in edges {
        if label[u] == label[v] {
            *inside.entry(label[u]).or_default() += 1.0;
        }
    }
    for v in 0..n {
        *tot.entry(label[v]).or_default() += deg[v] as f64;
    }
    tot.iter()
        .map(|(c, d)| inside.get(c).copied().unwrap_or(0.0) / m - (d / (2.0 * m)).powi(2))
        .sum()
}

/// Best modularity over every set partition of `0..n` (restricted growth
/// strings).
pub fn best_modularity(n: usize, edges: &[(usize, usize)]) -> f64 {
    let mut label = vec![0usize; n];
    let mut best = f64::MIN;
    fn rec(
        i: usize,
        max: usize,
        label: &mut Vec<usize>,
        n: usize,
        edges: &[(usize, usize)],
        best: &mut f64,
    ) {
        if i == n {
            *best = best.max(modularity_def(n, edges, label));
            return;
        }
        for c in 0..=max + 1 {
            label[i] = c;
            rec(i + 1, max.max(c), label, n, edges, best);
        }
    }
    if n == 0 {
        return 0.0;
    }
    label[0] = 0;
    rec(1, 0, &mut label, n, edges, &mut best);
    best
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-300))
        .fold(0.0, f64::max)
}
