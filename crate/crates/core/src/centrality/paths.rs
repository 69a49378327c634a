//! Shortest-path measures: degree, closeness, betweenness and load.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::graph::SocialGraph;
use crate::scalar::Scalar;

/// Sources per parallel chunk. Chunk partial sums are added in chunk order,
/// so results do not depend on the thread count.
const SOURCE_CHUNK: usize = 32;

struct Workspace<T> {
    dist: Vec<i64>,
    sigma: Vec<T>,
    delta: Vec<T>,
    pred: Vec<Vec<usize>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl<T: Scalar> Workspace<T> {
    fn new(n: usize) -> Self {
        Workspace {
            dist: vec![-1; n],
            sigma: vec![T::zero(); n],
            delta: vec![T::zero(); n],
            pred: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    /// BFS from `s` recording distances, path counts, predecessor lists and
    /// visit order. Only touched entries are reset.
    fn bfs(&mut self, g: &SocialGraph, s: usize) {
        for &v in &self.order {
            self.dist[v] = -1;
            self.sigma[v] = T::zero();
            self.delta[v] = T::zero();
            self.pred[v].clear();
        }
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = T::one();
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            let dv = self.dist[v];
            for &w in g.neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = dv + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == dv + 1 {
                    self.sigma[w] = self.sigma[w] + self.sigma[v];
                    self.pred[w].push(v);
                }
            }
        }
    }
}

fn accumulate_by_source<T, F>(g: &SocialGraph, per_source: F) -> Vec<T>
where
    T: Scalar,
    F: Fn(usize, &mut Workspace<T>, &mut [T]) + Sync,
{
    let n = g.node_count();
    let chunks: Vec<Vec<T>> = (0..n.div_ceil(SOURCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ws = Workspace::new(n);
            let mut acc = vec![T::zero(); n];
            for s in c * SOURCE_CHUNK..((c + 1) * SOURCE_CHUNK).min(n) {
                per_source(s, &mut ws, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![T::zero(); n];
    for part in chunks {
        for (t, p) in total.iter_mut().zip(part) {
            *t = *t + p;
        }
    }
    total
}

/// `deg(v) / (n - 1)`; a lone node scores 0.
pub fn degree_centrality<T: Scalar>(g: &SocialGraph) -> Vec<T> {
    let n = g.node_count();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let scale = T::from_count(n - 1);
    (0..n).map(|v| T::from_count(g.degree(v)) / scale).collect()
}

/// Component-scaled closeness: `((r-1)/(n-1)) * ((r-1)/sum_d)` where `r` is
/// the size of the node's reachable set. Isolated nodes score 0.
pub fn closeness_centrality<T: Scalar>(g: &SocialGraph) -> Vec<T> {
    let n = g.node_count();
    if n < 2 {
        return vec![T::zero(); n];
    }
    (0..n)
        .into_par_iter()
        .map_init(
            || Workspace::<T>::new(n),
            |ws, v| {
                ws.bfs(g, v);
                let reach = ws.order.len();
                if reach <= 1 {
                    return T::zero();
                }
                let total: i64 = ws.order.iter().map(|&u| ws.dist[u]).sum();
                let r1 = T::from_count(reach - 1);
                (r1 / T::from_count(n - 1)) * (r1 / T::from_count(total as usize))
            },
        )
        .collect()
}

/// Shortest-path betweenness by dependency accumulation, normalized by the
/// number of unordered pairs not involving the node, `(n-1)(n-2)/2`.
pub fn betweenness_centrality<T: Scalar>(g: &SocialGraph) -> Vec<T> {
    let n = g.node_count();
    if n < 3 {
        return vec![T::zero(); n];
    }
    let raw = accumulate_by_source(g, |s, ws: &mut Workspace<T>, acc| {
        ws.bfs(g, s);
        for i in (0..ws.order.len()).rev() {
            let w = ws.order[i];
            let coeff = (T::one() + ws.delta[w]) / ws.sigma[w];
            for k in 0..ws.pred[w].len() {
                let v = ws.pred[w][k];
                ws.delta[v] = ws.delta[v] + ws.sigma[v] * coeff;
            }
            if w != s {
                acc[w] = acc[w] + ws.delta[w];
            }
        }
    });
    // Every unordered pair was visited from both endpoints.
    let scale = T::from_count((n - 1) * (n - 2));
    raw.into_iter().map(|x| x / scale).collect()
}

/// Load centrality: unit packets between every ordered pair, split equally
/// over next hops on shortest paths; score is the total flow through the
/// node, endpoints excluded, over `(n-1)(n-2)`.
pub fn load_centrality<T: Scalar>(g: &SocialGraph) -> Vec<T> {
    let n = g.node_count();
    if n < 3 {
        return vec![T::zero(); n];
    }
    let raw = accumulate_by_source(g, |root, ws: &mut Workspace<T>, acc| {
        ws.bfs(g, root);
        // delta holds the flow arriving at each node bound for `root`, its
        // own unit included.
        for &v in &ws.order {
            ws.delta[v] = T::one();
        }
        for i in (0..ws.order.len()).rev() {
            let v = ws.order[i];
            let k = ws.pred[v].len();
            if k == 0 {
                continue;
            }
            let share = ws.delta[v] / T::from_count(k);
            for j in 0..k {
                let x = ws.pred[v][j];
                if x != root {
                    ws.delta[x] = ws.delta[x] + share;
                }
            }
        }
        for &v in &ws.order {
            if v != root {
                acc[v] = acc[v] + ws.delta[v] - T::one();
            }
        }
    });
    let scale = T::from_count((n - 1) * (n - 2));
    raw.into_iter().map(|x| x / scale).collect()
}
