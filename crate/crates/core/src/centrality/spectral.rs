//! Power-iteration measures: HITS, PageRank and eigenvector centrality.

use crate::graph::SocialGraph;
use crate::scalar::Scalar;

use super::CentralityError;

/// Scores from an iterative method with the number of iterations used.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterated<T> {
    pub scores: Vec<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitsScores<T> {
    pub authority: Vec<T>,
    pub hub: Vec<T>,
    pub iterations: usize,
}

fn spmv<T: Scalar>(g: &SocialGraph, x: &[T], out: &mut [T]) {
    for (v, o) in out.iter_mut().enumerate() {
        *o = g.neighbors(v).iter().fold(T::zero(), |acc, &u| acc + x[u]);
    }
}

fn l2_normalize<T: Scalar>(x: &mut [T]) -> T {
    let norm = x.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
    if norm > T::zero() {
        for v in x.iter_mut() {
            *v = *v / norm;
        }
    }
    norm
}

fn max_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

fn not_converged<T: Scalar>(
    measure: &'static str,
    iterations: usize,
    last: &[T],
) -> CentralityError {
    CentralityError::NotConverged {
        measure,
        iterations,
        last: last.iter().map(|x| x.as_f64()).collect(),
    }
}

/// Mutual-reinforcement iteration. Starting from all-ones hubs, the first
/// authority update is `A^T 1`; thereafter `a <- A^T A a`, normalized to unit
/// length. Hubs follow `h <- A A^T h` from `A 1`. On an undirected graph the
/// two recurrences coincide, so authority equals hub. Starting from the
/// first half-step avoids the all-ones vector, which is itself an eigenvector
/// of `A^2` on regular-bipartite pieces such as stars. An edgeless graph has
/// no preferred direction and yields the uniform unit vector.
pub fn hits<T: Scalar>(
    g: &SocialGraph,
    tol: T,
    max_iter: usize,
) -> Result<HitsScores<T>, CentralityError> {
    let n = g.node_count();
    if n == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    let mut auth = vec![T::one(); n];
    if g.edge_count() == 0 {
        l2_normalize(&mut auth);
        return Ok(HitsScores {
            hub: auth.clone(),
            authority: auth,
            iterations: 0,
        });
    }
    let ones = auth.clone();
    spmv(g, &ones, &mut auth);
    l2_normalize(&mut auth);
    let mut mid = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    for it in 1..=max_iter {
        // Undirected: A^T = A.
        spmv(g, &auth, &mut mid);
        spmv(g, &mid, &mut next);
        l2_normalize(&mut next);
        let diff = max_diff(&next, &auth);
        std::mem::swap(&mut auth, &mut next);
        if diff < tol {
            return Ok(HitsScores {
                hub: auth.clone(),
                authority: auth,
                iterations: it,
            });
        }
    }
    Err(not_converged("hits", max_iter, &auth))
}

/// Damped random surfer on the graph with every edge traversable both ways.
/// Isolated nodes spread their mass uniformly. Output sums to one.
pub fn pagerank<T: Scalar>(
    g: &SocialGraph,
    damping: T,
    tol: T,
    max_iter: usize,
) -> Result<Iterated<T>, CentralityError> {
    let n = g.node_count();
    if n == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    let nt = T::from_count(n);
    let mut x = vec![T::one() / nt; n];
    let mut next = vec![T::zero(); n];
    let inv_deg: Vec<T> = (0..n)
        .map(|v| match g.degree(v) {
            0 => T::zero(),
            d => T::one() / T::from_count(d),
        })
        .collect();
    for it in 1..=max_iter {
        let dangling = (0..n)
            .filter(|&v| g.degree(v) == 0)
            .fold(T::zero(), |acc, v| acc + x[v]);
        let base = (T::one() - damping) / nt + damping * dangling / nt;
        for (v, nv) in next.iter_mut().enumerate() {
            let inflow = g
                .neighbors(v)
                .iter()
                .fold(T::zero(), |acc, &u| acc + x[u] * inv_deg[u]);
            *nv = base + damping * inflow;
        }
        let diff = max_diff(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if diff < tol {
            let total = x.iter().fold(T::zero(), |acc, &v| acc + v);
            for v in x.iter_mut() {
                *v = *v / total;
            }
            return Ok(Iterated {
                scores: x,
                iterations: it,
            });
        }
    }
    Err(not_converged("pagerank", max_iter, &x))
}

/// Dominant eigenvector of the adjacency, found by iterating the shifted
/// matrix `A + I` from the all-ones vector. The shift makes the dominant
/// eigenvalue strictly largest in magnitude, so bipartite graphs converge;
/// the result is nonnegative with unit length.
pub fn eigenvector_centrality<T: Scalar>(
    g: &SocialGraph,
    tol: T,
    max_iter: usize,
) -> Result<Iterated<T>, CentralityError> {
    let n = g.node_count();
    if n == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    if g.edge_count() == 0 {
        return Err(CentralityError::NoEdges {
            measure: "eigenvector",
        });
    }
    let mut x = vec![T::one(); n];
    l2_normalize(&mut x);
    let mut next = vec![T::zero(); n];
    for it in 1..=max_iter {
        spmv(g, &x, &mut next);
        for (nv, &xv) in next.iter_mut().zip(&x) {
            *nv = (*nv + xv).max(T::zero());
        }
        l2_normalize(&mut next);
        let diff = max_diff(&next, &x);
        std::mem::swap(&mut x, &mut next);
        if diff < tol {
            return Ok(Iterated {
                scores: x,
                iterations: it,
            });
        }
    }
    Err(not_converged("eigenvector", max_iter, &x))
}
