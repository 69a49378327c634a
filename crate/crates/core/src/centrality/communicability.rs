//! Subgraph (communicability) centrality: the diagonal of `exp(A)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::SocialGraph;
use crate::linalg::{symmetric_eigen, tridiagonal_eigen};
use crate::scalar::Scalar;

use super::CentralityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CommunicabilityMethod {
    /// Exact spectral evaluation, one dense eigendecomposition per connected
    /// component. Refuses components larger than the node cap.
    Dense,
    /// Lanczos / Gauss quadrature with `steps` Krylov vectors per node. No
    /// size cap. `steps` nodes of quadrature integrate polynomials of degree
    /// `2*steps - 1` exactly, so the error is at most
    /// `(2r)^(2*steps) * e^r / (2*steps)!` for spectral radius `r`, and the
    /// result is exact once `steps` reaches the component size.
    Lanczos { steps: usize },
}

impl Default for CommunicabilityMethod {
    fn default() -> Self {
        CommunicabilityMethod::Dense
    }
}

/// Connected components as ascending index lists, ordered by smallest member.
pub fn connected_components(g: &SocialGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut members = vec![s];
        let mut head = 0;
        while head < members.len() {
            let v = members[head];
            head += 1;
            for &w in g.neighbors(v) {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

pub fn communicability_centrality<T: Scalar>(
    g: &SocialGraph,
    method: CommunicabilityMethod,
    node_cap: usize,
) -> Result<Vec<T>, CentralityError> {
    match method {
        CommunicabilityMethod::Dense => dense(g, node_cap),
        CommunicabilityMethod::Lanczos { steps } => Ok(lanczos(g, steps.max(1))),
    }
}

fn dense<T: Scalar>(g: &SocialGraph, node_cap: usize) -> Result<Vec<T>, CentralityError> {
    let comps = connected_components(g);
    if let Some(big) = comps.iter().map(Vec::len).max() {
        if big > node_cap {
            return Err(CentralityError::TooLarge {
                nodes: big,
                cap: node_cap,
            });
        }
    }
    let mut out = vec![T::one(); g.node_count()];
    for members in comps.iter().filter(|c| c.len() > 1) {
        let s = members.len();
        let mut local = vec![usize::MAX; g.node_count()];
        for (i, &v) in members.iter().enumerate() {
            local[v] = i;
        }
        let mut a = vec![vec![T::zero(); s]; s];
        for (i, &v) in members.iter().enumerate() {
            for &w in g.neighbors(v) {
                a[i][local[w]] = T::one();
            }
        }
        let eig = symmetric_eigen(&a).map_err(CentralityError::Eigen)?;
        let exps: Vec<T> = eig.values.iter().map(|l| l.exp()).collect();
        for (i, &v) in members.iter().enumerate() {
            out[v] = eig.vectors[i]
                .iter()
                .zip(&exps)
                .fold(T::zero(), |acc, (&phi, &e)| acc + phi * phi * e);
        }
    }
    Ok(out)
}

fn lanczos<T: Scalar>(g: &SocialGraph, steps: usize) -> Vec<T> {
    let n = g.node_count();
    (0..n)
        .into_par_iter()
        .map(|v| lanczos_node(g, v, steps))
        .collect()
}

/// `e_v^T exp(A) e_v` by Gauss quadrature on the Krylov space of `e_v`, with
/// full reorthogonalization.
fn lanczos_node<T: Scalar>(g: &SocialGraph, v: usize, steps: usize) -> T {
    let n = g.node_count();
    if g.degree(v) == 0 {
        return T::one();
    }
    let tiny = T::lit(1e-12);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut q = vec![T::zero(); n];
    q[v] = T::one();
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<T> = Vec::with_capacity(steps);
    let mut w = vec![T::zero(); n];
    for _ in 0..steps.min(n) {
        for (x, o) in w.iter_mut().enumerate() {
            *o = g.neighbors(x).iter().fold(T::zero(), |acc, &u| acc + q[u]);
        }
        let a = w
            .iter()
            .zip(&q)
            .fold(T::zero(), |acc, (&x, &y)| acc + x * y);
        alpha.push(a);
        basis.push(q.clone());
        for b in &basis {
            let c = w.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            for (wx, &bx) in w.iter_mut().zip(b) {
                *wx = *wx - c * bx;
            }
        }
        let nb = w.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if nb < tiny || basis.len() == steps.min(n) {
            break;
        }
        beta.push(nb);
        for (qx, &wx) in q.iter_mut().zip(&w) {
            *qx = wx / nb;
        }
    }
    let eig = match tridiagonal_eigen(&alpha, &beta[..alpha.len() - 1]) {
        Ok(e) => e,
        Err(_) => return T::nan(),
    };
    eig.values
        .iter()
        .zip(&eig.vectors[0])
        .fold(T::zero(), |acc, (&l, &u)| acc + u * u * l.exp())
}
