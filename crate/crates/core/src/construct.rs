//! Navigable graph constructions with `O(sqrt(n ln n))` average degree.
//!
//! Both builders start from the same "back edges": for every node `i` and
//! every `1 < l <= m`, the edge `N_l(i) -> i`. That makes every node in `i`'s
//! `m`-nearest set one hop from `i`. Farther nodes need one edge into that
//! set, supplied either by random out-edges or by edges to a greedy hitting
//! set of hubs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::model::{NodeId, Seed};
use crate::permute::PermutationTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Randomized,
    Setcover,
    Knn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub random_edges_per_node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hubs: Option<Vec<NodeId>>,
    pub edge_count: usize,
    pub avg_degree: f64,
}

/// `m = min(n - 1, ceil(sqrt(3 n ln n)))`.
pub fn auto_m_randomized(n: usize) -> usize {
    let nf = n as f64;
    let m = (3.0 * nf * nf.ln()).sqrt().ceil() as usize;
    m.clamp(1, n.saturating_sub(1).max(1))
}

/// `m = min(n - 1, ceil(sqrt(n ln n)))`.
pub fn auto_m_setcover(n: usize) -> usize {
    let nf = n as f64;
    let m = (nf * nf.ln()).sqrt().ceil() as usize;
    m.clamp(1, n.saturating_sub(1).max(1))
}

/// `ceil(3 n ln n / m)`.
pub fn random_edges_per_node(n: usize, m: usize) -> usize {
    let nf = n as f64;
    (3.0 * nf * nf.ln() / m as f64).ceil() as usize
}

/// `1 + n ln n / m`, the ceiling on the greedy hub count.
pub fn hub_bound(n: usize, m: usize) -> f64 {
    let nf = n as f64;
    1.0 + nf * nf.ln() / m as f64
}

fn resolve_m(n: usize, m: Option<usize>, auto: fn(usize) -> usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::out_of_range("n", n, ">= 2"));
    }
    match m {
        None => Ok(auto(n)),
        Some(m) if (1..=n).contains(&m) => Ok(m),
        Some(m) => Err(Error::out_of_range("m", m, format!("1..={n}"))),
    }
}

fn back_edges(pt: &PermutationTable, m: usize) -> Vec<Vec<NodeId>> {
    let n = pt.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &u in &pt.row(i)[1..m] {
            adj[u as usize].push(i);
        }
    }
    adj
}

/// Per-node generator: ChaCha8 seeded with `seed`, stream `node`.
fn node_rng(seed: Seed, node: NodeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

/// `count` distinct nodes from `{0..n} \ {node}` by partial Fisher-Yates.
fn sample_others(n: usize, node: NodeId, count: usize, seed: Seed) -> Vec<NodeId> {
    let mut pool: Vec<NodeId> = (0..n).filter(|&j| j != node).collect();
    if count >= pool.len() {
        return pool;
    }
    let mut rng = node_rng(seed, node);
    for k in 0..count {
        let pick = k + rng.random_range(0..(pool.len() - k) as u64) as usize;
        pool.swap(k, pick);
    }
    pool.truncate(count);
    pool
}

/// Randomized construction: back edges plus `ceil(3 n ln n / m)` uniform
/// random out-edges per node. Navigable with probability at least `1 - 1/n`.
///
/// When the sample size reaches `n - 1` every node is connected to all
/// others, which is trivially navigable.
pub fn build_randomized(
    pt: &PermutationTable,
    seed: Seed,
    m: Option<usize>,
) -> Result<(DirectedGraph, BuildReport)> {
    let n = pt.len();
    let m = resolve_m(n, m, auto_m_randomized)?;
    let per_node = random_edges_per_node(n, m);
    if per_node > n - 1 {
        log::debug!(
            "sample size {per_node} exceeds n - 1 = {}; connecting to all",
            n - 1
        );
    }

    let mut adj = back_edges(pt, m);
    let random: Vec<Vec<NodeId>> = (0..n)
        .into_par_iter()
        .map(|i| sample_others(n, i, per_node, seed))
        .collect();
    for (list, extra) in adj.iter_mut().zip(random) {
        list.extend(extra);
    }
    let g = DirectedGraph::from_adjacency(adj)?;
    let stats = g.degree_stats();
    let report = BuildReport {
        method: Method::Randomized,
        n,
        m,
        random_edges_per_node: Some(per_node),
        hubs: None,
        edge_count: stats.edge_count,
        avg_degree: stats.avg_degree,
    };
    Ok((g, report))
}

/// Greedy hitting set for the near-neighborhoods `N_m(i)`: repeatedly take the
/// node contained in the most still-uncovered neighborhoods (smallest id on
/// ties) until every neighborhood contains a hub.
pub fn greedy_hubs(pt: &PermutationTable, m: usize) -> Result<Vec<NodeId>> {
    let n = pt.len();
    if m == 0 || m > n {
        return Err(Error::out_of_range("m", m, format!("1..={n}")));
    }
    // containing[k] = neighborhoods that contain node k.
    let mut containing: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        for &k in &pt.row(i)[..m] {
            containing[k as usize].push(i as u32);
        }
    }
    let mut count: Vec<usize> = containing.iter().map(Vec::len).collect();
    let mut covered = vec![false; n];
    let mut remaining = n;
    let mut hubs = Vec::new();
    while remaining > 0 {
        let (best, _) = count
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (k, &c)| if c > acc.1 { (k, c) } else { acc });
        hubs.push(best);
        for &i in &containing[best] {
            let i = i as usize;
            if covered[i] {
                continue;
            }
            covered[i] = true;
            remaining -= 1;
            for &k in &pt.row(i)[..m] {
                count[k as usize] -= 1;
            }
        }
        debug_assert_eq!(count[best], 0);
    }
    Ok(hubs)
}

/// Deterministic construction: back edges plus an edge from every node to
/// every greedy set-cover hub. Always navigable, and greedy routing needs at
/// most two moves.
pub fn build_setcover(
    pt: &PermutationTable,
    m: Option<usize>,
) -> Result<(DirectedGraph, BuildReport)> {
    let n = pt.len();
    let m = resolve_m(n, m, auto_m_setcover)?;
    let hubs = greedy_hubs(pt, m)?;
    let bound = hub_bound(n, m);
    if hubs.len() as f64 > bound {
        log::warn!("{} hubs exceed the bound {bound:.3}", hubs.len());
    }

    let mut adj = back_edges(pt, m);
    for list in adj.iter_mut() {
        list.extend_from_slice(&hubs);
    }
    let g = DirectedGraph::from_adjacency(adj)?;
    let stats = g.degree_stats();
    let report = BuildReport {
        method: Method::Setcover,
        n,
        m,
        random_edges_per_node: None,
        hubs: Some(hubs),
        edge_count: stats.edge_count,
        avg_degree: stats.avg_degree,
    };
    Ok((g, report))
}

/// Comparison baseline: each node points at its `k` nearest others.
pub fn build_knn_baseline(pt: &PermutationTable, k: usize) -> Result<DirectedGraph> {
    let n = pt.len();
    if k == 0 || k + 1 > n {
        return Err(Error::out_of_range(
            "k",
            k,
            format!("1..={}", n.saturating_sub(1)),
        ));
    }
    let adj = (0..n)
        .map(|i| pt.row(i)[1..=k].iter().map(|&j| j as usize).collect())
        .collect();
    DirectedGraph::from_adjacency(adj)
}
