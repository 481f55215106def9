//! Directed graphs over node ids and greedy search on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DistanceOracle, NodeId, Query, MAX_POINTS};

/// Adjacency-list digraph stored in compressed rows. Each out-list is
/// strictly increasing and never contains its own node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_adjacency(
            (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
        )
        .expect("ids in range")
    }

    /// Sorts each list, collapses parallel edges and drops self-loops.
    pub fn from_adjacency(mut adj: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = adj.len();
        if n > MAX_POINTS {
            return Err(Error::out_of_range("n", n, format!("<= {MAX_POINTS}")));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for (i, list) in adj.iter_mut().enumerate() {
            if let Some(&bad) = list.iter().find(|&&j| j >= n) {
                return Err(Error::out_of_range("neighbor", bad, format!("0..{n}")));
            }
            list.sort_unstable();
            list.dedup();
            targets.extend(list.iter().filter(|&&j| j != i).map(|&j| j as u32));
            offsets.push(targets.len());
        }
        Ok(Self { offsets, targets })
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(Error::out_of_range("source", u, format!("0..{n}")));
            }
            adj[u].push(v);
        }
        Self::from_adjacency(adj)
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, i: NodeId) -> &[u32] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn out_degree(&self, i: NodeId) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.len()).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v as usize)))
    }

    pub fn to_adjacency(&self) -> Vec<Vec<NodeId>> {
        (0..self.len())
            .map(|i| self.neighbors(i).iter().map(|&j| j as usize).collect())
            .collect()
    }

    /// Copy of the graph without edge `u -> v` (unchanged if absent).
    pub fn without_edge(&self, u: NodeId, v: NodeId) -> Self {
        let mut adj = self.to_adjacency();
        if let Some(list) = adj.get_mut(u) {
            list.retain(|&j| j != v);
        }
        Self::from_adjacency(adj).expect("ids already validated")
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let n = self.len();
        let edge_count = self.edge_count();
        DegreeStats {
            edge_count,
            avg_degree: if n == 0 {
                0.0
            } else {
                edge_count as f64 / n as f64
            },
            max_out_degree: (0..n).map(|i| self.out_degree(i)).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub edge_count: usize,
    pub avg_degree: f64,
    pub max_out_degree: usize,
}

pub fn degree_stats(g: &DirectedGraph) -> DegreeStats {
    g.degree_stats()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No out-neighbor is closer to the query than the current node.
    ReachedNoImprovement,
    EmptyNeighborhood,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteTrace {
    pub path: Vec<NodeId>,
    pub moves: usize,
    pub terminal: NodeId,
    pub reason: Termination,
}

/// Greedy search from `start` toward `query`.
///
/// At node `j`, takes the lowest-id closest out-neighbor `h` and moves if it
/// is strictly closer, or equally close with `h < j`. Adjacency lists are
/// sorted, so keeping the first strict minimum in a left-to-right scan gives
/// the lowest id among ties.
pub fn greedy_search(
    g: &DirectedGraph,
    oracle: &DistanceOracle<'_>,
    start: NodeId,
    query: Query<'_>,
) -> Result<RouteTrace> {
    let n = g.len();
    if oracle.points().len() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: oracle.points().len(),
        });
    }
    if start >= n {
        return Err(Error::out_of_range("start", start, format!("0..{n}")));
    }
    if let Query::Node(t) = query {
        if t >= n {
            return Err(Error::out_of_range("target", t, format!("0..{n}")));
        }
    }
    if let Query::Point(p) = query {
        if p.len() != oracle.points().dim() {
            return Err(Error::SizeMismatch {
                left: p.len(),
                right: oracle.points().dim(),
            });
        }
    }

    let mut current = start;
    let mut current_dist = oracle.distance(query, current)?;
    let mut path = vec![current];
    let reason = loop {
        let neighbors = g.neighbors(current);
        if neighbors.is_empty() {
            break Termination::EmptyNeighborhood;
        }
        let mut best = neighbors[0] as usize;
        let mut best_dist = oracle.distance(query, best)?;
        for &h in &neighbors[1..] {
            let d = oracle.distance(query, h as usize)?;
            if d < best_dist {
                best = h as usize;
                best_dist = d;
            }
        }
        let improves = best_dist < current_dist || (best_dist == current_dist && best < current);
        if !improves {
            break Termination::ReachedNoImprovement;
        }
        current = best;
        current_dist = best_dist;
        path.push(current);
        if path.len() > n {
            return Err(Error::RouteOverflow { start, n });
        }
    };
    Ok(RouteTrace {
        moves: path.len() - 1,
        terminal: current,
        path,
        reason,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteFailure {
    pub s: NodeId,
    pub t: NodeId,
    pub stuck_at: NodeId,
}

/// Outcome of greedy routing for every ordered `(s, t)` with query `x_t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoutingMatrix {
    n: usize,
    terminal: Vec<u32>,
    moves: Vec<u32>,
}

impl RoutingMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn success(&self, s: NodeId, t: NodeId) -> bool {
        self.terminal[s * self.n + t] as usize == t
    }

    pub fn moves(&self, s: NodeId, t: NodeId) -> usize {
        self.moves[s * self.n + t] as usize
    }

    pub fn all_succeeded(&self) -> bool {
        self.first_failure().is_none()
    }

    pub fn success_count(&self) -> usize {
        self.terminal
            .iter()
            .enumerate()
            .filter(|(k, &term)| term as usize == k % self.n)
            .count()
    }

    /// Measured small-world parameter: the longest route over all pairs.
    pub fn max_moves(&self) -> usize {
        self.moves.iter().copied().max().unwrap_or(0) as usize
    }

    /// Lexicographically smallest failing `(s, t)`.
    pub fn first_failure(&self) -> Option<RouteFailure> {
        self.terminal
            .iter()
            .enumerate()
            .find(|(k, &term)| term as usize != k % self.n)
            .map(|(k, &term)| RouteFailure {
                s: k / self.n,
                t: k % self.n,
                stuck_at: term as usize,
            })
    }
}

pub fn route_all_pairs(g: &DirectedGraph, oracle: &DistanceOracle<'_>) -> Result<RoutingMatrix> {
    let n = g.len();
    let rows: Vec<(Vec<u32>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut terminal = Vec::with_capacity(n);
            let mut moves = Vec::with_capacity(n);
            for t in 0..n {
                let trace = greedy_search(g, oracle, s, Query::Node(t))?;
                terminal.push(trace.terminal as u32);
                moves.push(trace.moves as u32);
            }
            Ok((terminal, moves))
        })
        .collect::<Result<_>>()?;
    let (terminal, moves): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(RoutingMatrix {
        n,
        terminal: terminal.into_iter().flatten().collect(),
        moves: moves.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{euclidean_oracle, gen_random_sign_points, PointSet};

    fn fig1() -> (PointSet, DirectedGraph) {
        let ps = PointSet::new(
            5,
            2,
            vec![4.0, -2.0, 6.0, -1.0, 2.0, 1.0, 0.0, 0.0, 1.0, -2.0],
        )
        .unwrap();
        let g = DirectedGraph::from_edges(
            5,
            [
                (0, 1),
                (0, 3),
                (1, 0),
                (2, 0),
                (2, 3),
                (3, 2),
                (3, 4),
                (4, 0),
                (4, 3),
            ],
        )
        .unwrap();
        (ps, g)
    }

    #[test]
    fn fig1_routes() {
        let (ps, g) = fig1();
        let o = euclidean_oracle(&ps);
        let trace = greedy_search(&g, &o, 2, Query::Point(ps.row(1))).unwrap();
        assert_eq!(trace.path, vec![2, 0, 1]);
        assert_eq!(trace.terminal, 1);
        assert_eq!(trace.moves, 2);
        assert_eq!(trace.reason, Termination::ReachedNoImprovement);

        let trace = greedy_search(&g, &o, 1, Query::Point(ps.row(3))).unwrap();
        assert_eq!(trace.path, vec![1, 0, 3]);
    }

    #[test]
    fn start_equals_target() {
        let (ps, g) = fig1();
        let o = euclidean_oracle(&ps);
        for t in 0..5 {
            let trace = greedy_search(&g, &o, t, Query::Node(t)).unwrap();
            assert_eq!(trace.path, vec![t]);
            assert_eq!(trace.moves, 0);
        }
    }

    #[test]
    fn empty_neighborhood_stops() {
        let (ps, _) = fig1();
        let o = euclidean_oracle(&ps);
        let trace = greedy_search(&DirectedGraph::empty(5), &o, 0, Query::Node(3)).unwrap();
        assert_eq!(trace.reason, Termination::EmptyNeighborhood);
        assert_eq!(trace.path, vec![0]);
    }

    #[test]
    fn bad_start_and_dimension() {
        let (ps, g) = fig1();
        let o = euclidean_oracle(&ps);
        assert!(greedy_search(&g, &o, 5, Query::Node(0)).is_err());
        assert!(greedy_search(&g, &o, 0, Query::Point(&[1.0])).is_err());
    }

    #[test]
    fn equal_distance_moves_only_to_lower_id() {
        // Query at the origin; nodes 0 and 2 both at distance 1.
        let ps = PointSet::new(3, 1, vec![1.0, 5.0, -1.0]).unwrap();
        let o = euclidean_oracle(&ps);
        let g = DirectedGraph::from_edges(3, [(2, 0), (0, 2)]).unwrap();
        let q = [0.0];
        let from_two = greedy_search(&g, &o, 2, Query::Point(&q)).unwrap();
        assert_eq!(from_two.path, vec![2, 0]);
        let from_zero = greedy_search(&g, &o, 0, Query::Point(&q)).unwrap();
        assert_eq!(from_zero.path, vec![0]);
    }

    #[test]
    fn fig1_all_pairs() {
        let (ps, g) = fig1();
        let o = euclidean_oracle(&ps);
        let rm = route_all_pairs(&g, &o).unwrap();
        assert!(rm.all_succeeded());
        assert_eq!(rm.success_count(), 25);
        assert!(rm.max_moves() <= 4);

        let broken = g.without_edge(3, 4);
        assert_eq!(broken.edge_count(), 8);
        let rm = route_all_pairs(&broken, &o).unwrap();
        assert!(!rm.success(2, 4));
        let trace = greedy_search(&broken, &o, 2, Query::Node(4)).unwrap();
        assert_eq!(trace.terminal, 3);
        assert!(rm.first_failure().is_some());
    }

    #[test]
    fn degree_stats_cases() {
        let (_, g) = fig1();
        let s = g.degree_stats();
        assert_eq!((s.edge_count, s.avg_degree, s.max_out_degree), (9, 1.8, 2));
        let s = DirectedGraph::empty(7).degree_stats();
        assert_eq!((s.edge_count, s.avg_degree, s.max_out_degree), (0, 0.0, 0));
        let s = DirectedGraph::complete(7).degree_stats();
        assert_eq!((s.edge_count, s.avg_degree, s.max_out_degree), (42, 6.0, 6));
    }

    #[test]
    fn construction_normalizes() {
        let g = DirectedGraph::from_adjacency(vec![vec![2, 1, 1, 0], vec![], vec![0]]).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2]);
        assert_eq!(g.edge_count(), 3);
        assert!(DirectedGraph::from_adjacency(vec![vec![3], vec![], vec![]]).is_err());
    }

    #[test]
    fn complete_graph_routes_in_one_move() {
        let ps = gen_random_sign_points(40, 32, 3).unwrap();
        let o = euclidean_oracle(&ps);
        let rm = route_all_pairs(&DirectedGraph::complete(40), &o).unwrap();
        assert!(rm.all_succeeded());
        assert!(rm.max_moves() <= 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn traces_strictly_improve(
                n in 2usize..40,
                seed: u64,
                edges in proptest::collection::vec((0usize..40, 0usize..40), 0..200),
            ) {
                let ps = gen_random_sign_points(n, 16, seed).unwrap();
                let o = euclidean_oracle(&ps);
                let g = DirectedGraph::from_edges(
                    n,
                    edges.into_iter().filter(|&(u, v)| u < n && v < n),
                ).unwrap();
                for s in 0..n {
                    for t in 0..n {
                        let trace = greedy_search(&g, &o, s, Query::Node(t)).unwrap();
                        prop_assert!(trace.path.len() <= n);
                        prop_assert_eq!(trace.moves, trace.path.len() - 1);
                        for w in trace.path.windows(2) {
                            let a = (o.between(t, w[0]).unwrap(), w[0]);
                            let b = (o.between(t, w[1]).unwrap(), w[1]);
                            prop_assert!(b < a);
                        }
                    }
                }
            }
        }
    }
}
