//! Sparse navigable graphs over arbitrary point sets.
//!
//! A directed graph over points `x_0 .. x_{n-1}` is navigable when greedy
//! search started anywhere, with any point of the set as the query, ends at
//! that point. This crate
//!
//! * builds navigable graphs with `O(sqrt(n ln n))` average degree for any
//!   distance function ([`construct`]),
//! * verifies navigability exactly, both through the permutation criterion
//!   and by routing every ordered pair ([`verify`]),
//! * computes per-instance edge-count lower bounds and related statistics
//!   for random sign vectors, plus the basis-vector instance that forces a
//!   node of out-degree `n - 1` ([`lowerlab`]).
//!
//! Node ids are zero-based everywhere, including the file formats in
//! [`formats`].

pub mod construct;
pub mod error;
pub mod formats;
pub mod graph;
pub mod lowerlab;
pub mod model;
pub mod permute;
pub mod verify;

pub use construct::{build_knn_baseline, build_randomized, build_setcover, BuildReport, Method};
pub use error::{Error, Result};
pub use graph::{degree_stats, greedy_search, route_all_pairs, DirectedGraph, RouteTrace};
pub use model::{
    check_distinct, euclidean_oracle, gen_hub_instance, gen_random_sign_points, DistanceOracle,
    NodeId, PointKind, PointSet, Query, Seed,
};
pub use permute::{build_permutations, PermutationTable};
pub use verify::{audit_claim5, verify_exhaustive, verify_property, VerifyReport};
