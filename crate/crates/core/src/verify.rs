//! Navigability checks.
//!
//! [`verify_property`] is the permutation criterion: for every target `t` and
//! every position `l > 1`, node `N_l(t)` has an out-edge to some `N_k(t)` with
//! `k < l`. It implies navigability. [`verify_exhaustive`] runs greedy search
//! for all `n^2` ordered pairs and is the definition itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{route_all_pairs, DirectedGraph, RouteFailure};
use crate::lowerlab::NearNeighborhoodSet;
use crate::model::{DistanceOracle, NodeId};
use crate::permute::PermutationTable;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub property_holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub exhaustive_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_moves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_failure: Option<RouteFailure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub claim5_ok: Option<bool>,
}

impl VerifyReport {
    /// True when every check that ran passed.
    pub fn passed(&self) -> bool {
        [self.property_holds, self.exhaustive_ok, self.claim5_ok]
            .into_iter()
            .flatten()
            .all(|ok| ok)
    }
}

/// A `(target, position)` where the permutation criterion fails; `position`
/// is 1-based like `N_l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyViolation {
    pub target: NodeId,
    pub position: usize,
    pub node: NodeId,
}

fn check_sizes(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::SizeMismatch { left, right })
    }
}

fn target_violation(
    g: &DirectedGraph,
    pt: &PermutationTable,
    t: NodeId,
) -> Option<PropertyViolation> {
    let ranks = pt.ranks(t);
    pt.row(t)
        .iter()
        .enumerate()
        .skip(1)
        .find(|&(pos, &u)| {
            !g.neighbors(u as usize)
                .iter()
                .any(|&j| (ranks[j as usize] as usize) < pos)
        })
        .map(|(pos, &u)| PropertyViolation {
            target: t,
            position: pos + 1,
            node: u as usize,
        })
}

/// Smallest target (then position) violating the criterion, if any.
pub fn property_violation(
    g: &DirectedGraph,
    pt: &PermutationTable,
) -> Result<Option<PropertyViolation>> {
    check_sizes(g.len(), pt.len())?;
    let violations: Vec<Option<PropertyViolation>> = (0..pt.len())
        .into_par_iter()
        .map(|t| target_violation(g, pt, t))
        .collect();
    Ok(violations.into_iter().flatten().next())
}

pub fn verify_property(g: &DirectedGraph, pt: &PermutationTable) -> Result<bool> {
    Ok(property_violation(g, pt)?.is_none())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustiveReport {
    pub ok: bool,
    pub max_moves: usize,
    pub first_failure: Option<RouteFailure>,
}

pub fn verify_exhaustive(
    g: &DirectedGraph,
    oracle: &DistanceOracle<'_>,
) -> Result<ExhaustiveReport> {
    check_sizes(g.len(), oracle.points().len())?;
    oracle.points().require_distinct()?;
    let rm = route_all_pairs(g, oracle)?;
    let first_failure = rm.first_failure();
    Ok(ExhaustiveReport {
        ok: first_failure.is_none(),
        max_moves: rm.max_moves(),
        first_failure,
    })
}

/// Necessary condition for navigability: each neighborhood `O_j` spans at
/// least `|O_j| - 1` edges of `g` (self-loops never occur in `g`).
pub fn audit_claim5(g: &DirectedGraph, hoods: &NearNeighborhoodSet) -> Result<bool> {
    check_sizes(g.len(), hoods.len())?;
    let ok = (0..hoods.len()).into_par_iter().all(|j| {
        let hood = hoods.hood(j);
        let size = hood.count();
        let needed = size.saturating_sub(1);
        let mut internal = 0;
        for u in hood.iter() {
            internal += g
                .neighbors(u)
                .iter()
                .filter(|&&v| hood.contains(v as usize))
                .count();
            if internal >= needed {
                return true;
            }
        }
        internal >= needed
    });
    Ok(ok)
}
