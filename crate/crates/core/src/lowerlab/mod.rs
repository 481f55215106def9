//! Empirical side of the edge-count lower bound for random sign vectors.
//!
//! For a sign point set, `O_j` is every point whose inner product with `x_j`
//! is at least `tau = c_h * sqrt(d ln n)` (natural log throughout). Any
//! navigable graph needs `|O_j| - 1` edges inside each `O_j`, and an edge
//! `(u, v)` lies inside exactly `|O_u ∩ O_v|` of the neighborhoods. Dividing
//! the total requirement by the largest pairwise overlap therefore gives a
//! floor on the edge count of every navigable graph for that instance.

mod binom;
mod bitset;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use binom::{binom_tail_exact, ln_binom_tail, ln_pmf_half, MAX_TRIALS};
pub use bitset::Bitset;

use crate::error::{Error, Result};
use crate::graph::{greedy_search, DirectedGraph};
use crate::model::{gen_hub_instance, DistanceOracle, NodeId, PackedSigns, PointSet, Query, Seed};

/// Logarithm used in the neighborhood radius and the calibration; recorded in reports.
pub const LOG_BASE: &str = "ln";

/// Solves `exp(-c^2 ln n) / sqrt(ln n) = 1 / sqrt(n)` for `c`, i.e.
/// `c = sqrt(1/2 - ln ln n / (2 ln n))`, clamped to `[1/3, 1]`.
pub fn calibrate_ch(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::out_of_range("n", n, ">= 3"));
    }
    let ln_n = (n as f64).ln();
    let c = (0.5 - ln_n.ln() / (2.0 * ln_n)).sqrt();
    let clamped = c.clamp(1.0 / 3.0, 1.0);
    if clamped != c {
        log::warn!("calibrated c_h = {c} for n = {n} clamped to {clamped}");
    }
    Ok(clamped)
}

/// Fixed-radius neighborhoods `O_j`, one bitset per node.
#[derive(Clone, Debug, PartialEq)]
pub struct NearNeighborhoodSet {
    c_h: f64,
    threshold: f64,
    hoods: Vec<Bitset>,
}

impl NearNeighborhoodSet {
    /// Wraps precomputed bitsets; every bitset must have capacity `hoods.len()`.
    pub fn from_bitsets(c_h: f64, threshold: f64, hoods: Vec<Bitset>) -> Self {
        let n = hoods.len();
        assert!(hoods.iter().all(|h| h.capacity() == n));
        Self {
            c_h,
            threshold,
            hoods,
        }
    }

    pub fn len(&self) -> usize {
        self.hoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hoods.is_empty()
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    /// `tau` in inner-product units.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn hood(&self, j: NodeId) -> &Bitset {
        &self.hoods[j]
    }

    pub fn hood_mut(&mut self, j: NodeId) -> &mut Bitset {
        &mut self.hoods[j]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.hoods.iter().map(Bitset::count).collect()
    }

    /// `|O_u ∩ O_v|`, which equals the number of `j` with `u, v ∈ O_j`.
    pub fn overlap(&self, u: NodeId, v: NodeId) -> usize {
        self.hoods[u].intersection_count(&self.hoods[v])
    }

    /// `sum_j max(|O_j| - 1, 0)`.
    pub fn sum_required(&self) -> u64 {
        self.hoods
            .iter()
            .map(|h| h.count().saturating_sub(1) as u64)
            .sum()
    }
}

pub fn build_hoods(ps: &PointSet, c_h: f64) -> Result<NearNeighborhoodSet> {
    if !ps.is_sign() {
        return Err(Error::WrongKind);
    }
    if !(c_h > 0.0 && c_h <= 1.0) {
        return Err(Error::out_of_range("c_h", c_h, "(0, 1]"));
    }
    let n = ps.len();
    let threshold = c_h * (ps.dim() as f64 * (n as f64).ln()).sqrt();
    let packed = PackedSigns::new(ps)?;
    let hoods = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut hood = Bitset::new(n);
            for i in 0..n {
                if packed.inner(i, j) as f64 >= threshold {
                    hood.insert(i);
                }
            }
            hood
        })
        .collect();
    Ok(NearNeighborhoodSet {
        c_h,
        threshold,
        hoods,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapStats {
    pub max_overlap: usize,
    /// `histogram[s]` = number of unordered pairs `i != j` with `|O_i ∩ O_j| = s`.
    pub histogram: Vec<u64>,
}

impl OverlapStats {
    /// CSV with columns `overlap_size,pair_count`; sizes with no pairs are skipped.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "overlap_size,pair_count")?;
        for (size, &count) in self.histogram.iter().enumerate() {
            if count > 0 {
                writeln!(out, "{size},{count}")?;
            }
        }
        Ok(())
    }
}

fn merge_histograms(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (slot, v) in a.iter_mut().zip(b) {
        *slot += v;
    }
    a
}

pub fn overlap_stats(hoods: &NearNeighborhoodSet) -> Result<OverlapStats> {
    let n = hoods.len();
    if n < 2 {
        return Err(Error::out_of_range("n", n, ">= 2"));
    }
    let histogram = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut local = Vec::new();
            for j in i + 1..n {
                let s = hoods.overlap(i, j);
                if s >= local.len() {
                    local.resize(s + 1, 0);
                }
                local[s] += 1;
            }
            local
        })
        .reduce(Vec::new, merge_histograms);
    let max_overlap = histogram.iter().rposition(|&c| c > 0).unwrap_or(0);
    Ok(OverlapStats {
        max_overlap,
        histogram,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub n: usize,
    pub c_h: f64,
    pub threshold: f64,
    pub log_base: String,
    pub min_hood: usize,
    pub mean_hood: f64,
    pub max_hood: usize,
    pub max_overlap: usize,
    pub sum_required: u64,
    pub certified_lb: u64,
    /// Certified lower bound on the average out-degree, `certified_lb / n`.
    pub certified_avg_degree: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_pair_inner: Option<f64>,
}

/// Certificate from precomputed overlap statistics.
pub fn certify(hoods: &NearNeighborhoodSet, overlaps: &OverlapStats) -> Result<LowerBoundReport> {
    let n = hoods.len();
    let sizes = hoods.sizes();
    let sum_required = hoods.sum_required();
    let max_overlap = overlaps.max_overlap;
    if max_overlap == 0 && sum_required > 0 {
        return Err(Error::DegenerateHoods { sum_required });
    }
    let certified_lb = if sum_required == 0 {
        0
    } else {
        sum_required.div_ceil(max_overlap as u64)
    };
    Ok(LowerBoundReport {
        n,
        c_h: hoods.c_h,
        threshold: hoods.threshold,
        log_base: LOG_BASE.to_string(),
        min_hood: sizes.iter().copied().min().unwrap_or(0),
        mean_hood: sizes.iter().sum::<usize>() as f64 / n.max(1) as f64,
        max_hood: sizes.iter().copied().max().unwrap_or(0),
        max_overlap,
        sum_required,
        certified_lb,
        certified_avg_degree: certified_lb as f64 / n.max(1) as f64,
        max_pair_inner: None,
    })
}

/// `ceil(sum_j (|O_j| - 1) / max_{u != v} |O_u ∩ O_v|)`: no navigable graph on
/// this point set has fewer edges.
pub fn certified_lower_bound(hoods: &NearNeighborhoodSet) -> Result<LowerBoundReport> {
    certify(hoods, &overlap_stats(hoods)?)
}

/// Consistency check of the certificate against a navigable graph: the graph
/// must meet the edge floor, and its edges must cover the per-neighborhood
/// requirement when weighted by overlap. `false` means a bug somewhere.
pub fn cross_check_lb(
    hoods: &NearNeighborhoodSet,
    g: &DirectedGraph,
    verified_navigable: bool,
) -> Result<bool> {
    if !verified_navigable {
        return Err(Error::Unverified);
    }
    if g.len() != hoods.len() {
        return Err(Error::SizeMismatch {
            left: g.len(),
            right: hoods.len(),
        });
    }
    let report = certified_lower_bound(hoods)?;
    let weighted: u64 = (0..g.len())
        .into_par_iter()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&v| hoods.overlap(u, v as usize) as u64)
                .sum::<u64>()
        })
        .sum();
    Ok(g.edge_count() as u64 >= report.certified_lb && weighted >= report.sum_required)
}

/// Fraction of `samples` uniformly drawn ordered pairs `i != j` with `i ∈ O_j`.
pub fn membership_frequency(
    hoods: &NearNeighborhoodSet,
    samples: usize,
    seed: Seed,
) -> Result<f64> {
    let n = hoods.len();
    if n < 2 {
        return Err(Error::out_of_range("n", n, ">= 2"));
    }
    if samples == 0 {
        return Err(Error::out_of_range("samples", samples, ">= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let j = rng.random_range(0..n as u64) as usize;
        let mut i = rng.random_range(0..(n - 1) as u64) as usize;
        if i >= j {
            i += 1;
        }
        if hoods.hood(j).contains(i) {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// `max_{i != j} <x_i, x_j>`, computed with exact integer arithmetic.
pub fn max_inner_product(ps: &PointSet) -> Result<f64> {
    if ps.len() < 2 {
        return Err(Error::out_of_range("n", ps.len(), ">= 2"));
    }
    let packed = PackedSigns::new(ps)?;
    let n = ps.len();
    let best = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| packed.inner(i, j))
                .max()
                .unwrap_or(i64::MIN)
        })
        .max()
        .unwrap_or(i64::MIN);
    Ok(best as f64)
}

/// Neighborhoods, overlaps, certificate and maximum inner product in one pass.
pub fn lower_bound_lab(ps: &PointSet, c_h: f64) -> Result<(LowerBoundReport, OverlapStats)> {
    let hoods = build_hoods(ps, c_h)?;
    let overlaps = overlap_stats(&hoods)?;
    let mut report = certify(&hoods, &overlaps)?;
    report.max_pair_inner = Some(max_inner_product(ps)?);
    Ok((report, overlaps))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubAudit {
    pub n: usize,
    pub hub: NodeId,
    pub hub_out_degree: usize,
    /// Targets `i` for which dropping `hub -> i` from the complete graph
    /// strands greedy search from the hub.
    pub necessary_edges: usize,
    pub passed: bool,
}

/// Checks that the origin of the hub instance has out-degree `n - 1` in `g`,
/// and that each of those edges is individually necessary.
pub fn hub_degree_audit(ps: &PointSet, g: &DirectedGraph) -> Result<HubAudit> {
    let n = ps.len();
    let expected = gen_hub_instance(n).map_err(|e| Error::WrongInstance(e.to_string()))?;
    if ps.as_slice() != expected.as_slice() || ps.dim() != expected.dim() {
        return Err(Error::WrongInstance(
            "expected basis vectors followed by the origin".into(),
        ));
    }
    if g.len() != n {
        return Err(Error::SizeMismatch {
            left: g.len(),
            right: n,
        });
    }
    let hub = n - 1;
    let oracle = DistanceOracle::euclidean(ps);
    let complete = DirectedGraph::complete(n);
    let mut necessary_edges = 0;
    for i in 0..hub {
        let pruned = complete.without_edge(hub, i);
        let trace = greedy_search(&pruned, &oracle, hub, Query::Point(ps.row(i)))?;
        if trace.terminal != i {
            necessary_edges += 1;
        }
    }
    let hub_out_degree = g.out_degree(hub);
    Ok(HubAudit {
        n,
        hub,
        hub_out_degree,
        necessary_edges,
        passed: hub_out_degree == n - 1 && necessary_edges == n - 1,
    })
}
