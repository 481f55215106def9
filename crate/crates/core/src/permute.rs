//! Distance-based permutations: for every node `i`, all nodes sorted by
//! `(D(x_i, x_j), j)`. Position 0 of row `i` is always `i` itself.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{DistanceOracle, NodeId, MAX_POINTS};

/// Full `n x n` table of distance orderings and their inverses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationTable {
    n: usize,
    perm: Vec<u32>,
    rank: Vec<u32>,
}

impl PermutationTable {
    /// Builds a table from explicit rows, checking that each row is a
    /// permutation starting with its own index.
    pub fn from_rows(rows: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_POINTS {
            return Err(Error::out_of_range("n", n, format!("1..={MAX_POINTS}")));
        }
        let mut perm = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::SizeMismatch {
                    left: row.len(),
                    right: n,
                });
            }
            if row[0] != i {
                return Err(Error::InvalidPoints(format!(
                    "row {i} does not start with its own node"
                )));
            }
            perm.extend(row.iter().map(|&j| j as u32));
        }
        let rank = invert(n, &perm)?;
        Ok(Self { n, perm, rank })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row `i`: `row(i)[k]` is `N_{k+1}(i)`.
    pub fn row(&self, i: NodeId) -> &[u32] {
        &self.perm[i * self.n..(i + 1) * self.n]
    }

    /// Inverse row: `ranks(t)[j]` is the 0-based position of `j` in `row(t)`.
    pub fn ranks(&self, t: NodeId) -> &[u32] {
        &self.rank[t * self.n..(t + 1) * self.n]
    }

    pub fn rank(&self, t: NodeId, j: NodeId) -> usize {
        self.rank[t * self.n + j] as usize
    }

    /// The `m` nearest nodes to `i`, including `i` itself.
    pub fn nearest_m(&self, i: NodeId, m: usize) -> Result<&[u32]> {
        if i >= self.n {
            return Err(Error::out_of_range("node", i, format!("0..{}", self.n)));
        }
        if m == 0 || m > self.n {
            return Err(Error::out_of_range("m", m, format!("1..={}", self.n)));
        }
        Ok(&self.row(i)[..m])
    }
}

fn invert(n: usize, perm: &[u32]) -> Result<Vec<u32>> {
    let mut rank = vec![u32::MAX; n * n];
    for i in 0..n {
        let row = &perm[i * n..(i + 1) * n];
        let inv = &mut rank[i * n..(i + 1) * n];
        for (pos, &j) in row.iter().enumerate() {
            let j = j as usize;
            if j >= n || inv[j] != u32::MAX {
                return Err(Error::InvalidPoints(format!(
                    "row {i} is not a permutation of 0..{n}"
                )));
            }
            inv[j] = pos as u32;
        }
    }
    Ok(rank)
}

/// Sorts every node's view of the point set. Rows are independent and built
/// in parallel; the result does not depend on the thread count.
pub fn build_permutations(oracle: &DistanceOracle<'_>) -> Result<PermutationTable> {
    let ps = oracle.points();
    ps.require_distinct()?;
    let n = ps.len();

    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| sorted_row(oracle, i))
        .collect::<Result<_>>()?;

    let perm: Vec<u32> = rows.into_iter().flatten().collect();
    let rank = invert(n, &perm)?;
    Ok(PermutationTable { n, perm, rank })
}

fn sorted_row(oracle: &DistanceOracle<'_>, i: NodeId) -> Result<Vec<u32>> {
    let n = oracle.points().len();
    let mut keyed = Vec::with_capacity(n);
    for j in 0..n {
        let dist = oracle.between(i, j)?;
        let ok = if i == j { dist == 0.0 } else { dist > 0.0 };
        if !ok {
            return Err(Error::InvalidDistance {
                from: i,
                to: j,
                value: dist,
            });
        }
        keyed.push((dist, j as u32));
    }
    // Distances are finite, so partial_cmp never fails; no epsilon on ties.
    keyed.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(keyed.into_iter().map(|(_, j)| j).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{euclidean_oracle, gen_random_sign_points, PointSet};

    fn fig1() -> PointSet {
        PointSet::new(
            5,
            2,
            vec![4.0, -2.0, 6.0, -1.0, 2.0, 1.0, 0.0, 0.0, 1.0, -2.0],
        )
        .unwrap()
    }

    #[test]
    fn fig1_rows() {
        let ps = fig1();
        let pt = build_permutations(&euclidean_oracle(&ps)).unwrap();
        assert_eq!(pt.row(0), &[0, 1, 4, 2, 3]);
        assert_eq!(pt.row(1), &[1, 0, 2, 4, 3]);
        assert_eq!(pt.nearest_m(0, 2).unwrap(), &[0, 1]);
    }

    #[test]
    fn single_point() {
        let ps = PointSet::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let pt = build_permutations(&euclidean_oracle(&ps)).unwrap();
        assert_eq!(pt.row(0), &[0]);
        assert_eq!(pt.nearest_m(0, 1).unwrap(), &[0]);
    }

    #[test]
    fn nearest_m_bounds() {
        let ps = fig1();
        let pt = build_permutations(&euclidean_oracle(&ps)).unwrap();
        for i in 0..5 {
            assert_eq!(pt.nearest_m(i, 1).unwrap(), &[i as u32]);
            let mut all = pt.nearest_m(i, 5).unwrap().to_vec();
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3, 4]);
        }
        assert!(pt.nearest_m(0, 0).is_err());
        assert!(pt.nearest_m(0, 6).is_err());
        assert!(pt.nearest_m(5, 1).is_err());
    }

    #[test]
    fn rejects_duplicates() {
        let ps = PointSet::new(3, 1, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(
            build_permutations(&euclidean_oracle(&ps)),
            Err(Error::DuplicatePoints {
                first: 0,
                second: 2
            })
        ));
    }

    #[test]
    fn rejects_bad_oracles() {
        let ps = fig1();
        let nan =
            crate::model::DistanceOracle::custom(
                &ps,
                |a, b| {
                    if a == b {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                },
            );
        assert!(matches!(
            build_permutations(&nan),
            Err(Error::NonFiniteDistance { .. })
        ));
        let zero = crate::model::DistanceOracle::custom(&ps, |_, _| 0.0);
        assert!(matches!(
            build_permutations(&zero),
            Err(Error::InvalidDistance { .. })
        ));
    }

    #[test]
    fn ties_break_by_id() {
        // Node 0 at the origin; 1..=4 all at distance 1.
        let ps = PointSet::new(
            5,
            2,
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0, -1.0],
        )
        .unwrap();
        let pt = build_permutations(&euclidean_oracle(&ps)).unwrap();
        assert_eq!(pt.row(0), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn asymmetric_oracle_is_allowed() {
        let ps = PointSet::new(3, 1, vec![0.0, 1.0, 3.0]).unwrap();
        let o = crate::model::DistanceOracle::custom(&ps, |a, b| {
            let diff = b[0] - a[0];
            if diff >= 0.0 {
                diff
            } else {
                -10.0 * diff
            }
        });
        let pt = build_permutations(&o).unwrap();
        assert_eq!(pt.row(2), &[2, 1, 0]);
        assert_eq!(pt.row(1), &[1, 2, 0]);
    }

    #[test]
    fn from_rows_validates() {
        assert!(PermutationTable::from_rows(vec![vec![0, 1], vec![1, 0]]).is_ok());
        assert!(PermutationTable::from_rows(vec![vec![0, 0], vec![1, 0]]).is_err());
        assert!(PermutationTable::from_rows(vec![vec![1, 0], vec![1, 0]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn matches_brute_force_stable_sort(n in 1usize..64, d in 1usize..12, seed: u64) {
                let ps = gen_random_sign_points(n, d, seed).unwrap();
                let o = euclidean_oracle(&ps);
                let Ok(pt) = build_permutations(&o) else {
                    // Small d can repeat rows; rejection is the contract.
                    prop_assert!(!ps.check_distinct());
                    return Ok(());
                };
                for i in 0..n {
                    let mut ids: Vec<u32> = (0..n as u32).collect();
                    ids.sort_by(|&a, &b| {
                        let da = crate::model::euclidean(ps.row(i), ps.row(a as usize));
                        let db = crate::model::euclidean(ps.row(i), ps.row(b as usize));
                        da.partial_cmp(&db).unwrap()
                    });
                    prop_assert_eq!(pt.row(i), &ids[..]);
                    for j in 0..n {
                        prop_assert_eq!(pt.row(i)[pt.rank(i, j)] as usize, j);
                    }
                }
            }
        }
    }
}
