//! Point sets, distance oracles and the point-set generators.
//!
//! Everything downstream indexes into a [`PointSet`] by [`NodeId`] and asks a
//! [`DistanceOracle`] for distances. The oracle is neither assumed symmetric
//! nor metric; the only contract is `D(x, x) = 0` and `D(x, y) > 0` for
//! distinct points, which is checked lazily where distances are consumed.
//!
//! Random generators use ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`, so output depends only on the parameters and the seed.

use std::collections::HashMap;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Zero-based node index into a [`PointSet`].
pub type NodeId = usize;

/// Seed for every randomized procedure in the crate.
pub type Seed = u64;

/// Largest supported point count; node ids are stored as `u32` internally.
pub const MAX_POINTS: usize = (1 << 31) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointKind {
    General,
    /// Every coordinate is exactly `-1.0` or `+1.0`.
    Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    n: usize,
    d: usize,
    data: Vec<f64>,
    kind: PointKind,
}

impl PointSet {
    /// Row-major `n x d` coordinates; all entries must be finite.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_POINTS {
            return Err(Error::out_of_range("n", n, format!("1..={MAX_POINTS}")));
        }
        if d == 0 {
            return Err(Error::out_of_range("d", d, ">= 1"));
        }
        if data.len() != n * d {
            return Err(Error::SizeMismatch {
                left: data.len(),
                right: n * d,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPoints(format!(
                "non-finite coordinate {} at point {}, dimension {}",
                data[pos],
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            n,
            d,
            data,
            kind: PointKind::General,
        })
    }

    /// Like [`PointSet::new`] but additionally requires every entry to be `±1`.
    pub fn new_sign(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(n, d, data)?.into_sign()
    }

    /// Re-tags a general point set as a sign set if every entry is `±1`.
    pub fn into_sign(mut self) -> Result<Self> {
        if let Some(pos) = self.data.iter().position(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidPoints(format!(
                "coordinate {} at point {} is not +1/-1",
                self.data[pos],
                pos / self.d
            )));
        }
        self.kind = PointKind::Sign;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn is_sign(&self) -> bool {
        self.kind == PointKind::Sign
    }

    pub fn row(&self, i: NodeId) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn check_node(&self, i: NodeId) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::out_of_range("node", i, format!("0..{}", self.n)))
        }
    }

    /// First pair `(i, j)` with `i < j` and identical coordinates, if any.
    pub fn find_duplicate(&self) -> Option<(NodeId, NodeId)> {
        let mut seen: HashMap<Vec<u64>, NodeId> = HashMap::with_capacity(self.n);
        for (j, row) in self.rows().enumerate() {
            // -0.0 and 0.0 are the same coordinate.
            let key = row.iter().map(|&v| (v + 0.0).to_bits()).collect();
            if let Some(&i) = seen.get(&key) {
                return Some((i, j));
            }
            seen.insert(key, j);
        }
        None
    }

    pub fn check_distinct(&self) -> bool {
        self.find_duplicate().is_none()
    }

    pub(crate) fn require_distinct(&self) -> Result<()> {
        match self.find_duplicate() {
            Some((first, second)) => Err(Error::DuplicatePoints { first, second }),
            None => Ok(()),
        }
    }
}

/// Sign vectors packed one bit per coordinate (bit set for `+1`).
///
/// Inner products are exact integers: `<x, y> = d - 2 * popcount(x ^ y)`.
#[derive(Clone, Debug)]
pub struct PackedSigns {
    n: usize,
    d: usize,
    words: usize,
    bits: Vec<u64>,
}

impl PackedSigns {
    pub fn new(ps: &PointSet) -> Result<Self> {
        if !ps.is_sign() {
            return Err(Error::WrongKind);
        }
        let words = ps.d.div_ceil(64);
        let mut bits = vec![0u64; ps.n * words];
        for (i, row) in ps.rows().enumerate() {
            let dst = &mut bits[i * words..(i + 1) * words];
            for (k, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    dst[k / 64] |= 1 << (k % 64);
                }
            }
        }
        Ok(Self {
            n: ps.n,
            d: ps.d,
            words,
            bits,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn row(&self, i: NodeId) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Number of coordinates where the two vectors differ.
    pub fn hamming(&self, i: NodeId, j: NodeId) -> u32 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn inner(&self, i: NodeId, j: NodeId) -> i64 {
        self.d as i64 - 2 * i64::from(self.hamming(i, j))
    }
}

/// Caller-supplied distance rule over raw coordinates, `rule(query, point)`.
pub type DistanceFn<'a> = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'a;

enum Rule<'a> {
    Euclidean { packed: Option<PackedSigns> },
    Custom(Box<DistanceFn<'a>>),
}

/// The target of a distance evaluation: a node of the point set or a free point.
#[derive(Clone, Copy, Debug)]
pub enum Query<'q> {
    Node(NodeId),
    Point(&'q [f64]),
}

/// Distance oracle bound to a point set. `between(i, j)` is `D(x_i, x_j)`,
/// the distance of point `j` as seen from anchor `i`.
pub struct DistanceOracle<'a> {
    points: &'a PointSet,
    rule: Rule<'a>,
}

impl<'a> DistanceOracle<'a> {
    /// Exact Euclidean distance. Sign point sets are evaluated through packed
    /// bits as `sqrt(4 * hamming)`, which is bit-identical to the float sum.
    pub fn euclidean(points: &'a PointSet) -> Self {
        let packed = points
            .is_sign()
            .then(|| PackedSigns::new(points).expect("sign kind checked"));
        Self {
            points,
            rule: Rule::Euclidean { packed },
        }
    }

    pub fn custom<F>(points: &'a PointSet, rule: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'a,
    {
        Self {
            points,
            rule: Rule::Custom(Box::new(rule)),
        }
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    fn raw(&self, query: Query<'_>, j: NodeId) -> f64 {
        match (&self.rule, query) {
            (Rule::Euclidean { packed: Some(p) }, Query::Node(i)) => {
                (4.0 * f64::from(p.hamming(i, j))).sqrt()
            }
            (Rule::Euclidean { .. }, q) => euclidean(self.resolve(q), self.points.row(j)),
            (Rule::Custom(f), q) => f(self.resolve(q), self.points.row(j)),
        }
    }

    fn resolve<'q>(&'q self, query: Query<'q>) -> &'q [f64] {
        match query {
            Query::Node(i) => self.points.row(i),
            Query::Point(p) => p,
        }
    }

    /// `D(query, x_j)`; fails on NaN or infinity.
    pub fn distance(&self, query: Query<'_>, j: NodeId) -> Result<f64> {
        let v = self.raw(query, j);
        if v.is_finite() {
            Ok(v)
        } else {
            let from = match query {
                Query::Node(i) => i,
                Query::Point(_) => usize::MAX,
            };
            Err(Error::NonFiniteDistance { from, to: j })
        }
    }

    pub fn between(&self, i: NodeId, j: NodeId) -> Result<f64> {
        self.distance(Query::Node(i), j)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn euclidean_oracle(ps: &PointSet) -> DistanceOracle<'_> {
    DistanceOracle::euclidean(ps)
}

/// `n` points with i.i.d. uniform `±1` coordinates.
///
/// The matrix is filled row-major from a single ChaCha8 stream: coordinate
/// number `k` (row-major) is `+1` iff bit `k % 64` of the `k / 64`-th
/// `next_u64` output is set.
pub fn gen_random_sign_points(n: usize, d: usize, seed: Seed) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::out_of_range("n", n, ">= 1"));
    }
    if d == 0 {
        return Err(Error::out_of_range("d", d, ">= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n * d;
    let mut data = Vec::with_capacity(total);
    let mut word = 0u64;
    for k in 0..total {
        if k % 64 == 0 {
            word = rng.next_u64();
        }
        data.push(if word >> (k % 64) & 1 == 1 { 1.0 } else { -1.0 });
    }
    PointSet::new_sign(n, d, data)
}

/// Basis vectors `e_0 .. e_{n-2}` plus the origin as node `n - 1`, in
/// dimension `n - 1`. The origin is every other point's unique nearest
/// neighbor, so any navigable graph gives it out-degree `n - 1`.
pub fn gen_hub_instance(n: usize) -> Result<PointSet> {
    if n < 2 {
        return Err(Error::out_of_range("n", n, ">= 2"));
    }
    let d = n - 1;
    let mut data = vec![0.0; n * d];
    for i in 0..d {
        data[i * d + i] = 1.0;
    }
    PointSet::new(n, d, data)
}

pub fn check_distinct(ps: &PointSet) -> bool {
    ps.check_distinct()
}
