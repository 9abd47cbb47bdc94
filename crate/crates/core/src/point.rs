//! Points on the integer grid, weighted point sets keyed by timestamp, and the
//! Euclidean metric helpers every other module builds on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the grid `[Δ]^d`. Coordinates are signed so zero-based
/// synthetic data is representable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint(pub Vec<i64>);

impl GridPoint {
    pub fn new(coords: Vec<i64>) -> Self {
        GridPoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Squared Euclidean distance, computed exactly in integers.
    pub fn dist_sq(&self, other: &GridPoint) -> u128 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = (*a as i128 - *b as i128).unsigned_abs();
                d * d
            })
            .sum()
    }

    /// True when every coordinate lies in `[lo, hi]`.
    pub fn within(&self, lo: i64, hi: i64) -> bool {
        self.0.iter().all(|&c| c >= lo && c <= hi)
    }
}

impl From<Vec<i64>> for GridPoint {
    fn from(v: Vec<i64>) -> Self {
        GridPoint(v)
    }
}

/// A candidate center. Centers are allowed to live in `R^d`; the solvers only
/// ever produce grid points but the cost functions accept any location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Center(pub Vec<f64>);

impl Center {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<&GridPoint> for Center {
    fn from(p: &GridPoint) -> Self {
        Center(p.0.iter().map(|&c| c as f64).collect())
    }
}

impl From<GridPoint> for Center {
    fn from(p: GridPoint) -> Self {
        Center::from(&p)
    }
}

/// Bitmask over group ids; bit `j` set means the point belongs to group `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupMask(pub u64);

impl GroupMask {
    pub fn single(group: usize) -> Self {
        GroupMask(1 << group)
    }

    pub fn contains(self, group: usize) -> bool {
        group < 64 && self.0 & (1 << group) != 0
    }
}

/// The atom of every stream. Identity is the timestamp alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimedPoint {
    pub location: GridPoint,
    pub timestamp: i64,
    pub weight: f64,
    pub groups: GroupMask,
}

impl TimedPoint {
    pub fn new(location: GridPoint, timestamp: i64, weight: f64, groups: GroupMask) -> Self {
        TimedPoint {
            location,
            timestamp,
            weight,
            groups,
        }
    }

    pub fn unit(coords: Vec<i64>, timestamp: i64, groups: GroupMask) -> Self {
        TimedPoint::new(GridPoint(coords), timestamp, 1.0, groups)
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

impl PartialEq for TimedPoint {
    fn eq(&self, other: &Self) -> bool {
        self.timestamp == other.timestamp
    }
}

impl Eq for TimedPoint {}

/// A multiset of timestamped points with a cached total weight. Set algebra is
/// on timestamps, never on coordinates.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WeightedPointSet {
    points: BTreeMap<i64, TimedPoint>,
    total_weight: f64,
}

impl WeightedPointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn recompute_total(&self) -> f64 {
        self.points.values().map(|p| p.weight).sum()
    }

    /// Inserts `p`, replacing any point with the same timestamp. Points with
    /// non-positive weight are rejected.
    pub fn insert(&mut self, p: TimedPoint) -> Result<Option<TimedPoint>> {
        if !(p.weight > 0.0) || !p.weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "point {} has non-positive weight {}",
                p.timestamp, p.weight
            )));
        }
        self.total_weight += p.weight;
        let old = self.points.insert(p.timestamp, p);
        if let Some(o) = &old {
            self.total_weight -= o.weight;
        }
        Ok(old)
    }

    pub fn remove(&mut self, timestamp: i64) -> Option<TimedPoint> {
        let old = self.points.remove(&timestamp)?;
        if self.points.is_empty() {
            self.total_weight = 0.0;
        } else {
            self.total_weight -= old.weight;
        }
        Some(old)
    }

    pub fn get(&self, timestamp: i64) -> Option<&TimedPoint> {
        self.points.get(&timestamp)
    }

    pub fn contains(&self, timestamp: i64) -> bool {
        self.points.contains_key(&timestamp)
    }

    /// Points in increasing timestamp order.
    pub fn iter(&self) -> impl Iterator<Item = &TimedPoint> {
        self.points.values()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = i64> + '_ {
        self.points.keys().copied()
    }

    pub fn into_points(self) -> Vec<TimedPoint> {
        self.points.into_values().collect()
    }

    pub fn to_points(&self) -> Vec<TimedPoint> {
        self.points.values().cloned().collect()
    }

    /// Union on timestamps; on collisions the point from `self` wins.
    pub fn union(&self, other: &WeightedPointSet) -> WeightedPointSet {
        let mut out = self.clone();
        for p in other.iter() {
            if !out.contains(p.timestamp) {
                // weights in a set are always positive
                out.insert(p.clone()).expect("positive weight");
            }
        }
        out
    }

    /// Intersection on timestamps, keeping the weights of `self`.
    pub fn intersection(&self, other: &WeightedPointSet) -> WeightedPointSet {
        self.filter(|p| other.contains(p.timestamp))
    }

    pub fn filter(&self, mut keep: impl FnMut(&TimedPoint) -> bool) -> WeightedPointSet {
        self.iter().filter(|p| keep(p)).cloned().collect()
    }

    /// Points whose timestamp lies in `[lo, hi)`.
    pub fn time_range(&self, lo: i64, hi: i64) -> WeightedPointSet {
        if lo >= hi {
            return WeightedPointSet::new();
        }
        self.points.range(lo..hi).map(|(_, p)| p.clone()).collect()
    }

    /// Uniformly rescales weights so the total becomes `total`.
    pub fn rescaled_to(&self, total: f64) -> WeightedPointSet {
        if self.is_empty() {
            return self.clone();
        }
        let f = total / self.total_weight;
        self.iter().map(|p| p.clone().with_weight(p.weight * f)).collect()
    }

    /// Restriction to points whose mask equals `mask` exactly.
    pub fn with_mask(&self, mask: GroupMask) -> WeightedPointSet {
        self.filter(|p| p.groups == mask)
    }

    /// Distinct masks present, in increasing order.
    pub fn masks(&self) -> Vec<GroupMask> {
        let mut m: Vec<GroupMask> = self.iter().map(|p| p.groups).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn dim(&self) -> Option<usize> {
        self.iter().next().map(|p| p.location.dim())
    }
}

impl FromIterator<TimedPoint> for WeightedPointSet {
    fn from_iter<I: IntoIterator<Item = TimedPoint>>(iter: I) -> Self {
        let mut s = WeightedPointSet::new();
        for p in iter {
            if p.weight > 0.0 {
                s.insert(p).expect("positive weight");
            }
        }
        s
    }
}

/// Problem parameters shared by the sketches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteringParams {
    pub k: usize,
    pub z: u32,
    /// Grid bound Δ.
    pub delta: i64,
    pub dim: usize,
    pub epsilon: f64,
    pub fail_prob: f64,
}

impl ClusteringParams {
    pub fn new(k: usize, z: u32, delta: i64, dim: usize, epsilon: f64, fail_prob: f64) -> Result<Self> {
        let p = ClusteringParams {
            k,
            z,
            delta,
            dim,
            epsilon,
            fail_prob,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if self.z < 1 {
            return bad("z must be at least 1");
        }
        if self.delta < 1 || self.dim < 1 {
            return bad("grid bound and dimension must be positive");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0,1)");
        }
        if !(self.fail_prob > 0.0 && self.fail_prob < 1.0) {
            return bad("failure probability must lie in (0,1)");
        }
        Ok(())
    }

    /// `⌈lg(Δ√d)⌉`, the deepest ring index.
    pub fn max_ring(&self) -> u32 {
        max_ring_index(self.delta, self.dim)
    }
}

/// Smallest `j ≥ 0` with `4^j ≥ Δ²·d`, i.e. `⌈lg(Δ√d)⌉`.
pub fn max_ring_index(delta: i64, dim: usize) -> u32 {
    let target = (delta as u128) * (delta as u128) * dim as u128;
    let mut j = 0u32;
    while 4u128.pow(j) < target {
        j += 1;
    }
    j
}

/// `dist(a,b)^z` for two grid points.
pub fn dist_z(a: &GridPoint, b: &GridPoint, z: u32) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(pow_dist(a.dist_sq(b) as f64, z))
}

/// `dist(p,c)^z` between a grid point and an arbitrary center.
pub fn dist_z_center(p: &GridPoint, c: &Center, z: u32) -> f64 {
    debug_assert_eq!(p.dim(), c.dim());
    let sq: f64 = p
        .0
        .iter()
        .zip(&c.0)
        .map(|(&a, &b)| {
            let d = a as f64 - b;
            d * d
        })
        .sum();
    pow_dist(sq, z)
}

/// Converts a squared distance into `dist^z`.
pub(crate) fn pow_dist(sq: f64, z: u32) -> f64 {
    match z {
        1 => sq.sqrt(),
        2 => sq,
        _ if z % 2 == 0 => sq.powi(z as i32 / 2),
        _ => sq.sqrt().powi(z as i32),
    }
}

/// Dyadic ring of a point relative to a center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ring {
    /// Zero distance: the point sits on the center.
    Inner,
    /// `2^{j-1} < dist ≤ 2^j`; ring 0 covers `(0, 1]`.
    Annulus(u32),
}

impl Ring {
    /// Outer radius of the ring; zero for the inner bucket.
    pub fn radius(self) -> f64 {
        match self {
            Ring::Inner => 0.0,
            Ring::Annulus(j) => 2f64.powi(j as i32),
        }
    }
}

/// Ring index of `p` around `q`. Rings are half-open `(r/2, r]`.
pub fn ring_index(p: &GridPoint, q: &GridPoint) -> Ring {
    ring_of_dist_sq(p.dist_sq(q))
}

pub(crate) fn ring_of_dist_sq(sq: u128) -> Ring {
    if sq == 0 {
        return Ring::Inner;
    }
    // smallest j with dist ≤ 2^j, i.e. sq ≤ 4^j
    let mut j = 0u32;
    while 4u128.pow(j) < sq {
        j += 1;
    }
    Ring::Annulus(j)
}

/// Index of the closest center; ties go to the lowest index.
pub fn nearest_center(p: &GridPoint, centers: &[GridPoint]) -> Result<usize> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    let mut best = 0;
    let mut best_d = u128::MAX;
    for (i, c) in centers.iter().enumerate() {
        if c.dim() != p.dim() {
            return Err(Error::DimensionMismatch(p.dim(), c.dim()));
        }
        let d = p.dist_sq(c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    Ok(best)
}
