//! Online assignment-preserving coresets.
//!
//! A Meyerson sketch routes each arriving point to a permanent center; the
//! point then lands in the dyadic ring `(2^{j-1}, 2^j]` around that center and
//! is offered to the ring's [`RingSampler`]. Points sitting exactly on their
//! center are stored verbatim. All coin flips are keyed by
//! (seed, timestamp, ring), so the coreset of a stream restricted to any
//! prefix equals the coreset built from that prefix alone.

mod record;
mod ring;

pub use record::{read_records_binary, read_records_csv, write_records_binary, write_records_csv};
pub use ring::{CoresetSample, RingId, RingSampler};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meyerson::{MeyersonConfig, MeyersonSketch};
use crate::point::{ring_index, ClusteringParams, Ring, TimedPoint, WeightedPointSet};

/// How the per-ring sampling rate `T` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampleRate {
    /// Use `T` directly.
    Explicit(f64),
    /// `c0·k·d·ε′^{-2}·ln(n·Δ/(ε′·δ″))` with `ε′ = ε/(2^z·α)`, `α = 2^{2z+4}`,
    /// `δ′ = δ/(budget·(⌈lg(Δ√d)⌉+1))` and `δ″ = δ′/(k/ε′)^{c·k·d}`.
    Derived { c0: f64, stream_len: u64, exponent_const: f64 },
    /// Aim for roughly `size` retained points. Batch builds calibrate `T`
    /// exactly; streaming builds fall back to [`target_rate`].
    Target(usize),
}

impl SampleRate {
    pub fn resolve(&self, params: &ClusteringParams, meyerson_budget: usize) -> f64 {
        match *self {
            SampleRate::Explicit(t) => t,
            SampleRate::Derived {
                c0,
                stream_len,
                exponent_const,
            } => derived_rate(params, meyerson_budget, c0, stream_len, exponent_const),
            SampleRate::Target(size) => target_rate(size, params),
        }
    }
}

/// Approximation ratio assumed for the Meyerson scaffold, `2^{2z+4}`.
pub fn meyerson_ratio(z: u32) -> f64 {
    2f64.powi(2 * z as i32 + 4)
}

fn derived_rate(params: &ClusteringParams, budget: usize, c0: f64, stream_len: u64, exponent_const: f64) -> f64 {
    let z = params.z as i32;
    let eps = params.epsilon / (2f64.powi(z) * meyerson_ratio(params.z));
    let rings = params.max_ring() as f64 + 1.0;
    let delta_ring = params.fail_prob / (budget.max(1) as f64 * rings);
    let kd = (params.k * params.dim) as f64;
    // ln(1/δ″) = ln(1/δ′) + c·k·d·ln(k/ε′)
    let log_inv_fail = -delta_ring.ln() + exponent_const * kd * (params.k as f64 / eps).ln();
    let log_term = (stream_len.max(2) as f64 * params.delta as f64 / eps).ln() + log_inv_fail;
    c0 * kd * eps.powi(-2) * log_term
}

/// Rate that makes a block of about `size` centers-and-rings worth of points
/// come out at roughly `size` samples: with `R ≈ 2k` populated rings of
/// `N` points each, a ring keeps about `T·(1 + ln(N/T))` points.
pub fn target_rate(size: usize, params: &ClusteringParams) -> f64 {
    let rings = 2.0 * params.k as f64;
    let per_ring = size as f64 / rings;
    (per_ring / (1.0 + per_ring.max(1.0).ln())).max(MIN_CALIBRATED_RATE)
}

/// Which Meyerson constants the scaffold uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Scaffold {
    Standard,
    Compact,
    Custom(MeyersonConfig),
}

impl Scaffold {
    pub fn config(&self, params: &ClusteringParams) -> MeyersonConfig {
        match self {
            Scaffold::Standard => MeyersonConfig::standard(params),
            Scaffold::Compact => MeyersonConfig::compact(params),
            Scaffold::Custom(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoresetConfig {
    pub rate: SampleRate,
    pub scaffold: Scaffold,
}

impl CoresetConfig {
    pub fn explicit(rate: f64) -> Self {
        CoresetConfig {
            rate: SampleRate::Explicit(rate),
            scaffold: Scaffold::Compact,
        }
    }

    pub fn target(size: usize) -> Self {
        CoresetConfig {
            rate: SampleRate::Target(size),
            scaffold: Scaffold::Compact,
        }
    }
}

/// Streaming construction state for one coreset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OnlineCoreset {
    params: ClusteringParams,
    rate: f64,
    seed: u64,
    stream_key: u64,
    meyerson: MeyersonSketch,
    rings: BTreeMap<RingId, RingSampler>,
    inner: Vec<CoresetSample>,
    last_timestamp: Option<i64>,
}

impl OnlineCoreset {
    pub fn new(params: ClusteringParams, config: &CoresetConfig, seed: u64) -> Result<Self> {
        Self::with_stream_key(params, config, seed, 0)
    }

    /// `stream_key` separates the coin flips of independent constructions
    /// that share a seed (merge levels, group hierarchies).
    pub fn with_stream_key(params: ClusteringParams, config: &CoresetConfig, seed: u64, stream_key: u64) -> Result<Self> {
        let mcfg = config.scaffold.config(&params);
        let rate = config.rate.resolve(&params, mcfg.budget);
        Self::with_rate(params, mcfg, rate, seed, stream_key)
    }

    /// Construction with an already resolved rate `T`.
    pub fn with_rate(params: ClusteringParams, mcfg: MeyersonConfig, rate: f64, seed: u64, stream_key: u64) -> Result<Self> {
        params.validate()?;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!("sampling rate {rate} must be positive")));
        }
        Ok(OnlineCoreset {
            meyerson: MeyersonSketch::with_stream_key(params.clone(), mcfg, seed, stream_key),
            params,
            rate,
            seed,
            stream_key,
            rings: BTreeMap::new(),
            inner: Vec::new(),
            last_timestamp: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn params(&self) -> &ClusteringParams {
        &self.params
    }

    pub fn meyerson(&self) -> &MeyersonSketch {
        &self.meyerson
    }

    /// Feeds one point. Points must arrive in increasing timestamp order.
    pub fn insert(&mut self, p: TimedPoint) -> Result<RingId> {
        if let Some(last) = self.last_timestamp {
            if p.timestamp <= last {
                return Err(Error::InvalidParameter(format!(
                    "timestamp {} arrived after {}",
                    p.timestamp, last
                )));
            }
        }
        if !(p.weight > 0.0) {
            return Err(Error::InvalidParameter(format!("point {} has weight {}", p.timestamp, p.weight)));
        }
        self.last_timestamp = Some(p.timestamp);
        let a = self.meyerson.insert(&p);
        let center = &self.meyerson.center_points()[a.center];
        let ring = ring_index(&p.location, &center.location);
        let id = RingId::new(a.center as u32, ring);
        match ring {
            Ring::Inner => self.inner.push(CoresetSample::exact(p, id)),
            Ring::Annulus(_) => {
                let (rate, seed, key) = (self.rate, self.seed, self.stream_key);
                self.rings
                    .entry(id)
                    .or_insert_with(|| RingSampler::new(id, rate, seed, key))
                    .offer(p);
            }
        }
        Ok(id)
    }

    pub fn rings(&self) -> impl Iterator<Item = &RingSampler> {
        self.rings.values()
    }

    pub fn inner(&self) -> &[CoresetSample] {
        &self.inner
    }

    /// Every retained sample, in timestamp order.
    pub fn samples(&self) -> Vec<CoresetSample> {
        let mut out: Vec<CoresetSample> = self
            .inner
            .iter()
            .cloned()
            .chain(self.rings.values().flat_map(|r| r.samples().iter().cloned()))
            .collect();
        out.sort_by_key(|s| s.point.timestamp);
        out
    }

    pub fn len(&self) -> usize {
        self.inner.len() + self.rings.values().map(|r| r.samples().len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Union of all ring samples and the inner store, with coreset weights.
    pub fn extract(&self) -> WeightedPointSet {
        self.inner
            .iter()
            .chain(self.rings.values().flat_map(|r| r.samples()))
            .map(CoresetSample::weighted_point)
            .collect()
    }

    /// `Σ_rings N_r·r_r^z`, the additive error scale of the ring decomposition.
    pub fn ring_slack(&self) -> f64 {
        let z = self.params.z as i32;
        self.rings
            .values()
            .map(|r| r.running_sum() * r.id().ring.radius().powi(z))
            .sum()
    }
}

/// Smallest rate a target size can drive `T` to. At `T = 1` the first point of
/// every ring is kept with its own weight.
pub const MIN_CALIBRATED_RATE: f64 = 1.0;

/// Rate `T` whose expected coreset size on `points` (in timestamp order) is
/// `target`.
///
/// The Meyerson routing does not depend on `T`, so one routing pass fixes
/// every ring's running sums and the expected size
/// `#inner + Σ min(T·w_i/sum_i, 1)` is a monotone function of `T`, inverted
/// here by bisection. When the block has at most `target` points the returned
/// rate keeps all of them; a target that even [`MIN_CALIBRATED_RATE`]
/// overshoots gets that rate.
pub fn calibrate_rate(points: &[TimedPoint], params: &ClusteringParams, mcfg: &MeyersonConfig, seed: u64, stream_key: u64, target: usize) -> f64 {
    let mut sketch = MeyersonSketch::with_stream_key(params.clone(), mcfg.clone(), seed, stream_key);
    let mut sums: BTreeMap<RingId, f64> = BTreeMap::new();
    let mut inner = 0usize;
    let mut ratios = Vec::with_capacity(points.len());
    for p in points {
        let a = sketch.insert(p);
        let ring = ring_index(&p.location, &sketch.center_points()[a.center].location);
        if ring == Ring::Inner {
            inner += 1;
            continue;
        }
        let s = sums.entry(RingId::new(a.center as u32, ring)).or_insert(0.0);
        *s += p.weight;
        ratios.push(p.weight / *s);
    }
    let hi = ratios.iter().fold(1.0f64, |m, &r| m.max(1.0 / r));
    if inner + ratios.len() <= target {
        return hi;
    }
    let expected = |t: f64| inner as f64 + ratios.iter().map(|&r| (t * r).min(1.0)).sum::<f64>();
    if expected(MIN_CALIBRATED_RATE) >= target as f64 {
        return MIN_CALIBRATED_RATE;
    }
    let (mut lo, mut hi) = (MIN_CALIBRATED_RATE, hi);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if expected(mid) < target as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Builds a coreset of a finite batch, taken in timestamp order. A target
/// size is met in expectation by calibrating `T` on the batch first.
pub fn build_coreset_keyed<'a>(
    points: impl IntoIterator<Item = &'a TimedPoint>,
    params: ClusteringParams,
    config: &CoresetConfig,
    seed: u64,
    stream_key: u64,
) -> Result<OnlineCoreset> {
    let mut pts: Vec<TimedPoint> = points.into_iter().cloned().collect();
    pts.sort_by_key(|p| p.timestamp);
    let mcfg = config.scaffold.config(&params);
    let rate = match config.rate {
        SampleRate::Target(size) => calibrate_rate(&pts, &params, &mcfg, seed, stream_key, size),
        ref r => r.resolve(&params, mcfg.budget),
    };
    let mut c = OnlineCoreset::with_rate(params, mcfg, rate, seed, stream_key)?;
    for p in pts {
        c.insert(p)?;
    }
    Ok(c)
}

pub fn build_coreset<'a>(
    points: impl IntoIterator<Item = &'a TimedPoint>,
    params: ClusteringParams,
    config: &CoresetConfig,
    seed: u64,
) -> Result<OnlineCoreset> {
    build_coreset_keyed(points, params, config, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{GridPoint, GroupMask};

    fn params() -> ClusteringParams {
        ClusteringParams::new(2, 1, 64, 2, 0.5, 0.1).unwrap()
    }

    #[test]
    fn empty_and_single() {
        let mut c = OnlineCoreset::new(params(), &CoresetConfig::explicit(2.0), 1).unwrap();
        assert!(c.extract().is_empty());
        c.insert(TimedPoint::unit(vec![3, 3], 5, GroupMask(1)).with_weight(2.0)).unwrap();
        let s = c.extract();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(5).unwrap().weight, 2.0);
    }

    #[test]
    fn routing_to_inner_and_rings() {
        let mut c = OnlineCoreset::new(params(), &CoresetConfig::explicit(2.0), 1).unwrap();
        let first = c.insert(TimedPoint::unit(vec![10, 10], 0, GroupMask(1))).unwrap();
        assert_eq!(first.ring, Ring::Inner);
        let dup = c.insert(TimedPoint::unit(vec![10, 10], 1, GroupMask(1))).unwrap();
        assert_eq!(dup.ring, Ring::Inner);
        // distance 5 from the only center, unless it opens a center itself
        let id = c.insert(TimedPoint::unit(vec![13, 14], 2, GroupMask(1))).unwrap();
        let center = &c.meyerson().center_points()[id.center as usize];
        if center.location == GridPoint(vec![10, 10]) {
            assert_eq!(id.ring, Ring::Annulus(3));
        } else {
            assert_eq!(id.ring, Ring::Inner);
        }
        assert!(c.insert(TimedPoint::unit(vec![1, 1], 2, GroupMask(1))).is_err());
    }

    #[test]
    fn derived_rate_is_large_and_target_rate_scales() {
        let p = params();
        let d = SampleRate::Derived {
            c0: 1.0,
            stream_len: 1000,
            exponent_const: 1.0,
        }
        .resolve(&p, 16);
        assert!(d > 1e4);
        let small = target_rate(50, &p);
        let big = target_rate(500, &p);
        assert!(big > small && small > 0.0);
    }
}
