//! Merge-and-reduce over reversed timestamps.
//!
//! The `i`-th arrival is stored with internal timestamp `−i`, so the newest
//! points come first in the order an [`crate::coreset::OnlineCoreset`] processes a block and
//! its prefix property turns into a guarantee about stream suffixes. Block
//! `B_j` holds a coreset of `2^j` consecutive arrivals; a new point is merged
//! with `B_0 … B_{j−1}` into the first empty level `j`, or into the top level
//! when every level is full. Extraction filters the union of the blocks to
//! internal timestamps `[−t, −t+m)`.
//!
//! A partitioned sketch keeps one hierarchy per exact group mask; all of them
//! share the global arrival counter so their windows line up.

mod checkpoint;

pub use checkpoint::{read_checkpoint, write_checkpoint};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coreset::{build_coreset_keyed, CoresetConfig, CoresetSample, SampleRate};
use crate::error::{Error, Result};
use crate::point::{ClusteringParams, GroupMask, TimedPoint, WeightedPointSet};
use crate::prf;

/// `⌈lg m⌉`, the top block level for window `m`.
pub fn top_level(window: usize) -> usize {
    let mut l = 0;
    while (1usize << l) < window {
        l += 1;
    }
    l
}

/// Accuracy handed to each reduce step, `ε/(2·⌈lg m⌉)`.
pub fn level_epsilon(epsilon: f64, window: usize) -> f64 {
    epsilon / (2.0 * top_level(window).max(1) as f64)
}

/// Failure probability handed to each reduce step, `δ/(4m²)`.
pub fn level_fail_prob(fail_prob: f64, window: usize) -> f64 {
    let m = window.max(1) as f64;
    fail_prob / (4.0 * m * m)
}

/// `(1 + ε/(2⌈lg m⌉))^{⌈lg m⌉}`, the distortion after the deepest chain of
/// reductions.
pub fn compounded_distortion(epsilon: f64, window: usize) -> f64 {
    (1.0 + level_epsilon(epsilon, window)).powi(top_level(window) as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub params: ClusteringParams,
    pub window: usize,
    pub coreset: CoresetConfig,
    pub seed: u64,
    /// One hierarchy per group mask instead of a single one.
    pub partition_by_mask: bool,
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.window < 1 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        Ok(())
    }

    fn level_params(&self) -> ClusteringParams {
        ClusteringParams {
            epsilon: level_epsilon(self.params.epsilon, self.window),
            fail_prob: level_fail_prob(self.params.fail_prob, self.window),
            ..self.params.clone()
        }
    }
}

/// Dyadic block hierarchy for one group mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockHierarchy {
    key: u64,
    blocks: Vec<Option<Vec<CoresetSample>>>,
    inserted: u64,
    reduces: u64,
}

impl BlockHierarchy {
    fn new(key: u64, levels: usize) -> Self {
        BlockHierarchy {
            key,
            blocks: vec![None; levels + 1],
            inserted: 0,
            reduces: 0,
        }
    }

    /// Points this hierarchy has received.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn blocks(&self) -> &[Option<Vec<CoresetSample>>] {
        &self.blocks
    }

    /// Levels currently holding a block.
    pub fn occupied(&self) -> Vec<usize> {
        (0..self.blocks.len()).filter(|&j| self.blocks[j].is_some()).collect()
    }

    pub fn retained(&self) -> usize {
        self.blocks.iter().flatten().map(Vec::len).sum()
    }

    fn insert(&mut self, p: TimedPoint, now: i64, cfg: &WindowConfig, params: &ClusteringParams) -> Result<usize> {
        let top = self.blocks.len() - 1;
        let j = (0..=top).find(|&j| self.blocks[j].is_none()).unwrap_or(top);
        let oldest = -now + cfg.window as i64;
        let mut merged: Vec<TimedPoint> = vec![p];
        for b in self.blocks[..=j].iter_mut() {
            if let Some(samples) = b.take() {
                merged.extend(
                    samples
                        .iter()
                        .filter(|s| s.point.timestamp < oldest)
                        .map(CoresetSample::weighted_point),
                );
            }
        }
        let key = prf::hash(&[self.key, self.reduces]);
        let oc = build_coreset_keyed(&merged, params.clone(), &cfg.coreset, cfg.seed, key)?;
        self.blocks[j] = Some(oc.samples());
        self.inserted += 1;
        self.reduces += 1;
        Ok(j)
    }

    fn extract_into(&self, out: &mut WeightedPointSet, lo: i64, hi: i64) -> Result<()> {
        for s in self.blocks.iter().flatten().flatten() {
            let ts = s.point.timestamp;
            if ts >= lo && ts < hi {
                out.insert(s.weighted_point())?;
            }
        }
        Ok(())
    }
}

/// Space used by a sketch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub hierarchies: Vec<HierarchyReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub mask: u64,
    pub inserted: u64,
    /// Retained points per level; `None` for empty levels.
    pub levels: Vec<Option<usize>>,
}

impl MemoryReport {
    pub fn total(&self) -> usize {
        self.hierarchies
            .iter()
            .flat_map(|h| h.levels.iter().flatten())
            .sum()
    }
}

/// Sliding-window coreset sketch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSketch {
    config: WindowConfig,
    level_params: ClusteringParams,
    t: u64,
    hierarchies: BTreeMap<u64, BlockHierarchy>,
}

impl WindowSketch {
    pub fn new(config: WindowConfig) -> Result<Self> {
        config.validate()?;
        Ok(WindowSketch {
            level_params: config.level_params(),
            config,
            t: 0,
            hierarchies: BTreeMap::new(),
        })
    }

    /// A single hierarchy that ignores groups.
    pub fn single(params: ClusteringParams, window: usize, coreset: CoresetConfig, seed: u64) -> Result<Self> {
        Self::new(WindowConfig {
            params,
            window,
            coreset,
            seed,
            partition_by_mask: false,
        })
    }

    /// One hierarchy per group mask.
    pub fn partitioned(params: ClusteringParams, window: usize, coreset: CoresetConfig, seed: u64) -> Result<Self> {
        Self::new(WindowConfig {
            params,
            window,
            coreset,
            seed,
            partition_by_mask: true,
        })
    }

    pub fn config(&self) -> &WindowConfig {
        &self.config
    }

    /// Arrivals so far.
    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn window(&self) -> usize {
        self.config.window
    }

    pub fn top_level(&self) -> usize {
        top_level(self.config.window)
    }

    /// Feeds the next arrival. Its own timestamp is replaced by `−t`.
    /// Returns the level the merge landed in.
    pub fn insert(&mut self, p: TimedPoint) -> Result<usize> {
        if p.location.dim() != self.config.params.dim {
            return Err(Error::DimensionMismatch(self.config.params.dim, p.location.dim()));
        }
        self.t += 1;
        let now = self.t as i64;
        let p = TimedPoint { timestamp: -now, ..p };
        let key = if self.config.partition_by_mask { p.groups.0 } else { 0 };
        let levels = self.top_level();
        let h = self
            .hierarchies
            .entry(key)
            .or_insert_with(|| BlockHierarchy::new(key, levels));
        h.insert(p, now, &self.config, &self.level_params)
    }

    /// Internal-timestamp range `[−t, −t+m)` of the active window.
    pub fn active_range(&self) -> (i64, i64) {
        let t = self.t as i64;
        (-t, -t + self.config.window as i64)
    }

    /// Coreset of the active window with internal (negative) timestamps.
    pub fn extract(&self) -> Result<WeightedPointSet> {
        let (lo, hi) = self.active_range();
        let mut out = WeightedPointSet::new();
        for h in self.hierarchies.values() {
            h.extract_into(&mut out, lo, hi)?;
        }
        Ok(out)
    }

    /// Coreset of the active window with arrival indices `1…t` as timestamps.
    pub fn extract_window(&self) -> Result<WeightedPointSet> {
        Ok(self
            .extract()?
            .into_points()
            .into_iter()
            .map(|p| TimedPoint { timestamp: -p.timestamp, ..p })
            .collect())
    }

    /// [`Self::extract_window`] followed by one more reduce per hierarchy, so
    /// that about `size` points remain in total. Each hierarchy gets a share
    /// of `size` proportional to its extracted mass.
    pub fn extract_reduced(&self, size: usize) -> Result<WeightedPointSet> {
        let (lo, hi) = self.active_range();
        let parts = self
            .hierarchies
            .values()
            .map(|h| {
                let mut part = WeightedPointSet::new();
                h.extract_into(&mut part, lo, hi)?;
                Ok((h.key, part))
            })
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = parts.iter().map(|(_, p)| p.total_weight()).sum();
        let mut out = WeightedPointSet::new();
        for (key, part) in parts {
            if part.is_empty() {
                continue;
            }
            let share = ((size as f64 * part.total_weight() / total).round() as usize).max(1);
            let reduced = if part.len() <= share {
                part
            } else {
                let cfg = CoresetConfig {
                    rate: SampleRate::Target(share),
                    scaffold: self.config.coreset.scaffold.clone(),
                };
                let key = prf::hash(&[key, self.t, u64::MAX]);
                let pts = part.into_points();
                build_coreset_keyed(&pts, self.config.params.clone(), &cfg, self.config.seed, key)?.extract()
            };
            for p in reduced.into_points() {
                out.insert(TimedPoint { timestamp: -p.timestamp, ..p })?;
            }
        }
        Ok(out)
    }

    pub fn hierarchy(&self, mask: GroupMask) -> Option<&BlockHierarchy> {
        let key = if self.config.partition_by_mask { mask.0 } else { 0 };
        self.hierarchies.get(&key)
    }

    pub fn hierarchies(&self) -> impl Iterator<Item = (GroupMask, &BlockHierarchy)> {
        self.hierarchies.iter().map(|(&k, h)| (GroupMask(k), h))
    }

    pub fn retained(&self) -> usize {
        self.hierarchies.values().map(BlockHierarchy::retained).sum()
    }

    pub fn memory(&self) -> MemoryReport {
        MemoryReport {
            hierarchies: self
                .hierarchies
                .iter()
                .map(|(&mask, h)| HierarchyReport {
                    mask,
                    inserted: h.inserted,
                    levels: h.blocks.iter().map(|b| b.as_ref().map(Vec::len)).collect(),
                })
                .collect(),
        }
    }

    pub(crate) fn from_parts(config: WindowConfig, t: u64, hierarchies: Vec<BlockHierarchy>) -> Result<Self> {
        let mut sk = WindowSketch::new(config)?;
        let levels = sk.top_level() + 1;
        for h in &hierarchies {
            if h.blocks.len() != levels {
                return Err(Error::Format(format!("hierarchy has {} levels, expected {levels}", h.blocks.len())));
            }
        }
        sk.t = t;
        sk.hierarchies = hierarchies.into_iter().map(|h| (h.key, h)).collect();
        Ok(sk)
    }

    pub(crate) fn raw_hierarchies(&self) -> impl Iterator<Item = &BlockHierarchy> {
        self.hierarchies.values()
    }
}

impl BlockHierarchy {
    pub(crate) fn from_raw(key: u64, inserted: u64, reduces: u64, blocks: Vec<Option<Vec<CoresetSample>>>) -> Self {
        BlockHierarchy {
            key,
            blocks,
            inserted,
            reduces,
        }
    }

    pub(crate) fn raw(&self) -> (u64, u64, u64) {
        (self.key, self.inserted, self.reduces)
    }
}
