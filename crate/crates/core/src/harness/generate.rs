use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::assignment::FairnessSpec;
use crate::error::{Error, Result};
use crate::point::{GroupMask, TimedPoint};

/// Synthetic stream families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    /// Gaussian blobs whose group-1 share varies from blob to blob.
    Gaussian { n: usize, clusters: usize, dim: usize, delta: i64, seed: u64 },
    /// Gaussian blobs whose group-1 share moves from `start` to `end` over
    /// the stream.
    Drift { n: usize, clusters: usize, dim: usize, delta: i64, start: f64, end: f64, seed: u64 },
    /// The two-location lower-bound gadget.
    AugIndex { n: usize, i: usize, x: Vec<bool>, delta: i64 },
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Vec<TimedPoint>> {
        match *self {
            GeneratorSpec::Gaussian { n, clusters, dim, delta, seed } => {
                gaussian_mixture(n, clusters, dim, delta, seed, |c, _| blob_share(c, clusters))
            }
            GeneratorSpec::Drift {
                n,
                clusters,
                dim,
                delta,
                start,
                end,
                seed,
            } => gaussian_mixture(n, clusters, dim, delta, seed, |_, i| start + (end - start) * i as f64 / n.max(1) as f64),
            GeneratorSpec::AugIndex { n, i, ref x, delta } => gen_augindex_instance(n, i, x, delta),
        }
    }
}

fn blob_share(c: usize, clusters: usize) -> f64 {
    if clusters <= 1 {
        0.5
    } else {
        0.2 + 0.6 * c as f64 / (clusters - 1) as f64
    }
}

/// `n` points from `clusters` isotropic blobs (σ = Δ/25) with means drawn in
/// the middle of the grid. Point `i` from blob `c` is in group 1 with
/// probability `share(c, i)`, else group 0.
pub fn gaussian_mixture(
    n: usize,
    clusters: usize,
    dim: usize,
    delta: i64,
    seed: u64,
    share: impl Fn(usize, usize) -> f64,
) -> Result<Vec<TimedPoint>> {
    if clusters == 0 || dim == 0 || delta < 2 {
        return Err(Error::InvalidParameter("need clusters ≥ 1, dim ≥ 1, Δ ≥ 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = delta as f64;
    let means: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dim).map(|_| rng.random_range(0.15..0.85) * d).collect())
        .collect();
    let noise = Normal::new(0.0, d / 25.0).expect("positive deviation");
    Ok((0..n)
        .map(|i| {
            let c = rng.random_range(0..clusters);
            let coords = means[c]
                .iter()
                .map(|m| (m + noise.sample(&mut rng)).round().clamp(1.0, d) as i64)
                .collect();
            let g = usize::from(rng.random_bool(share(c, i).clamp(0.0, 1.0)));
            TimedPoint::unit(coords, i as i64 + 1, GroupMask::single(g))
        })
        .collect())
}

pub const AUG_C1: GroupMask = GroupMask(0b01);
pub const AUG_C2: GroupMask = GroupMask(0b10);

/// Every cluster needs at least half of its mass from the second group.
pub fn augindex_spec() -> FairnessSpec {
    FairnessSpec {
        alpha: vec![0.0, 0.5],
        beta: vec![1.0, 1.0],
    }
}

/// Stream of length `4n + i` on the line: the first party inserts `Δ·x_j`
/// for `j ≤ 2n`, the second re-inserts the copies `x_1 … x_{i−1}`, a point at
/// 0, then `n` second-group points at 0 and `n` at `Δ`. The last `4n`
/// arrivals hold `2n` points of each group. `i` is 1-based.
pub fn gen_augindex_instance(n: usize, i: usize, x: &[bool], delta: i64) -> Result<Vec<TimedPoint>> {
    if x.len() != 2 * n || x.iter().filter(|&&b| b).count() != n {
        return Err(Error::InvalidParameter(format!("x must have length {} with exactly {n} ones", 2 * n)));
    }
    if i < 1 || i > 2 * n {
        return Err(Error::InvalidParameter(format!("index {i} outside 1..={}", 2 * n)));
    }
    let at = |b: bool| if b { delta } else { 0 };
    let mut locs: Vec<(i64, GroupMask)> = x.iter().map(|&b| (at(b), AUG_C1)).collect();
    locs.extend(x[..i - 1].iter().map(|&b| (at(b), AUG_C1)));
    locs.push((0, AUG_C1));
    locs.extend(std::iter::repeat((0, AUG_C2)).take(n));
    locs.extend(std::iter::repeat((delta, AUG_C2)).take(n));
    Ok(locs
        .into_iter()
        .enumerate()
        .map(|(t, (c, g))| TimedPoint::unit(vec![c], t as i64 + 1, g))
        .collect())
}

/// Window size of the gadget, `4n`.
pub fn augindex_window(n: usize) -> usize {
    4 * n
}

/// Parses `0`/`1` strings.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::InvalidParameter(format!("bad bit {c:?}"))),
        })
        .collect()
}
