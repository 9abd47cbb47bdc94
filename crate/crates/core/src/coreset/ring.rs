use serde::{Deserialize, Serialize};

use crate::point::{Ring, TimedPoint};
use crate::prf;

/// Identifies one sampler: the Meyerson center it belongs to and the ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RingId {
    pub center: u32,
    pub ring: Ring,
}

impl RingId {
    pub fn new(center: u32, ring: Ring) -> Self {
        RingId { center, ring }
    }

    fn code(self) -> u64 {
        let r = match self.ring {
            Ring::Inner => u32::MAX as u64,
            Ring::Annulus(j) => j as u64,
        };
        ((self.center as u64) << 32) | r
    }
}

/// A point kept by a sampler. `point.weight` is the original weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoresetSample {
    pub point: TimedPoint,
    pub prob: f64,
    pub coreset_weight: f64,
    pub ring: RingId,
}

impl CoresetSample {
    pub fn exact(point: TimedPoint, ring: RingId) -> Self {
        CoresetSample {
            coreset_weight: point.weight,
            point,
            prob: 1.0,
            ring,
        }
    }

    /// The point carrying its coreset weight.
    pub fn weighted_point(&self) -> TimedPoint {
        self.point.clone().with_weight(self.coreset_weight)
    }
}

/// Online sampler for one ring: the `i`-th offered point is kept with
/// probability `min(T·w_i / sum_i, 1)` and reweighted by the inverse.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingSampler {
    id: RingId,
    rate: f64,
    key: [u64; 2],
    running_sum: f64,
    offered: usize,
    prob_sum: f64,
    min_weight: f64,
    samples: Vec<CoresetSample>,
}

impl RingSampler {
    pub fn new(id: RingId, rate: f64, seed: u64, stream_key: u64) -> Self {
        RingSampler {
            id,
            rate,
            key: [seed, stream_key],
            running_sum: 0.0,
            offered: 0,
            prob_sum: 0.0,
            min_weight: f64::INFINITY,
            samples: Vec::new(),
        }
    }

    pub fn id(&self) -> RingId {
        self.id
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Offers `p`; returns the stored sample if it was kept.
    pub fn offer(&mut self, p: TimedPoint) -> Option<&CoresetSample> {
        self.running_sum += p.weight;
        self.offered += 1;
        self.min_weight = self.min_weight.min(p.weight);
        let prob = (self.rate * p.weight / self.running_sum).min(1.0);
        self.prob_sum += prob;
        let u = prf::unit(&[self.key[0], prf::SALT_RING, self.key[1], p.timestamp as u64, self.id.code()]);
        if u < prob {
            self.samples.push(CoresetSample {
                coreset_weight: p.weight / prob,
                point: p,
                prob,
                ring: self.id,
            });
            self.samples.last()
        } else {
            None
        }
    }

    pub fn samples(&self) -> &[CoresetSample] {
        &self.samples
    }

    /// Total weight ever offered, `N` of the ring.
    pub fn running_sum(&self) -> f64 {
        self.running_sum
    }

    pub fn offered(&self) -> usize {
        self.offered
    }

    /// `Σ prob_i` over all offers.
    pub fn prob_sum(&self) -> f64 {
        self.prob_sum
    }

    pub fn min_weight(&self) -> f64 {
        self.min_weight
    }

    /// `T·ln(max(N / w_min, e)) + 1`, the deterministic cap on `Σ prob_i`.
    pub fn prob_sum_bound(&self) -> f64 {
        if self.offered == 0 {
            return 0.0;
        }
        self.rate * (self.running_sum / self.min_weight).max(std::f64::consts::E).ln() + 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::GroupMask;

    fn pt(t: i64, w: f64) -> TimedPoint {
        TimedPoint::unit(vec![t], t, GroupMask(1)).with_weight(w)
    }

    #[test]
    fn first_point_always_kept() {
        let mut s = RingSampler::new(RingId::new(0, Ring::Annulus(2)), 1.5, 3, 0);
        let kept = s.offer(pt(0, 2.5)).cloned().unwrap();
        assert_eq!(kept.prob, 1.0);
        assert_eq!(kept.coreset_weight, 2.5);
    }

    #[test]
    fn unit_weights_follow_harmonic_rate() {
        let t = 3.0;
        let mut s = RingSampler::new(RingId::new(1, Ring::Annulus(0)), t, 17, 0);
        let mut expected_sum = 0.0;
        for i in 1..=500 {
            let expected = (t / i as f64).min(1.0);
            expected_sum += expected;
            if let Some(smp) = s.offer(pt(i, 1.0)) {
                assert!((smp.prob - expected).abs() < 1e-15);
                assert!((smp.coreset_weight * smp.prob - 1.0).abs() < 1e-12);
            }
        }
        assert!((s.prob_sum() - expected_sum).abs() < 1e-9);
        assert!(s.prob_sum() <= t * 500f64.ln() + 1.0);
        assert_eq!(s.running_sum(), 500.0);
    }

    #[test]
    fn weighted_offers_respect_bound() {
        let mut s = RingSampler::new(RingId::new(0, Ring::Annulus(4)), 2.0, 5, 1);
        for i in 0..300 {
            let w = 0.5 + ((i * 37) % 11) as f64;
            s.offer(pt(i, w));
        }
        assert!(s.prob_sum() <= s.prob_sum_bound());
        for smp in s.samples() {
            assert!(smp.prob > 0.0 && smp.prob <= 1.0);
            assert!((smp.coreset_weight * smp.prob - smp.point.weight).abs() <= 1e-12 * smp.point.weight);
        }
    }
}
