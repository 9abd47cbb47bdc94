use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{distinct_locations, FairSolution};
use crate::assignment::FairnessSpec;
use crate::error::{Error, Result};
use crate::point::{pow_dist, GridPoint, WeightedPointSet};

/// Relative improvement a swap must achieve to be accepted.
pub const MIN_IMPROVEMENT: f64 = 1e-4;

/// Swap local search for fair clustering.
///
/// Seeding is `D^z`-weighted. An unconstrained swap search first moves the
/// centers to a good nearest-assignment solution; the fair phase then
/// evaluates single swaps with the fair LP. When `k·|candidates|` exceeds
/// `swap_budget` only the `screen` swaps with the lowest unconstrained cost
/// are evaluated per round.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSearch {
    pub k: usize,
    pub z: u32,
    pub max_iters: usize,
    pub seed: u64,
    pub swap_budget: usize,
    pub screen: usize,
}

impl LocalSearch {
    pub fn new(k: usize, z: u32, max_iters: usize, seed: u64) -> Self {
        LocalSearch {
            k,
            z,
            max_iters,
            seed,
            swap_budget: 256,
            screen: 12,
        }
    }
}

/// Fair costs of the starting solution and of every accepted swap.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LocalSearchTrace {
    pub costs: Vec<f64>,
}

/// Distances from weighted points to candidate centers.
struct Table {
    weights: Vec<f64>,
    /// `dist[p][c]`
    dist: Vec<Vec<f64>>,
}

impl Table {
    fn new(points: &[(GridPoint, f64)], cands: &[GridPoint], z: u32) -> Self {
        Table {
            weights: points.iter().map(|p| p.1).collect(),
            dist: points
                .iter()
                .map(|(p, _)| cands.iter().map(|c| pow_dist(p.dist_sq(c) as f64, z)).collect())
                .collect(),
        }
    }

    fn cost(&self, centers: &[usize]) -> f64 {
        self.dist
            .iter()
            .zip(&self.weights)
            .map(|(row, w)| w * centers.iter().map(|&c| row[c]).fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// Unconstrained cost of every swap `(slot, candidate)`.
    fn swap_costs(&self, centers: &[usize], ncand: usize) -> Vec<(f64, usize, usize)> {
        let k = centers.len();
        let mut near = Vec::with_capacity(self.dist.len());
        for row in &self.dist {
            let (mut b1, mut b2, mut i1) = (f64::INFINITY, f64::INFINITY, 0);
            for (slot, &c) in centers.iter().enumerate() {
                let d = row[c];
                if d < b1 {
                    b2 = b1;
                    b1 = d;
                    i1 = slot;
                } else if d < b2 {
                    b2 = d;
                }
            }
            near.push((b1, b2, i1));
        }
        let mut out = Vec::with_capacity(k * ncand);
        for slot in 0..k {
            for c in 0..ncand {
                if centers.contains(&c) {
                    continue;
                }
                let mut total = 0.0;
                for ((row, w), &(b1, b2, i1)) in self.dist.iter().zip(&self.weights).zip(&near) {
                    let keep = if i1 == slot { b2 } else { b1 };
                    total += w * keep.min(row[c]);
                }
                out.push((total, slot, c));
            }
        }
        out
    }
}

fn seed_centers(table: &Table, ncand: usize, k: usize, cand_of_point: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let total: f64 = table.weights.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    let mut first = cand_of_point[0];
    for (i, w) in table.weights.iter().enumerate() {
        if pick < *w {
            first = cand_of_point[i];
            break;
        }
        pick -= w;
    }
    let mut centers = vec![first];
    while centers.len() < k.min(ncand) {
        let d: Vec<f64> = table
            .dist
            .iter()
            .zip(&table.weights)
            .map(|(row, w)| w * centers.iter().map(|&c| row[c]).fold(f64::INFINITY, f64::min))
            .collect();
        let sum: f64 = d.iter().sum();
        let next = if sum > 0.0 {
            let mut r = rng.random::<f64>() * sum;
            let mut chosen = None;
            for (i, v) in d.iter().enumerate() {
                if r < *v {
                    chosen = Some(cand_of_point[i]);
                    break;
                }
                r -= v;
            }
            chosen.filter(|c| !centers.contains(c))
        } else {
            None
        };
        let next = next.unwrap_or_else(|| (0..ncand).find(|c| !centers.contains(c)).unwrap());
        centers.push(next);
    }
    centers
}

fn unconstrained_descent(table: &Table, centers: &mut Vec<usize>, ncand: usize, max_iters: usize) {
    let mut cost = table.cost(centers);
    for _ in 0..max_iters {
        let best = table
            .swap_costs(centers, ncand)
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match best {
            Some((c, slot, cand)) if c < cost * (1.0 - MIN_IMPROVEMENT) => {
                centers[slot] = cand;
                cost = c;
            }
            _ => break,
        }
    }
}

fn prepare(points: &WeightedPointSet) -> (Vec<(GridPoint, f64)>, Vec<GridPoint>, Vec<usize>) {
    let cands = distinct_locations(points.iter().map(|p| &p.location));
    let pts: Vec<(GridPoint, f64)> = points.iter().map(|p| (p.location.clone(), p.weight)).collect();
    let cand_of_point = pts
        .iter()
        .map(|(p, _)| cands.binary_search(p).expect("candidate list holds every location"))
        .collect();
    (pts, cands, cand_of_point)
}

/// Unconstrained weighted `k`-median/means swap search with candidate centers
/// at the point locations.
pub fn kmedian_local_search(points: &[(GridPoint, f64)], k: usize, z: u32, max_iters: usize, seed: u64) -> Result<Vec<GridPoint>> {
    if points.is_empty() {
        return Err(Error::EmptySketch);
    }
    let cands = distinct_locations(points.iter().map(|p| &p.0));
    let cand_of_point: Vec<usize> = points.iter().map(|(p, _)| cands.binary_search(p).unwrap()).collect();
    let table = Table::new(points, &cands, z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = seed_centers(&table, cands.len(), k, &cand_of_point, &mut rng);
    unconstrained_descent(&table, &mut centers, cands.len(), max_iters);
    centers.sort_unstable();
    Ok(centers.into_iter().map(|c| cands[c].clone()).collect())
}

impl LocalSearch {
    pub fn run(&self, points: &WeightedPointSet, spec: &FairnessSpec) -> Result<(FairSolution, LocalSearchTrace)> {
        if points.is_empty() {
            return Err(Error::EmptySketch);
        }
        if self.k == 0 {
            return Err(Error::EmptyCenters);
        }
        let (pts, cands, cand_of_point) = prepare(points);
        let table = Table::new(&pts, &cands, self.z);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut centers = seed_centers(&table, cands.len(), self.k, &cand_of_point, &mut rng);
        unconstrained_descent(&table, &mut centers, cands.len(), self.max_iters.max(1) * 4);

        let eval = |cs: &[usize]| {
            let mut sorted = cs.to_vec();
            sorted.sort_unstable();
            FairSolution::evaluate(points, sorted.iter().map(|&c| cands[c].clone()).collect(), spec, self.z)
        };
        let mut best = eval(&centers)?;
        let mut trace = LocalSearchTrace { costs: vec![best.cost] };
        if !best.feasible {
            return Ok((best, trace));
        }
        let exhaustive = centers.len() * cands.len() <= self.swap_budget;
        for _ in 0..self.max_iters {
            let mut swaps = table.swap_costs(&centers, cands.len());
            if !exhaustive {
                swaps.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
                swaps.truncate(self.screen);
            }
            let mut round: Option<(FairSolution, usize, usize)> = None;
            for &(_, slot, cand) in &swaps {
                let mut trial = centers.clone();
                trial[slot] = cand;
                let sol = eval(&trial)?;
                if round.as_ref().map_or(true, |r| sol.cost < r.0.cost) {
                    round = Some((sol, slot, cand));
                }
            }
            match round {
                Some((sol, slot, cand)) if sol.cost < best.cost * (1.0 - MIN_IMPROVEMENT) => {
                    centers[slot] = cand;
                    trace.costs.push(sol.cost);
                    best = sol;
                }
                _ => break,
            }
        }
        Ok((best, trace))
    }
}

/// [`LocalSearch`] with default screening.
pub fn local_search_fair(points: &WeightedPointSet, spec: &FairnessSpec, k: usize, z: u32, max_iters: usize, seed: u64) -> Result<FairSolution> {
    Ok(LocalSearch::new(k, z, max_iters, seed).run(points, spec)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{GroupMask, TimedPoint};
    use crate::solver::brute_force_fair;

    fn instance(n: usize, seed: u64) -> WeightedPointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let g = rng.random_range(0..2usize);
                let base = if rng.random_bool(0.5) { 10 } else { 50 };
                TimedPoint::unit(
                    vec![base + rng.random_range(0..10), base + rng.random_range(0..10)],
                    i as i64,
                    GroupMask::single(g),
                )
            })
            .collect()
    }

    #[test]
    fn k1_matches_brute_force() {
        let p = instance(20, 1);
        let spec = FairnessSpec::new(vec![0.2, 0.2], vec![0.8, 0.8]).unwrap();
        let cands: Vec<GridPoint> = p.iter().map(|q| q.location.clone()).collect();
        let bf = brute_force_fair(&p, &spec, 1, 1, &cands).unwrap();
        let ls = local_search_fair(&p, &spec, 1, 1, 50, 3).unwrap();
        assert!((ls.cost - bf.cost).abs() <= 1e-9 * bf.cost);
    }

    #[test]
    fn trace_is_nonincreasing_and_deterministic() {
        let p = instance(40, 2);
        let spec = FairnessSpec::new(vec![0.4, 0.4], vec![0.6, 0.6]).unwrap();
        let run = || LocalSearch::new(3, 1, 20, 11).run(&p, &spec).unwrap();
        let (sol, trace) = run();
        assert!(trace.costs.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*trace.costs.last().unwrap(), sol.cost);
        assert!(sol.verify(&p, 1).unwrap());
        assert_eq!(run().0, sol);
    }

    #[test]
    fn kmedian_finds_both_clusters() {
        let pts: Vec<(GridPoint, f64)> = (0..20)
            .map(|i| (GridPoint(vec![if i % 2 == 0 { 1 } else { 100 }, i % 3]), 1.0))
            .collect();
        let cs = kmedian_local_search(&pts, 2, 1, 10, 0).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().any(|c| c.0[0] == 1) && cs.iter().any(|c| c.0[0] == 100));
    }
}
