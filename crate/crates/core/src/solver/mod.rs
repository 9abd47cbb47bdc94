//! Fair center selection on (coreset) point sets.
//!
//! All solvers pick centers among the distinct locations of a candidate set
//! and evaluate fractional fair assignments with [`fair_cost`].

mod fairlet;
mod local;

pub use fairlet::{fairlet_decompose, Fairlet};
pub use local::{kmedian_local_search, local_search_fair, LocalSearch, LocalSearchTrace};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::assignment::{fair_cost, plan_is_fair, AssignmentPlan, FairOutcome, FairnessSpec, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::point::{Center, GridPoint, WeightedPointSet};

/// Upper limit on the subsets [`brute_force_fair`] enumerates.
pub const MAX_SUBSETS: u64 = 100_000;

mod nonfinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairSolution {
    pub centers: Vec<GridPoint>,
    pub plan: AssignmentPlan,
    /// `+∞` (serialized as `null`) when infeasible.
    #[serde(with = "nonfinite_as_null")]
    pub cost: f64,
    pub feasible: bool,
    /// The fractions the plan was solved against.
    pub relaxation: FairnessSpec,
}

impl FairSolution {
    pub fn infeasible(spec: &FairnessSpec) -> Self {
        FairSolution {
            centers: Vec::new(),
            plan: AssignmentPlan::default(),
            cost: f64::INFINITY,
            feasible: false,
            relaxation: spec.clone(),
        }
    }

    /// Evaluates `centers` on `points` under `spec`.
    pub fn evaluate(points: &WeightedPointSet, centers: Vec<GridPoint>, spec: &FairnessSpec, z: u32) -> Result<Self> {
        let cs = as_centers(&centers);
        Ok(match fair_cost(points, &cs, spec, z)? {
            FairOutcome::Feasible { cost, plan } => FairSolution {
                centers,
                plan,
                cost,
                feasible: true,
                relaxation: spec.clone(),
            },
            FairOutcome::Infeasible => FairSolution::infeasible(spec),
        })
    }

    pub fn center_coords(&self) -> Vec<Center> {
        as_centers(&self.centers)
    }

    /// Re-derives the cost from the plan and checks the recorded fractions.
    pub fn verify(&self, points: &WeightedPointSet, z: u32) -> Result<bool> {
        if !self.feasible {
            return Ok(true);
        }
        let cost = self.plan.cost(points, &self.center_coords(), z)?;
        let cost_ok = (cost - self.cost).abs() <= 1e-6 * self.cost.abs().max(1e-12);
        let mass_ok = (self.plan.total_mass() - points.total_weight()).abs() <= 1e-6 * points.total_weight().max(1.0);
        Ok(cost_ok && mass_ok && plan_is_fair(&self.plan, points, self.centers.len(), &self.relaxation, FEASIBILITY_TOL))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn as_centers(cs: &[GridPoint]) -> Vec<Center> {
    cs.iter().map(Center::from).collect()
}

/// Distinct locations in a deterministic order.
pub fn distinct_locations<'a>(points: impl IntoIterator<Item = &'a GridPoint>) -> Vec<GridPoint> {
    points.into_iter().cloned().collect::<BTreeSet<_>>().into_iter().collect()
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exact discrete optimum: every `k`-subset of the distinct candidate
/// locations is solved with [`fair_cost`]. Ties keep the first subset in
/// lexicographic order.
pub fn brute_force_fair(points: &WeightedPointSet, spec: &FairnessSpec, k: usize, z: u32, candidates: &[GridPoint]) -> Result<FairSolution> {
    let cand = distinct_locations(candidates);
    if cand.is_empty() || k == 0 {
        return Err(Error::EmptyCenters);
    }
    let r = k.min(cand.len());
    let count = binomial(cand.len() as u64, r as u64);
    if count > MAX_SUBSETS {
        return Err(Error::InvalidParameter(format!("{count} center subsets exceed the enumeration limit")));
    }
    let mut best = FairSolution::infeasible(spec);
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let centers: Vec<GridPoint> = idx.iter().map(|&i| cand[i].clone()).collect();
        let sol = FairSolution::evaluate(points, centers, spec, z)?;
        if !sol.feasible {
            // feasibility does not depend on the centers
            return Ok(sol);
        }
        if sol.cost < best.cost {
            best = sol;
        }
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if idx[i] < cand.len() - r + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{GroupMask, TimedPoint};

    fn gadget(n: usize, delta: i64) -> WeightedPointSet {
        let mut pts = Vec::new();
        let mut ts = 0;
        for at in [0, delta] {
            for mask in [GroupMask(1), GroupMask(2)] {
                for _ in 0..n {
                    pts.push(TimedPoint::unit(vec![at], ts, mask));
                    ts += 1;
                }
            }
        }
        pts.into_iter().collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(60, 3), 34_220);
        assert_eq!(binomial(4, 4), 1);
    }

    #[test]
    fn balanced_gadget_optimum() {
        let p = gadget(3, 64);
        let spec = FairnessSpec::new(vec![0.0, 0.5], vec![1.0, 1.0]).unwrap();
        let cands = vec![GridPoint(vec![0]), GridPoint(vec![64]), GridPoint(vec![32])];
        let sol = brute_force_fair(&p, &spec, 2, 1, &cands).unwrap();
        assert!(sol.feasible);
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.centers, vec![GridPoint(vec![0]), GridPoint(vec![64])]);
        assert!(sol.verify(&p, 1).unwrap());
    }

    #[test]
    fn every_point_its_own_center() {
        let p: WeightedPointSet = (0..5).map(|i| TimedPoint::unit(vec![i * 3, i], i, GroupMask(1))).collect();
        let cands: Vec<GridPoint> = p.iter().map(|q| q.location.clone()).collect();
        let sol = brute_force_fair(&p, &FairnessSpec::vacuous(1), 5, 2, &cands).unwrap();
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn infeasible_spec_is_reported() {
        let p: WeightedPointSet = (0..4).map(|i| TimedPoint::unit(vec![i], i, GroupMask(1))).collect();
        let spec = FairnessSpec::new(vec![0.0, 0.2], vec![1.0, 1.0]).unwrap();
        let cands: Vec<GridPoint> = p.iter().map(|q| q.location.clone()).collect();
        let sol = brute_force_fair(&p, &spec, 2, 1, &cands).unwrap();
        assert!(!sol.feasible);
        let json = sol.to_json().unwrap();
        assert!(json.contains("\"cost\": null"));
        assert_eq!(FairSolution::from_json(&json).unwrap(), sol);
    }

    #[test]
    fn enumeration_limit() {
        let p: WeightedPointSet = (0..60).map(|i| TimedPoint::unit(vec![i], i, GroupMask(1))).collect();
        let cands: Vec<GridPoint> = p.iter().map(|q| q.location.clone()).collect();
        assert!(brute_force_fair(&p, &FairnessSpec::vacuous(1), 5, 1, &cands).is_err());
    }
}
