use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{kmedian_local_search, FairSolution};
use crate::assignment::flow::MinCostFlow;
use crate::assignment::{plan_is_fair, AssignmentPlan, ClusterComposition, FairnessSpec, PlanEntry, FEASIBILITY_TOL};
use crate::error::{Error, Result};
use crate::point::{pow_dist, GridPoint, GroupMask, WeightedPointSet};

const LOWER_BOUND_BONUS: i64 = 1 << 40;
const DIST_SCALE: f64 = (1u64 << 20) as f64;

/// A balanced micro-cluster: one anchor point plus fractional mass of the
/// other group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fairlet {
    pub rep: GridPoint,
    /// `(timestamp, mass)` of every member, anchor first.
    pub members: Vec<(i64, f64)>,
}

impl Fairlet {
    pub fn mass(&self) -> f64 {
        self.members.iter().map(|m| m.1).sum()
    }
}

fn group_of(mask: GroupMask) -> Result<usize> {
    match mask.0 {
        0b01 => Ok(0),
        0b10 => Ok(1),
        m => Err(Error::InvalidParameter(format!("fairlets need exactly one of two groups per point, got mask {m:#b}"))),
    }
}

/// Splits `points` into fairlets whose group fractions lie in `spec`, using a
/// min-cost flow of the larger group onto anchors from the smaller one.
/// `None` when no fairlet pattern fits.
pub fn build_fairlets(points: &WeightedPointSet, spec: &FairnessSpec, z: u32) -> Result<Option<Vec<Fairlet>>> {
    if spec.groups() != 2 {
        return Err(Error::InvalidParameter("fairlets need exactly two groups".into()));
    }
    let mut by_group: [Vec<(i64, &GridPoint, f64)>; 2] = [Vec::new(), Vec::new()];
    for p in points.iter() {
        by_group[group_of(p.groups)?].push((p.timestamp, &p.location, p.weight));
    }
    if !spec.admits(&ClusterComposition::of_set(points, 2), FEASIBILITY_TOL) {
        return Ok(None);
    }
    // group-1 fraction interval per fairlet
    let lo = spec.alpha[1].max(1.0 - spec.beta[0]);
    let hi = spec.beta[1].min(1.0 - spec.alpha[0]);
    if lo > hi + 1e-12 {
        return Ok(None);
    }
    let singletons = || {
        points
            .iter()
            .map(|p| Fairlet {
                rep: p.location.clone(),
                members: vec![(p.timestamp, p.weight)],
            })
            .collect()
    };
    if lo <= 0.0 && hi >= 1.0 || by_group[0].is_empty() || by_group[1].is_empty() {
        return Ok(Some(singletons()));
    }
    let mass = |g: usize| by_group[g].iter().map(|x| x.2).sum::<f64>();
    let anchor_group = if mass(1) <= mass(0) { 1 } else { 0 };
    // fraction interval of the anchor group
    let (alo, ahi) = if anchor_group == 1 { (lo, hi) } else { (1.0 - hi, 1.0 - lo) };
    if ahi <= 0.0 {
        return Ok(None);
    }
    let anchors = &by_group[anchor_group];
    let others = &by_group[1 - anchor_group];
    let total_other = mass(1 - anchor_group);
    let r_lo = (1.0 - ahi) / ahi;
    let r_hi = if alo > 0.0 { (1.0 - alo) / alo } else { f64::INFINITY };
    let lower: Vec<f64> = anchors.iter().map(|a| a.2 * r_lo).collect();
    let upper: Vec<f64> = anchors.iter().map(|a| (a.2 * r_hi).min(total_other)).collect();
    let tol = 1e-9 * total_other.max(1.0);
    if lower.iter().sum::<f64>() > total_other + tol || upper.iter().sum::<f64>() < total_other - tol {
        return Ok(None);
    }

    let (na, no) = (anchors.len(), others.len());
    let dists: Vec<Vec<f64>> = others
        .iter()
        .map(|o| anchors.iter().map(|a| pow_dist(o.1.dist_sq(a.1) as f64, z)).collect())
        .collect();
    let max_d = dists.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
    let scale = if max_d > 0.0 { DIST_SCALE / max_d } else { 1.0 };
    let source = 0;
    let sink = 1 + no + na;
    let mut g = MinCostFlow::new(sink + 1);
    g.set_tolerance(1e-13 * total_other.max(1.0));
    let mut middle = Vec::with_capacity(no * na);
    for (i, o) in others.iter().enumerate() {
        g.add_edge(source, 1 + i, o.2, 0);
        for j in 0..na {
            let c = (dists[i][j] * scale).round() as i64;
            middle.push((i, j, g.add_edge(1 + i, 1 + no + j, total_other * 2.0, c)));
        }
    }
    let mut lower_edges = Vec::with_capacity(na);
    for j in 0..na {
        lower_edges.push(g.add_edge(1 + no + j, sink, lower[j], -LOWER_BOUND_BONUS));
        g.add_edge(1 + no + j, sink, (upper[j] - lower[j]).max(0.0), 0);
    }
    let (pushed, _) = g.run(source, sink, total_other);
    if pushed < total_other - tol || lower_edges.iter().zip(&lower).any(|(&e, &l)| g.flow(e) < l - tol) {
        return Ok(None);
    }
    let mut fairlets: Vec<Fairlet> = anchors
        .iter()
        .map(|a| Fairlet {
            rep: a.1.clone(),
            members: vec![(a.0, a.2)],
        })
        .collect();
    for (i, j, e) in middle {
        let f = g.flow(e);
        if f > 0.0 {
            fairlets[j].members.push((others[i].0, f));
        }
    }
    Ok(Some(fairlets))
}

/// Fairlet decomposition followed by unconstrained `k`-median on the fairlet
/// representatives. Each fairlet moves whole to the center cheapest for its
/// members, so every cluster inherits the fairlet balance.
pub fn fairlet_decompose(points: &WeightedPointSet, spec: &FairnessSpec, k: usize, z: u32) -> Result<FairSolution> {
    if points.is_empty() {
        return Err(Error::EmptySketch);
    }
    let fairlets = match build_fairlets(points, spec, z)? {
        Some(f) => f,
        None => return Ok(FairSolution::infeasible(spec)),
    };
    let reps: Vec<(GridPoint, f64)> = fairlets.iter().map(|f| (f.rep.clone(), f.mass())).collect();
    let centers = kmedian_local_search(&reps, k, z, 50, 0)?;
    let mut merged: BTreeMap<(i64, usize), f64> = BTreeMap::new();
    for f in &fairlets {
        let cost_to = |c: &GridPoint| -> f64 {
            f.members
                .iter()
                .map(|&(ts, m)| m * pow_dist(points.get(ts).expect("member of the input").location.dist_sq(c) as f64, z))
                .sum()
        };
        let best = (0..centers.len())
            .map(|c| (c, cost_to(&centers[c])))
            .fold((0, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b })
            .0;
        for &(ts, m) in &f.members {
            *merged.entry((ts, best)).or_insert(0.0) += m;
        }
    }
    let plan = AssignmentPlan::from_entries(
        merged
            .into_iter()
            .map(|((timestamp, center), mass)| PlanEntry { timestamp, center, mass })
            .collect(),
    );
    let sol = FairSolution {
        cost: plan.cost(points, &super::as_centers(&centers), z)?,
        feasible: true,
        relaxation: spec.clone(),
        centers,
        plan,
    };
    debug_assert!(plan_is_fair(&sol.plan, points, sol.centers.len(), spec, FEASIBILITY_TOL));
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::TimedPoint;

    const RED: GroupMask = GroupMask(0b01);
    const BLUE: GroupMask = GroupMask(0b10);

    fn half() -> FairnessSpec {
        FairnessSpec::new(vec![0.5, 0.5], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn pairs_under_exact_balance() {
        let p: WeightedPointSet = vec![
            TimedPoint::unit(vec![0, 0], 0, RED),
            TimedPoint::unit(vec![10, 0], 1, RED),
            TimedPoint::unit(vec![1, 0], 2, BLUE),
            TimedPoint::unit(vec![12, 0], 3, BLUE),
        ]
        .into_iter()
        .collect();
        let f = build_fairlets(&p, &half(), 1).unwrap().unwrap();
        assert_eq!(f.len(), 2);
        let sol = fairlet_decompose(&p, &half(), 2, 1).unwrap();
        assert!(sol.feasible);
        assert!((sol.cost - 3.0).abs() < 1e-9, "{}", sol.cost);
        assert!(sol.verify(&p, 1).unwrap());
    }

    #[test]
    fn single_group_is_infeasible() {
        let p: WeightedPointSet = (0..4).map(|i| TimedPoint::unit(vec![i], i, RED)).collect();
        let spec = FairnessSpec::new(vec![0.0, 0.3], vec![1.0, 1.0]).unwrap();
        assert!(!fairlet_decompose(&p, &spec, 2, 1).unwrap().feasible);
    }

    #[test]
    fn vacuous_balance_gives_singletons() {
        let p: WeightedPointSet = (0..6)
            .map(|i| TimedPoint::unit(vec![i * 5], i, if i % 2 == 0 { RED } else { BLUE }))
            .collect();
        let f = build_fairlets(&p, &FairnessSpec::vacuous(2), 1).unwrap().unwrap();
        assert_eq!(f.len(), 6);
        let sol = fairlet_decompose(&p, &FairnessSpec::vacuous(2), 6, 1).unwrap();
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn range_balance_respected() {
        let p: WeightedPointSet = (0..30)
            .map(|i| TimedPoint::unit(vec![(i * 7) % 50, (i * 3) % 20], i, if i % 3 == 0 { BLUE } else { RED }))
            .collect();
        let spec = FairnessSpec::new(vec![0.5, 0.25], vec![0.75, 0.5]).unwrap();
        let sol = fairlet_decompose(&p, &spec, 3, 1).unwrap();
        assert!(sol.feasible);
        assert!(sol.verify(&p, 1).unwrap());
    }

    #[test]
    fn rejects_multi_group_points() {
        let p: WeightedPointSet = vec![TimedPoint::unit(vec![0], 0, GroupMask(0b11))].into_iter().collect();
        assert!(fairlet_decompose(&p, &half(), 1, 1).is_err());
    }
}
