use std::collections::BTreeMap;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use serde::{Deserialize, Serialize};

use super::{check_centers, nearest_assignment, AssignmentPlan, PlanEntry};
use crate::error::{Error, Result};
use crate::point::{dist_z_center, Center, GridPoint, GroupMask, WeightedPointSet};

/// Slack allowed when checking fairness fractions of a computed plan.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Per-group lower and upper fractions `α_j ≤ β_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl FairnessSpec {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let s = FairnessSpec { alpha, beta };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuous(groups: usize) -> Self {
        FairnessSpec {
            alpha: vec![0.0; groups],
            beta: vec![1.0; groups],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.len() != self.beta.len() {
            return Err(Error::InvalidParameter("alpha and beta lengths differ".into()));
        }
        for (a, b) in self.alpha.iter().zip(&self.beta) {
            if !(0.0..=1.0).contains(a) || !(0.0..=1.0).contains(b) || a > b {
                return Err(Error::InvalidParameter(format!("bad fairness range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        self.alpha.len()
    }

    /// `((1-ε)α, (1+ε)β)`, upper fractions capped at 1.
    pub fn relaxed(&self, eps: f64) -> FairnessSpec {
        FairnessSpec {
            alpha: self.alpha.iter().map(|a| (a * (1.0 - eps)).max(0.0)).collect(),
            beta: self.beta.iter().map(|b| (b * (1.0 + eps)).min(1.0)).collect(),
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.alpha.iter().all(|&a| a <= 0.0) && self.beta.iter().all(|&b| b >= 1.0)
    }

    /// Checks one cluster composition against the fractions.
    pub fn admits(&self, comp: &ClusterComposition, tol: f64) -> bool {
        if comp.total <= 0.0 {
            return true;
        }
        let slack = tol * comp.total;
        (0..self.groups()).all(|j| {
            let g = comp.per_group.get(j).copied().unwrap_or(0.0);
            g >= self.alpha[j] * comp.total - slack && g <= self.beta[j] * comp.total + slack
        })
    }
}

/// Weighted size of a cluster and of each group inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterComposition {
    pub total: f64,
    pub per_group: Vec<f64>,
}

impl ClusterComposition {
    fn empty(groups: usize) -> Self {
        ClusterComposition {
            total: 0.0,
            per_group: vec![0.0; groups],
        }
    }

    fn add(&mut self, mask: GroupMask, mass: f64) {
        self.total += mass;
        for (j, g) in self.per_group.iter_mut().enumerate() {
            if mask.contains(j) {
                *g += mass;
            }
        }
    }

    pub fn of_set(set: &WeightedPointSet, groups: usize) -> Self {
        let mut c = Self::empty(groups);
        for p in set.iter() {
            c.add(p.groups, p.weight);
        }
        c
    }

    /// Compositions of the clusters induced by a (fractional) plan.
    pub fn of_plan(plan: &AssignmentPlan, points: &WeightedPointSet, centers: usize, groups: usize) -> Vec<Self> {
        let mut out = vec![Self::empty(groups); centers];
        for e in &plan.flows {
            if let (Some(p), Some(c)) = (points.get(e.timestamp), out.get_mut(e.center)) {
                c.add(p.groups, e.mass);
            }
        }
        out
    }
}

/// True iff every nonempty cluster meets every group's fraction range, using
/// weighted counts. Exact comparison, no slack.
pub fn fairness_feasible(clusters: &[WeightedPointSet], spec: &FairnessSpec) -> bool {
    clusters
        .iter()
        .map(|c| ClusterComposition::of_set(c, spec.groups()))
        .all(|comp| spec.admits(&comp, 0.0))
}

/// Fairness check for the clusters a plan induces, with relative slack `tol`.
pub fn plan_is_fair(plan: &AssignmentPlan, points: &WeightedPointSet, centers: usize, spec: &FairnessSpec, tol: f64) -> bool {
    ClusterComposition::of_plan(plan, points, centers, spec.groups())
        .iter()
        .all(|c| spec.admits(c, tol))
}

/// Result of a fairness-constrained assignment. Infeasibility is a value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FairOutcome {
    Feasible { cost: f64, plan: AssignmentPlan },
    Infeasible,
}

impl FairOutcome {
    pub fn cost(&self) -> Option<f64> {
        match self {
            FairOutcome::Feasible { cost, .. } => Some(*cost),
            FairOutcome::Infeasible => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, FairOutcome::Feasible { .. })
    }

    pub fn into_parts(self) -> Option<(f64, AssignmentPlan)> {
        match self {
            FairOutcome::Feasible { cost, plan } => Some((cost, plan)),
            FairOutcome::Infeasible => None,
        }
    }
}

/// Minimum-cost fractional assignment of `points` to `centers` in which every
/// induced cluster satisfies the fractions of `spec`.
///
/// A fractional fair assignment exists iff the global group fractions lie in
/// the ranges (split every point evenly across the centers), so infeasibility
/// is decided up front. When the nearest-center assignment is already fair it
/// is optimal; otherwise the LP is solved over points aggregated by
/// (location, mask).
pub fn fair_cost(points: &WeightedPointSet, centers: &[Center], spec: &FairnessSpec, z: u32) -> Result<FairOutcome> {
    check_centers(points, centers)?;
    spec.validate()?;
    if points.is_empty() {
        return Ok(FairOutcome::Feasible {
            cost: 0.0,
            plan: AssignmentPlan::default(),
        });
    }
    let groups = spec.groups();
    let global = ClusterComposition::of_set(points, groups);
    if !spec.admits(&global, FEASIBILITY_TOL) {
        return Ok(FairOutcome::Infeasible);
    }
    let (cost, plan) = nearest_assignment(points, centers, z)?;
    if centers.len() == 1 || spec.is_vacuous() || plan_is_fair(&plan, points, centers.len(), spec, 0.0) {
        return Ok(FairOutcome::Feasible { cost, plan });
    }
    let plan = solve_fair_lp(points, centers, spec, z)?;
    let cost = plan.cost(points, centers, z)?;
    Ok(FairOutcome::Feasible { cost, plan })
}

struct PointClass {
    location: GridPoint,
    mask: GroupMask,
    weight: f64,
    members: Vec<(i64, f64)>,
}

fn aggregate(points: &WeightedPointSet) -> Vec<PointClass> {
    let mut map: BTreeMap<(&GridPoint, GroupMask), Vec<(i64, f64)>> = BTreeMap::new();
    for p in points.iter() {
        map.entry((&p.location, p.groups)).or_default().push((p.timestamp, p.weight));
    }
    map.into_iter()
        .map(|((loc, mask), members)| PointClass {
            location: loc.clone(),
            mask,
            weight: members.iter().map(|m| m.1).sum(),
            members,
        })
        .collect()
}

fn solve_fair_lp(points: &WeightedPointSet, centers: &[Center], spec: &FairnessSpec, z: u32) -> Result<AssignmentPlan> {
    let classes = aggregate(points);
    let k = centers.len();
    let total = points.total_weight();
    let costs: Vec<Vec<f64>> = classes
        .iter()
        .map(|cl| centers.iter().map(|c| dist_z_center(&cl.location, c, z)).collect())
        .collect();
    let max_cost = costs.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let cost_norm = if max_cost > 0.0 { max_cost } else { 1.0 };

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = costs
        .iter()
        .map(|row| row.iter().map(|&c| lp.add_var(c / cost_norm, (0.0, f64::INFINITY))).collect())
        .collect();
    for (cl, row) in classes.iter().zip(&vars) {
        let expr: LinearExpr = row.iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(expr, ComparisonOp::Eq, cl.weight / total);
    }
    for c in 0..k {
        for j in 0..spec.groups() {
            let member = |cl: &PointClass| if cl.mask.contains(j) { 1.0 } else { 0.0 };
            if spec.alpha[j] > 0.0 {
                let expr: LinearExpr = classes
                    .iter()
                    .zip(&vars)
                    .map(|(cl, row)| (row[c], member(cl) - spec.alpha[j]))
                    .collect();
                lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
            }
            if spec.beta[j] < 1.0 {
                let expr: LinearExpr = classes
                    .iter()
                    .zip(&vars)
                    .map(|(cl, row)| (row[c], member(cl) - spec.beta[j]))
                    .collect();
                lp.add_constraint(expr, ComparisonOp::Le, 0.0);
            }
        }
    }
    let solution = match lp.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(SolveOutcome::Interrupted(_)) => return Err(Error::Solver("interrupted".into())),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };

    let mut flows = Vec::new();
    for (cl, row) in classes.iter().zip(&vars) {
        let mut x: Vec<f64> = row.iter().map(|&v| solution.var_value(v).max(0.0)).collect();
        let s: f64 = x.iter().sum();
        if s <= 0.0 {
            return Err(Error::Solver("lp left a point unassigned".into()));
        }
        let fix = cl.weight / s;
        x.iter_mut().for_each(|v| *v *= fix);
        for &(ts, w) in &cl.members {
            let share = w / cl.weight;
            for (c, &m) in x.iter().enumerate() {
                if m > 0.0 {
                    flows.push(PlanEntry {
                        timestamp: ts,
                        center: c,
                        mass: m * share,
                    });
                }
            }
        }
    }
    Ok(AssignmentPlan::from_entries(flows))
}
