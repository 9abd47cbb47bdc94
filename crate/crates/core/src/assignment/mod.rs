//! Constrained clustering cost: assignments of weighted points to centers
//! under prescribed per-center masses, evaluated exactly as transportation
//! problems, plus the fairness-constrained objective.

mod fair;
pub mod flow;

pub use fair::{fair_cost, fairness_feasible, plan_is_fair, ClusterComposition, FairOutcome, FairnessSpec, FEASIBILITY_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dist_z_center, Center, WeightedPointSet};
use flow::MinCostFlow;

/// Relative tolerance for mass balance checks.
pub const MASS_TOL: f64 = 1e-9;

/// Largest integer cost handed to the flow solver.
const MAX_SCALED_COST: f64 = (1u64 << 40) as f64;
/// Default cost scale, `2^20`.
const COST_SCALE: f64 = (1u64 << 20) as f64;

/// Per-center masses `Γ(c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentConstraint {
    pub masses: Vec<f64>,
}

impl AssignmentConstraint {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameter("assignment masses must be non-negative".into()));
        }
        Ok(AssignmentConstraint { masses })
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> AssignmentConstraint {
        AssignmentConstraint {
            masses: self.masses.iter().map(|m| m * factor).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub timestamp: i64,
    pub center: usize,
    pub mass: f64,
}

/// Sparse assignment function `σ(p, c)`, sorted by (timestamp, center).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub flows: Vec<PlanEntry>,
}

impl AssignmentPlan {
    pub(crate) fn from_entries(mut flows: Vec<PlanEntry>) -> Self {
        flows.retain(|e| e.mass > 0.0);
        flows.sort_by(|a, b| (a.timestamp, a.center).cmp(&(b.timestamp, b.center)));
        AssignmentPlan { flows }
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// `Σ σ(p,c)·dist(p,c)^z`. Entries whose point is missing from `points`
    /// are an error.
    pub fn cost(&self, points: &WeightedPointSet, centers: &[Center], z: u32) -> Result<f64> {
        let mut total = 0.0;
        for e in &self.flows {
            let p = points
                .get(e.timestamp)
                .ok_or_else(|| Error::InvalidParameter(format!("plan references unknown point {}", e.timestamp)))?;
            let c = centers
                .get(e.center)
                .ok_or_else(|| Error::InvalidParameter(format!("plan references unknown center {}", e.center)))?;
            total += e.mass * dist_z_center(&p.location, c, z);
        }
        Ok(total)
    }

    pub fn point_mass(&self, timestamp: i64) -> f64 {
        self.flows.iter().filter(|e| e.timestamp == timestamp).map(|e| e.mass).sum()
    }

    pub fn center_masses(&self, centers: usize) -> Vec<f64> {
        let mut m = vec![0.0; centers];
        for e in &self.flows {
            if e.center < centers {
                m[e.center] += e.mass;
            }
        }
        m
    }

    pub fn total_mass(&self) -> f64 {
        self.flows.iter().map(|e| e.mass).sum()
    }
}

fn check_centers(points: &WeightedPointSet, centers: &[Center]) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::EmptyCenters);
    }
    if let Some(d) = points.dim() {
        for c in centers {
            if c.dim() != d {
                return Err(Error::DimensionMismatch(d, c.dim()));
            }
        }
    }
    Ok(())
}

/// Dense `n × k` table of `dist^z` in point order.
pub(crate) fn cost_table(points: &WeightedPointSet, centers: &[Center], z: u32) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| centers.iter().map(|c| dist_z_center(&p.location, c, z)).collect())
        .collect()
}

/// Routes mass from points to centers at minimum cost, pushing at most
/// `limit`. Center capacities are `gamma`.
fn transport(points: &WeightedPointSet, centers: &[Center], gamma: &[f64], z: u32, limit: f64) -> AssignmentPlan {
    let n = points.len();
    let k = centers.len();
    let table = cost_table(points, centers, z);
    let max_cost = table.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let scale = if max_cost > 0.0 {
        COST_SCALE.min(MAX_SCALED_COST / max_cost)
    } else {
        COST_SCALE
    };
    let source = 0;
    let sink = n + k + 1;
    let mut g = MinCostFlow::new(n + k + 2);
    let mass_scale = points.total_weight().max(gamma.iter().sum::<f64>()).max(f64::MIN_POSITIVE);
    g.set_tolerance(1e-13 * mass_scale);
    let middle_cap = mass_scale * 2.0;
    let mut middle = Vec::with_capacity(n * k);
    for (i, p) in points.iter().enumerate() {
        g.add_edge(source, 1 + i, p.weight, 0);
        for j in 0..k {
            let c = (table[i][j] * scale).round() as i64;
            middle.push((p.timestamp, j, g.add_edge(1 + i, 1 + n + j, middle_cap, c)));
        }
    }
    for (j, &m) in gamma.iter().enumerate() {
        g.add_edge(1 + n + j, sink, m, 0);
    }
    g.run(source, sink, limit);
    AssignmentPlan::from_entries(
        middle
            .into_iter()
            .map(|(timestamp, center, e)| PlanEntry {
                timestamp,
                center,
                mass: g.flow(e),
            })
            .collect(),
    )
}

/// `cost(P, C, Γ)`: cheapest assignment consistent with `Γ`.
///
/// Costs are rounded to integers at scale `2^20` (reduced when `dist^z` is
/// large) before the flow solve; the returned cost is re-evaluated from the
/// plan in floating point, so it is exact for the plan and within
/// `n·2^{-20}·max dist^z` of the true optimum.
pub fn constrained_cost(
    points: &WeightedPointSet,
    centers: &[Center],
    gamma: &AssignmentConstraint,
    z: u32,
) -> Result<(f64, AssignmentPlan)> {
    check_centers(points, centers)?;
    if gamma.masses.len() != centers.len() {
        return Err(Error::InvalidParameter(format!(
            "{} masses for {} centers",
            gamma.masses.len(),
            centers.len()
        )));
    }
    let w = points.total_weight();
    let g = gamma.total();
    if (w - g).abs() > MASS_TOL * w.max(g).max(1e-300) {
        return Err(Error::MassMismatch {
            constraint: g,
            points: w,
        });
    }
    if points.is_empty() {
        return Ok((0.0, AssignmentPlan::default()));
    }
    let plan = transport(points, centers, &gamma.masses, z, w.max(g));
    let cost = plan.cost(points, centers, z)?;
    Ok((cost, plan))
}

/// `cost′(S, C, Γ)`: masses need not balance; the lighter side is routed in
/// full through the source → point → center → sink network.
pub fn partial_assignment(
    points: &WeightedPointSet,
    centers: &[Center],
    gamma: &AssignmentConstraint,
    z: u32,
) -> Result<(f64, AssignmentPlan)> {
    check_centers(points, centers)?;
    if gamma.masses.len() != centers.len() {
        return Err(Error::InvalidParameter(format!(
            "{} masses for {} centers",
            gamma.masses.len(),
            centers.len()
        )));
    }
    if points.is_empty() || gamma.total() == 0.0 {
        return Ok((0.0, AssignmentPlan::default()));
    }
    let limit = points.total_weight().min(gamma.total());
    let plan = transport(points, centers, &gamma.masses, z, limit);
    let cost = plan.cost(points, centers, z)?;
    Ok((cost, plan))
}

pub fn partial_cost(points: &WeightedPointSet, centers: &[Center], gamma: &AssignmentConstraint, z: u32) -> Result<f64> {
    partial_assignment(points, centers, gamma, z).map(|(c, _)| c)
}

/// Unconstrained assignment: every point to its nearest center (lowest index
/// on ties).
pub fn nearest_assignment(points: &WeightedPointSet, centers: &[Center], z: u32) -> Result<(f64, AssignmentPlan)> {
    check_centers(points, centers)?;
    let mut cost = 0.0;
    let mut flows = Vec::with_capacity(points.len());
    for p in points.iter() {
        let (j, d) = centers
            .iter()
            .enumerate()
            .map(|(j, c)| (j, dist_z_center(&p.location, c, z)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        cost += p.weight * d;
        flows.push(PlanEntry {
            timestamp: p.timestamp,
            center: j,
            mass: p.weight,
        });
    }
    Ok((cost, AssignmentPlan::from_entries(flows)))
}
