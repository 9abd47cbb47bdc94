//! Constrained cost of a tiny instance: the same points and centers under
//! nearest assignment and under prescribed per-center masses.

use fairwin::assignment::{constrained_cost, nearest_assignment, AssignmentConstraint};
use fairwin::point::{Center, GroupMask, TimedPoint, WeightedPointSet};

fn main() -> fairwin::Result<()> {
    let points: WeightedPointSet = [(0, 1.0), (1, 1.0), (2, 2.0), (10, 1.0)]
        .iter()
        .enumerate()
        .map(|(t, &(x, w))| TimedPoint::unit(vec![x], t as i64, GroupMask::single(0)).with_weight(w))
        .collect();
    let centers = vec![Center(vec![0.0]), Center(vec![10.0])];

    let (free, _) = nearest_assignment(&points, &centers, 1)?;
    println!("nearest assignment cost: {free}");

    for masses in [vec![4.0, 1.0], vec![3.0, 2.0], vec![2.5, 2.5]] {
        let gamma = AssignmentConstraint::new(masses.clone())?;
        let (cost, plan) = constrained_cost(&points, &centers, &gamma, 1)?;
        println!("gamma {masses:?}: cost {cost}, center masses {:?}", plan.center_masses(2));
    }
    Ok(())
}
