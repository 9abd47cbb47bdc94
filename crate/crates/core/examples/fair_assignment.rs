//! Fair cost for fixed centers: each cluster must hold between 40% and 60%
//! of either group.

use fairwin::assignment::{fair_cost, FairOutcome, FairnessSpec};
use fairwin::point::{Center, GroupMask, TimedPoint, WeightedPointSet};

fn main() -> fairwin::Result<()> {
    // group 0 sits left, group 1 mostly right
    let points: WeightedPointSet = [(0, 0), (1, 0), (2, 0), (9, 1), (10, 1), (3, 1)]
        .iter()
        .enumerate()
        .map(|(t, &(x, g))| TimedPoint::unit(vec![x], t as i64, GroupMask::single(g)))
        .collect();
    let centers = vec![Center(vec![1.0]), Center(vec![9.0])];

    for (name, spec) in [
        ("vacuous", FairnessSpec::vacuous(2)),
        ("40-60", FairnessSpec::new(vec![0.4, 0.4], vec![0.6, 0.6])?),
        ("only group 1", FairnessSpec::new(vec![0.0, 1.0], vec![0.0, 1.0])?),
    ] {
        match fair_cost(&points, &centers, &spec, 1)? {
            FairOutcome::Feasible { cost, .. } => println!("{name}: {cost:.3}"),
            FairOutcome::Infeasible => println!("{name}: infeasible"),
        }
    }
    Ok(())
}
