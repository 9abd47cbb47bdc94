//! Exhaustive, local-search and fairlet solvers on one small instance.

use std::time::Instant;

use fairwin::assignment::FairnessSpec;
use fairwin::harness::GeneratorSpec;
use fairwin::point::WeightedPointSet;
use fairwin::solver::{brute_force_fair, distinct_locations, fairlet_decompose, LocalSearch};

fn main() -> fairwin::Result<()> {
    let points: WeightedPointSet = GeneratorSpec::Gaussian { n: 24, clusters: 3, dim: 2, delta: 200, seed: 4 }
        .generate()?
        .into_iter()
        .collect();
    let spec = FairnessSpec::new(vec![0.25, 0.25], vec![0.75, 0.75])?;
    let k = 3;

    let t = Instant::now();
    let cands = distinct_locations(points.iter().map(|p| &p.location));
    let bf = brute_force_fair(&points, &spec, k, 1, &cands)?;
    println!("brute force   {:8.1}  {:?}", bf.cost, t.elapsed());

    let t = Instant::now();
    let (ls, trace) = LocalSearch::new(k, 1, 30, 0).run(&points, &spec)?;
    println!("local search  {:8.1}  {:?}  ({} improving swaps)", ls.cost, t.elapsed(), trace.costs.len() - 1);

    let t = Instant::now();
    let fl = fairlet_decompose(&points, &spec, k, 1)?;
    println!("fairlets      {:8.1}  {:?}", fl.cost, t.elapsed());
    println!("all verified: {}", bf.verify(&points, 1)? && ls.verify(&points, 1)? && fl.verify(&points, 1)?);
    Ok(())
}
