//! Group-partitioned window sketch feeding a fair solver, compared with the
//! same solver on the exact window.

use fairwin::assignment::FairnessSpec;
use fairwin::coreset::CoresetConfig;
use fairwin::harness::GeneratorSpec;
use fairwin::point::{ClusteringParams, WeightedPointSet};
use fairwin::sliding::WindowSketch;
use fairwin::solver::{local_search_fair, FairSolution};

fn main() -> fairwin::Result<()> {
    let (m, k) = (400, 3);
    let stream = GeneratorSpec::Gaussian { n: 1200, clusters: 3, dim: 2, delta: 1000, seed: 1 }.generate()?;
    let params = ClusteringParams::new(k, 1, 1000, 2, 0.3, 0.1)?;
    let spec = FairnessSpec::new(vec![0.3, 0.3], vec![0.7, 0.7])?;

    let mut sk = WindowSketch::partitioned(params, m, CoresetConfig::target(40), 2)?;
    for p in &stream {
        sk.insert(p.clone())?;
    }
    let coreset = sk.extract_window()?;
    let window: WeightedPointSet = stream[stream.len() - m..].iter().cloned().collect();

    let on_coreset = local_search_fair(&coreset, &spec.relaxed(0.3), k, 1, 10, 0)?;
    let judged = FairSolution::evaluate(&window, on_coreset.centers.clone(), &spec, 1)?;
    let exact = local_search_fair(&window, &spec, k, 1, 10, 0)?;
    println!("coreset of {} points for a window of {m}", coreset.len());
    println!("centers from coreset, cost on window: {:.1}", judged.cost);
    println!("centers from window,  cost on window: {:.1}", exact.cost);
    Ok(())
}
