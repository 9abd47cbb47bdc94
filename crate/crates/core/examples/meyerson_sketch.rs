//! Online facility-location sketch on a clustered stream.

use fairwin::harness::GeneratorSpec;
use fairwin::meyerson::{MeyersonConfig, MeyersonSketch};
use fairwin::point::ClusteringParams;

fn main() -> fairwin::Result<()> {
    let stream = GeneratorSpec::Gaussian { n: 1000, clusters: 5, dim: 2, delta: 1 << 12, seed: 7 }.generate()?;
    let params = ClusteringParams::new(5, 1, 1 << 12, 2, 0.3, 0.1)?;

    for (name, cfg) in [("standard", MeyersonConfig::standard(&params)), ("compact", MeyersonConfig::compact(&params))] {
        let mut sk = MeyersonSketch::new(params.clone(), cfg, 1);
        for p in &stream {
            sk.insert(p);
        }
        println!(
            "{name}: {} centers over {} phases (bound {}), logged cost {:.0}",
            sk.num_centers(),
            sk.phases(),
            sk.center_bound(),
            sk.logged_cost()
        );
    }
    Ok(())
}
