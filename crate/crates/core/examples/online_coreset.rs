//! Ring-sampled online coreset and its prefix property.

use fairwin::coreset::{build_coreset, CoresetConfig, OnlineCoreset};
use fairwin::harness::GeneratorSpec;
use fairwin::point::ClusteringParams;

fn main() -> fairwin::Result<()> {
    let stream = GeneratorSpec::Gaussian { n: 2000, clusters: 4, dim: 2, delta: 1 << 12, seed: 3 }.generate()?;
    let params = ClusteringParams::new(4, 1, 1 << 12, 2, 0.3, 0.1)?;
    let config = CoresetConfig::explicit(4.0);

    let mut online = OnlineCoreset::new(params.clone(), &config, 11)?;
    for p in &stream {
        online.insert(p.clone())?;
    }
    let s = online.extract();
    println!("{} points -> {} samples in {} rings, weight {:.0}", stream.len(), s.len(), online.rings().count(), s.total_weight());

    // a run on any prefix keeps exactly the samples the full run kept there
    let prefix = build_coreset(&stream[..500], params.clone(), &config, 11)?;
    let restricted: Vec<i64> = online.samples().iter().map(|c| c.point.timestamp).filter(|&t| t <= 500).collect();
    let own: Vec<i64> = prefix.samples().iter().map(|c| c.point.timestamp).collect();
    println!("prefix samples agree: {}", restricted == own);
    Ok(())
}
