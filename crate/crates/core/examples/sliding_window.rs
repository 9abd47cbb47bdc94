//! Merge-and-reduce over a sliding window: memory per level and the
//! extracted window coreset.

use fairwin::coreset::CoresetConfig;
use fairwin::harness::GeneratorSpec;
use fairwin::point::ClusteringParams;
use fairwin::sliding::WindowSketch;

fn main() -> fairwin::Result<()> {
    let stream = GeneratorSpec::Gaussian { n: 5000, clusters: 4, dim: 2, delta: 1 << 12, seed: 5 }.generate()?;
    let params = ClusteringParams::new(4, 1, 1 << 12, 2, 0.3, 0.1)?;
    let mut sk = WindowSketch::single(params, 1024, CoresetConfig::target(100), 9)?;

    for (i, p) in stream.iter().enumerate() {
        sk.insert(p.clone())?;
        if (i + 1) % 1000 == 0 {
            let w = sk.extract_window()?;
            let h = &sk.memory().hierarchies[0];
            let levels: Vec<String> = h.levels.iter().map(|l| l.map_or("-".into(), |n| n.to_string())).collect();
            println!(
                "t={:5} retained={:4} window coreset={:3} weight={:6.0} levels [{}]",
                sk.time(),
                sk.retained(),
                w.len(),
                w.total_weight(),
                levels.join(" ")
            );
        }
    }
    Ok(())
}
