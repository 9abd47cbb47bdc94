//! Replays a synthetic stream against every baseline and prints the
//! per-checkpoint CSV.

use fairwin::harness::{run_benchmark, GeneratorSpec, Source, StreamConfig};

fn main() -> fairwin::Result<()> {
    let source = Source::Generator(GeneratorSpec::Gaussian { n: 3000, clusters: 4, dim: 2, delta: 1 << 12, seed: 0 });
    let cfg = StreamConfig {
        target_size: Some(60),
        stride: Some(500),
        deterministic: true,
        ..StreamConfig::new(source, 500, 4)
    };
    let stream = cfg.source.load()?;
    let record = run_benchmark(&cfg, &stream)?;
    print!("{}", record.to_csv_string()?);
    Ok(())
}
