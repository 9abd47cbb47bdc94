use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fairwin::assignment::FairnessSpec;
use fairwin::harness::{
    config::expand_config_args, grid_bound, parse_bits, run_benchmark, write_stream_csv, CsvSchema, FairnessChoice,
    GeneratorSpec, Method, SolverKind, Source, StreamConfig, DEFAULT_GRID,
};
use fairwin::coreset::{CoresetConfig, SampleRate, Scaffold};
use fairwin::point::{ClusteringParams, WeightedPointSet};
use fairwin::sliding::{read_checkpoint, write_checkpoint, WindowSketch};
use fairwin::solver::{fairlet_decompose, LocalSearch};
use fairwin::{Error, Result};

#[derive(Parser)]
#[command(name = "fairwin", version, about = "Sliding-window coresets for fair clustering", args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream against the baselines and emit per-checkpoint CSV.
    Run(RunArgs),
    /// Write a synthetic stream as CSV.
    Gen(GenArgs),
    /// One-shot fair clustering of a whole stream.
    Solve(SolveArgs),
    /// Build (or load) a window sketch and report its memory.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Gaussian,
    Drift,
    Augindex,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// CSV input; mutually exclusive with --generator.
    #[arg(long, conflicts_with = "generator")]
    input: Option<PathBuf>,
    /// Feature columns (default: every column named x0, x1, ...).
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Group columns.
    #[arg(long, value_delimiter = ',', default_value = "group")]
    groups: Vec<String>,
    /// Take integer features as they are instead of rescaling onto the grid.
    #[arg(long)]
    raw: bool,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Grid bound.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    delta: i64,
    #[arg(long, default_value_t = 0.1)]
    drift_start: f64,
    #[arg(long, default_value_t = 0.9)]
    drift_end: f64,
    /// Bit string for the lower-bound gadget.
    #[arg(long)]
    bits: Option<String>,
    /// 1-based index for the lower-bound gadget.
    #[arg(long, default_value_t = 1)]
    index: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SourceArgs {
    fn source(&self) -> Result<Source> {
        match (&self.input, self.generator) {
            (Some(path), None) => {
                let features = if self.features.is_empty() { default_features(path)? } else { self.features.clone() };
                Ok(Source::Csv {
                    path: path.clone(),
                    schema: CsvSchema {
                        delta: self.delta,
                        raw: self.raw,
                        ..CsvSchema::new(features, self.groups.clone())
                    },
                })
            }
            (None, Some(g)) => Ok(Source::Generator(self.generator_spec(g)?)),
            _ => Err(Error::InvalidParameter("give exactly one of --input and --generator".into())),
        }
    }

    fn generator_spec(&self, g: Generator) -> Result<GeneratorSpec> {
        Ok(match g {
            Generator::Gaussian => GeneratorSpec::Gaussian {
                n: self.n,
                clusters: self.clusters,
                dim: self.dim,
                delta: self.delta,
                seed: self.seed,
            },
            Generator::Drift => GeneratorSpec::Drift {
                n: self.n,
                clusters: self.clusters,
                dim: self.dim,
                delta: self.delta,
                start: self.drift_start,
                end: self.drift_end,
                seed: self.seed,
            },
            Generator::Augindex => {
                let x = parse_bits(self.bits.as_deref().ok_or_else(|| Error::InvalidParameter("--bits is required".into()))?)?;
                GeneratorSpec::AugIndex {
                    n: x.len() / 2,
                    i: self.index,
                    x,
                    delta: self.delta,
                }
            }
        })
    }
}

fn default_features(path: &PathBuf) -> Result<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let cols: Vec<String> = rdr
        .headers()?
        .iter()
        .filter(|h| h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(String::from)
        .collect();
    if cols.is_empty() {
        return Err(Error::MissingColumn("x0".into()));
    }
    Ok(cols)
}

#[derive(Args, Clone)]
struct FairArgs {
    /// Per-group lower fractions; needs --beta.
    #[arg(long, value_delimiter = ',', requires = "beta")]
    alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', requires = "alpha")]
    beta: Vec<f64>,
    /// Fractions within this slack of the stream-wide shares.
    #[arg(long, default_value_t = 0.2)]
    slack: f64,
}

impl FairArgs {
    fn choice(&self) -> Result<FairnessChoice> {
        if self.alpha.is_empty() {
            Ok(FairnessChoice::Balance { slack: self.slack })
        } else {
            Ok(FairnessChoice::Explicit(FairnessSpec::new(self.alpha.clone(), self.beta.clone())?))
        }
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    z: u32,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    fail_prob: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Local,
    Fairlet,
}

impl From<Solver> for SolverKind {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Local => SolverKind::LocalSearch,
            Solver::Fairlet => SolverKind::Fairlet,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    fair: FairArgs,
    #[arg(long, default_value_t = 500)]
    window: usize,
    /// Per-block coreset size; 0 uses the derived sampling rate.
    #[arg(long, default_value_t = 100)]
    target_size: usize,
    /// ours, benchmark, uniform, unconstrained or all (comma separated).
    #[arg(long, default_value = "all")]
    method: String,
    /// Evaluate every this many arrivals (default: window/10).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum, default_value = "local")]
    solver: Solver,
    /// Fair local-search rounds per solve.
    #[arg(long, default_value_t = 8)]
    iters: usize,
    /// Zero the timing columns.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    fair: FairArgs,
    #[arg(long, value_enum, default_value = "local")]
    solver: Solver,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    /// Cluster only the last this many points.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[arg(long, default_value_t = 100)]
    target_size: usize,
    /// Ignore group masks when partitioning.
    #[arg(long)]
    unpartitioned: bool,
    /// Load this checkpoint instead of building a sketch.
    #[arg(long, conflicts_with_all = ["input", "generator"])]
    checkpoint: Option<PathBuf>,
    /// Write the built sketch here.
    #[arg(long)]
    save: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn rate(target: usize, stream_len: u64) -> CoresetConfig {
    if target == 0 {
        CoresetConfig {
            rate: SampleRate::Derived {
                c0: 1.0,
                stream_len,
                exponent_const: 1.0,
            },
            scaffold: Scaffold::Compact,
        }
    } else {
        CoresetConfig::target(target)
    }
}

fn run(a: RunArgs) -> Result<()> {
    let source = a.source.source()?;
    let cfg = StreamConfig {
        z: a.model.z,
        epsilon: a.model.epsilon,
        fail_prob: a.model.fail_prob,
        seed: a.source.seed,
        target_size: (a.target_size > 0).then_some(a.target_size),
        fairness: a.fair.choice()?,
        methods: Method::parse_list(&a.method)?,
        stride: a.stride,
        solver: a.solver.into(),
        solver_iters: a.iters,
        deterministic: a.deterministic,
        ..StreamConfig::new(source, a.window, a.model.k)
    };
    let stream = cfg.source.load()?;
    log::info!("replaying {} points", stream.len());
    run_benchmark(&cfg, &stream)?.write_csv(output(&a.out)?)
}

fn gen(a: GenArgs) -> Result<()> {
    let g = a
        .source
        .generator
        .ok_or_else(|| Error::InvalidParameter("--generator is required".into()))?;
    let points = a.source.generator_spec(g)?.generate()?;
    write_stream_csv(output(&a.out)?, &points)
}

fn solve(a: SolveArgs) -> Result<()> {
    let mut stream = a.source.source()?.load()?;
    if let Some(m) = a.window {
        stream.drain(..stream.len().saturating_sub(m));
    }
    let spec = a.fair.choice()?.resolve(&stream)?;
    let set: WeightedPointSet = stream.into_iter().collect();
    let sol = match SolverKind::from(a.solver) {
        SolverKind::LocalSearch => LocalSearch::new(a.model.k, a.model.z, a.iters, a.source.seed).run(&set, &spec)?.0,
        SolverKind::Fairlet => fairlet_decompose(&set, &spec, a.model.k, a.model.z)?,
    };
    let mut out = output(&a.out)?;
    writeln!(out, "{}", sol.to_json()?)?;
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let sketch = match &a.checkpoint {
        Some(p) => read_checkpoint(io::BufReader::new(File::open(p)?))?,
        None => {
            let stream = a.source.source()?.load()?;
            let dim = stream.first().ok_or(Error::NoRows)?.location.dim();
            let n = stream.len() as u64;
            let m = &a.model;
            let params = ClusteringParams::new(m.k, m.z, grid_bound(&stream), dim, m.epsilon, m.fail_prob)?;
            let mut sk = if a.unpartitioned {
                WindowSketch::single(params, a.window, rate(a.target_size, n), a.source.seed)?
            } else {
                WindowSketch::partitioned(params, a.window, rate(a.target_size, n), a.source.seed)?
            };
            for p in stream {
                sk.insert(p)?;
            }
            sk
        }
    };
    if let Some(p) = &a.save {
        let mut w = BufWriter::new(File::create(p)?);
        write_checkpoint(&mut w, &sketch)?;
        w.flush()?;
    }
    let report = serde_json::json!({
        "time": sketch.time(),
        "window": sketch.window(),
        "top_level": sketch.top_level(),
        "retained": sketch.retained(),
        "extracted": sketch.extract()?.len(),
        "memory": sketch.memory(),
    });
    let mut out = output(&a.out)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = expand_config_args(std::env::args().collect()).and_then(|args| {
        let cli = Cli::parse_from(args);
        match cli.command {
            Command::Run(a) => run(a),
            Command::Gen(a) => gen(a),
            Command::Solve(a) => solve(a),
            Command::Inspect(a) => inspect(a),
        }
    });
    if let Err(e) = result {
        if matches!(&e, fairwin::error::Error::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe) {
            return;
        }
        eprintln!("fairwin: {e}");
        std::process::exit(1);
    }
}
