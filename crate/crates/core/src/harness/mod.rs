//! Stream replay against baselines.
//!
//! At every checkpoint each selected method proposes centers from its own
//! summary of the active window; the reported cost is the exact fair cost of
//! those centers on the exact window under the exact fractions, so rows of
//! different methods are directly comparable.

pub mod config;
mod generate;
mod ingest;

pub use generate::{
    augindex_spec, augindex_window, gaussian_mixture, gen_augindex_instance, parse_bits, GeneratorSpec, AUG_C1, AUG_C2,
};
pub use ingest::{grid_bound, ingest_csv, ingest_reader, quantize, write_stream_csv, CsvSchema, Ingested, DEFAULT_GRID};

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{ClusterComposition, FairnessSpec};
use crate::coreset::{CoresetConfig, SampleRate, Scaffold};
use crate::error::{Error, Result};
use crate::point::{ClusteringParams, TimedPoint, WeightedPointSet};
use crate::prf;
use crate::sliding::WindowSketch;
use crate::solver::{fairlet_decompose, FairSolution, LocalSearch};

/// Fixed CSV header of a run.
pub const RUN_HEADER: [&str; 7] = ["t", "method", "coreset_size", "insert_us", "solve_us", "cost", "feasible"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Ours,
    Benchmark,
    Uniform,
    Unconstrained,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ours, Method::Benchmark, Method::Uniform, Method::Unconstrained];

    /// Parses a method name; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidParameter("no method selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ours => "ours",
            Method::Benchmark => "benchmark",
            Method::Uniform => "uniform",
            Method::Unconstrained => "unconstrained",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(Method::Ours),
            "benchmark" => Ok(Method::Benchmark),
            "uniform" => Ok(Method::Uniform),
            "unconstrained" => Ok(Method::Unconstrained),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// Downstream solver used on every summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverKind {
    LocalSearch,
    Fairlet,
}

impl FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" | "local-search" => Ok(SolverKind::LocalSearch),
            "fairlet" => Ok(SolverKind::Fairlet),
            _ => Err(Error::InvalidParameter(format!("unknown solver {s:?}"))),
        }
    }
}

/// How the fractions are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FairnessChoice {
    Explicit(FairnessSpec),
    /// `α_j = (1−s)·p_j`, `β_j = p_j/(1−s)` around the stream-wide group
    /// shares `p_j`.
    Balance { slack: f64 },
}

impl FairnessChoice {
    pub fn resolve(&self, points: &[TimedPoint]) -> Result<FairnessSpec> {
        match self {
            FairnessChoice::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            FairnessChoice::Balance { slack } => {
                if !(0.0..1.0).contains(slack) {
                    return Err(Error::InvalidParameter(format!("balance slack {slack} outside [0,1)")));
                }
                let groups = points.iter().map(|p| 64 - p.groups.0.leading_zeros() as usize).max().unwrap_or(0);
                let set: WeightedPointSet = points.iter().cloned().collect();
                let comp = ClusterComposition::of_set(&set, groups);
                let shares: Vec<f64> = comp.per_group.iter().map(|g| g / comp.total.max(f64::MIN_POSITIVE)).collect();
                FairnessSpec::new(
                    shares.iter().map(|p| p * (1.0 - slack)).collect(),
                    shares.iter().map(|p| (p / (1.0 - slack)).min(1.0)).collect(),
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Source {
    Csv { path: PathBuf, schema: CsvSchema },
    Generator(GeneratorSpec),
}

impl Source {
    pub fn load(&self) -> Result<Vec<TimedPoint>> {
        match self {
            Source::Csv { path, schema } => Ok(ingest_csv(path, schema)?.points),
            Source::Generator(g) => g.generate(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub source: Source,
    pub window: usize,
    pub k: usize,
    pub z: u32,
    pub epsilon: f64,
    pub fail_prob: f64,
    pub seed: u64,
    /// Per-block coreset size; `None` uses the derived rate.
    pub target_size: Option<usize>,
    pub fairness: FairnessChoice,
    pub methods: Vec<Method>,
    /// Evaluate every `stride` arrivals; `None` means `m/10`.
    pub stride: Option<usize>,
    pub solver: SolverKind,
    pub solver_iters: usize,
    /// Zero the timing columns so repeated runs are byte-identical.
    pub deterministic: bool,
}

impl StreamConfig {
    pub fn new(source: Source, window: usize, k: usize) -> Self {
        StreamConfig {
            source,
            window,
            k,
            z: 1,
            epsilon: 0.3,
            fail_prob: 0.1,
            seed: 0,
            target_size: Some(100),
            fairness: FairnessChoice::Balance { slack: 0.2 },
            methods: Method::ALL.to_vec(),
            stride: None,
            solver: SolverKind::LocalSearch,
            solver_iters: 8,
            deterministic: false,
        }
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or((self.window / 10).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::InvalidParameter("window must be at least 1".into()));
        }
        if self.stride() < 1 {
            return Err(Error::InvalidParameter("stride must be at least 1".into()));
        }
        if self.k < 1 || self.z < 1 {
            return Err(Error::InvalidParameter("k and z must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no method selected".into()));
        }
        Ok(())
    }

    fn coreset_config(&self, stream_len: usize) -> CoresetConfig {
        CoresetConfig {
            rate: match self.target_size {
                Some(s) => SampleRate::Target(s),
                None => SampleRate::Derived {
                    c0: 1.0,
                    stream_len: stream_len as u64,
                    exponent_const: 1.0,
                },
            },
            scaffold: Scaffold::Compact,
        }
    }
}

/// One checkpoint of one method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub t: u64,
    pub method: Method,
    /// Points in the summary handed to the solver.
    pub coreset_size: usize,
    /// Points the method stores.
    pub retained: usize,
    pub insert_us: f64,
    pub solve_us: f64,
    pub cost: Option<f64>,
    pub feasible: bool,
    /// Centers and exact-window plan behind `cost`.
    pub solution: FairSolution,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn rows_for(&self, m: Method) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(move |r| r.method == m)
    }

    /// RFC-4180 CSV with [`RUN_HEADER`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(RUN_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.t.to_string(),
                r.method.to_string(),
                r.coreset_size.to_string(),
                format!("{:.3}", r.insert_us),
                format!("{:.3}", r.solve_us),
                r.cost.map(|c| c.to_string()).unwrap_or_default(),
                r.feasible.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Uniform sample of up to `per_group` points from every group mask,
/// reweighted so each group keeps its exact mass.
pub fn uniform_sample(window: &[TimedPoint], per_group: usize, seed: u64) -> WeightedPointSet {
    let mut by_mask: BTreeMap<u64, Vec<&TimedPoint>> = BTreeMap::new();
    for p in window {
        by_mask.entry(p.groups.0).or_default().push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = WeightedPointSet::new();
    for pts in by_mask.values() {
        let s = per_group.min(pts.len());
        let mass: f64 = pts.iter().map(|p| p.weight).sum();
        let picked = sample(&mut rng, pts.len(), s);
        let w = mass / s as f64;
        for i in picked.iter() {
            out.insert(pts[i].clone().with_weight(w)).expect("positive weight");
        }
    }
    out
}

struct Timer {
    deterministic: bool,
}

impl Timer {
    fn time<T>(&self, f: impl FnOnce() -> T) -> (T, f64) {
        let start = Instant::now();
        let out = f();
        let us = if self.deterministic { 0.0 } else { start.elapsed().as_secs_f64() * 1e6 };
        (out, us)
    }
}

/// Replays `stream` (renumbered `1…n`) and evaluates the configured methods.
pub fn run_benchmark(cfg: &StreamConfig, stream: &[TimedPoint]) -> Result<RunRecord> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::NoRows);
    }
    let stream = ingest::renumber(stream);
    let dim = stream[0].location.dim();
    let exact_spec = cfg.fairness.resolve(&stream)?;
    let solve_spec = exact_spec.relaxed(cfg.epsilon);
    let params = ClusteringParams::new(cfg.k, cfg.z, grid_bound(&stream), dim, cfg.epsilon, cfg.fail_prob)?;
    let ccfg = cfg.coreset_config(stream.len());
    let timer = Timer {
        deterministic: cfg.deterministic,
    };
    let wants = |m| cfg.methods.contains(&m);

    let mut ours = match wants(Method::Ours) {
        true => Some(WindowSketch::partitioned(params.clone(), cfg.window, ccfg.clone(), cfg.seed)?),
        false => None,
    };
    let mut unconstrained = match wants(Method::Unconstrained) {
        true => Some(WindowSketch::single(params.clone(), cfg.window, ccfg.clone(), cfg.seed ^ 0x5eed)?),
        false => None,
    };
    let mut window: VecDeque<TimedPoint> = VecDeque::with_capacity(cfg.window + 1);
    let mut insert_us: BTreeMap<Method, f64> = BTreeMap::new();
    let mut since = 0usize;
    let mut record = RunRecord::default();

    for p in &stream {
        let ((), us) = timer.time(|| {
            window.push_back(p.clone());
            if window.len() > cfg.window {
                window.pop_front();
            }
        });
        *insert_us.entry(Method::Benchmark).or_default() += us;
        *insert_us.entry(Method::Uniform).or_default() += us;
        if let Some(sk) = ours.as_mut() {
            let (r, us) = timer.time(|| sk.insert(p.clone()));
            r?;
            *insert_us.entry(Method::Ours).or_default() += us;
        }
        if let Some(sk) = unconstrained.as_mut() {
            let (r, us) = timer.time(|| sk.insert(p.clone()));
            r?;
            *insert_us.entry(Method::Unconstrained).or_default() += us;
        }
        since += 1;
        let t = p.timestamp as u64;
        if t % cfg.stride() as u64 != 0 {
            continue;
        }
        let exact: Vec<TimedPoint> = window.iter().cloned().collect();
        let exact_set: WeightedPointSet = exact.iter().cloned().collect();
        let solve_seed = prf::hash(&[cfg.seed, t]);
        for &m in &cfg.methods {
            let (summary, retained, spec) = match m {
                Method::Ours => {
                    let sk = ours.as_ref().expect("sketch exists for selected method");
                    (sk.extract_window()?, sk.retained(), &solve_spec)
                }
                Method::Unconstrained => {
                    let sk = unconstrained.as_ref().expect("sketch exists for selected method");
                    (sk.extract_window()?, sk.retained(), &solve_spec)
                }
                Method::Benchmark => (exact_set.clone(), exact.len(), &exact_spec),
                Method::Uniform => {
                    let size = cfg.target_size.unwrap_or(exact.len());
                    let s = uniform_sample(&exact, size, solve_seed ^ 0x0a11);
                    let kept = s.len();
                    (s, kept, &solve_spec)
                }
            };
            let (proposal, solve_us) = timer.time(|| solve(cfg, &summary, spec, solve_seed));
            let proposal = proposal?;
            let solution = if proposal.feasible {
                FairSolution::evaluate(&exact_set, proposal.centers, &exact_spec, cfg.z)?
            } else {
                FairSolution::infeasible(&exact_spec)
            };
            record.rows.push(RunRow {
                t,
                method: m,
                coreset_size: summary.len(),
                retained,
                insert_us: insert_us.get(&m).copied().unwrap_or(0.0) / since as f64,
                solve_us,
                cost: solution.feasible.then_some(solution.cost),
                feasible: solution.feasible,
                solution,
            });
        }
        insert_us.clear();
        since = 0;
    }
    Ok(record)
}

fn solve(cfg: &StreamConfig, points: &WeightedPointSet, spec: &FairnessSpec, seed: u64) -> Result<FairSolution> {
    if points.is_empty() {
        return Ok(FairSolution::infeasible(spec));
    }
    match cfg.solver {
        SolverKind::LocalSearch => Ok(LocalSearch::new(cfg.k, cfg.z, cfg.solver_iters, seed).run(points, spec)?.0),
        SolverKind::Fairlet => fairlet_decompose(points, spec, cfg.k, cfg.z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(methods: Vec<Method>) -> StreamConfig {
        StreamConfig {
            methods,
            stride: Some(40),
            ..StreamConfig::new(
                Source::Generator(GeneratorSpec::Gaussian {
                    n: 200,
                    clusters: 3,
                    dim: 2,
                    delta: 1000,
                    seed: 2,
                }),
                80,
                2,
            )
        }
    }

    #[test]
    fn method_lists() {
        assert_eq!(Method::parse_list("all").unwrap(), Method::ALL.to_vec());
        assert_eq!(Method::parse_list("uniform,ours").unwrap(), vec![Method::Ours, Method::Uniform]);
        assert!(Method::parse_list("nope").is_err());
    }

    #[test]
    fn rows_and_replay_determinism() {
        let c = StreamConfig {
            deterministic: true,
            ..cfg(Method::ALL.to_vec())
        };
        let stream = c.source.load().unwrap();
        let a = run_benchmark(&c, &stream).unwrap();
        assert_eq!(a.rows.len(), 5 * 4);
        for m in Method::ALL {
            let ts: Vec<u64> = a.rows_for(m).map(|r| r.t).collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
        let csv = a.to_csv_string().unwrap();
        assert!(csv.starts_with("t,method,coreset_size,insert_us,solve_us,cost,feasible\n"));
        assert_eq!(csv, run_benchmark(&c, &stream).unwrap().to_csv_string().unwrap());
        let window: WeightedPointSet = ingest::renumber(&stream)[120..200].iter().cloned().collect();
        for r in a.rows.iter().filter(|r| r.t == 200) {
            assert!(r.solution.verify(&window, 1).unwrap());
        }
    }

    #[test]
    fn uniform_keeps_group_mass() {
        let stream = cfg(vec![]).source.load().unwrap();
        let s = uniform_sample(&stream, 30, 1);
        assert_eq!(s.len(), 60);
        let exact: WeightedPointSet = stream.iter().cloned().collect();
        for g in [1u64, 2] {
            let m = |set: &WeightedPointSet| set.iter().filter(|p| p.groups.0 == g).map(|p| p.weight).sum::<f64>();
            assert!((m(&s) - m(&exact)).abs() < 1e-9);
        }
    }
}
