//! Reproducible Monte Carlo experiments.
//!
//! Replication `r` of an experiment with master seed `s` always draws from
//! `SeedSpec::new(s, r)`, whichever worker runs it, and results are collected
//! in replication order, so records do not depend on the worker count.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{AnnihilatingState, CoalescingState, DEFAULT_DT};
use crate::error::{invalid, Error, Result};
use crate::lattice::{simulate_coalescing_rw, simulate_voter, LatticeConfig, SiteSet};
use crate::lookdown::{dissimilarity_profile, LookdownState, TypeMode};
use crate::model::{CirclePos, IntervalSet, SeedSpec};
use crate::stats::mean_se;

/// Seed used when none is given; acceptance runs use it too.
pub const DEFAULT_MASTER_SEED: u64 = 271_828;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub standard_error: f64,
}

/// Named `(x, y)` points kept alongside the estimates for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub master_seed: u64,
    pub reps: u64,
    pub estimates: Vec<Estimate>,
    #[serde(default)]
    pub series: Vec<Series>,
    pub runtime_ms: u64,
    pub timestamp: String,
}

impl ExperimentRecord {
    /// An empty record stamped with the current time.
    pub fn new(name: &str, parameters: BTreeMap<String, String>, master_seed: u64, reps: u64) -> Self {
        Self {
            name: name.to_string(),
            parameters,
            master_seed,
            reps,
            estimates: Vec::new(),
            series: Vec::new(),
            runtime_ms: 0,
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    /// A record for a deterministic computation.
    pub fn analytic(name: &str, parameters: BTreeMap<String, String>, estimates: Vec<Estimate>) -> Self {
        Self {
            estimates,
            ..Self::new(name, parameters, 0, 0)
        }
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    /// True when everything except timing agrees.
    pub fn same_result(&self, other: &Self) -> bool {
        self.name == other.name
            && self.parameters == other.parameters
            && self.master_seed == other.master_seed
            && self.reps == other.reps
            && self.estimates == other.estimates
            && self.series == other.series
    }

    /// CSV with one row per estimate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment", "master_seed", "reps", "estimate", "value", "standard_error"])?;
        for e in &self.estimates {
            w.write_record([
                self.name.clone(),
                self.master_seed.to_string(),
                self.reps.to_string(),
                e.name.clone(),
                e.value.to_string(),
                e.standard_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn append_jsonl(path: &Path, record: &ExperimentRecord) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let f = std::fs::File::open(path)?;
    BufReader::new(f)
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return invalid(format!("need 0 <= k <= n and n >= 1, got k = {k}, n = {n}"));
    }
    if !(z >= 0.0 && z.is_finite()) {
        return invalid("z must be >= 0");
    }
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}

/// Run `f` for replications `0..reps` and return the outputs in order.
///
/// With `workers > 1` the replications are spread over a dedicated thread pool.
pub fn run_replications<T, F>(reps: u64, master_seed: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(SeedSpec) -> Result<T> + Sync + Send,
{
    if reps == 0 {
        return invalid("reps must be >= 1");
    }
    let job = |r: u64| f(SeedSpec::new(master_seed, r));
    if workers <= 1 {
        return (0..reps).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(|| (0..reps).into_par_iter().map(job).collect())
}

/// Column-wise mean and standard error; each column is summed in sorted
/// order so the result does not depend on replication order.
pub fn aggregate(names: &[String], rows: &[Vec<f64>]) -> Vec<Estimate> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (value, standard_error) = mean_se(&col);
            Estimate {
                name: name.clone(),
                value,
                standard_error,
            }
        })
        .collect()
}

/// A replicable random experiment.
pub trait Experiment: Send + Sync {
    /// Names of the per-replication outputs, in order.
    fn outputs(&self) -> Vec<String>;
    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>>;
    /// Series derived from the aggregated estimates, for plotting.
    fn series(&self, _estimates: &[Estimate]) -> Vec<Series> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub reps: u64,
    pub master_seed: u64,
    pub workers: usize,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRecord> {
    if spec.reps == 0 {
        return invalid("reps must be >= 1");
    }
    let exp = build_experiment(&spec.name, &spec.parameters)?;
    let start = Instant::now();
    let rows = run_replications(spec.reps, spec.master_seed, spec.workers, |s| exp.replicate(s))?;
    let estimates = aggregate(&exp.outputs(), &rows);
    let series = exp.series(&estimates);
    Ok(ExperimentRecord {
        name: spec.name.clone(),
        parameters: spec.parameters.clone(),
        master_seed: spec.master_seed,
        reps: spec.reps,
        estimates,
        series,
        runtime_ms: start.elapsed().as_millis() as u64,
        timestamp: chrono::Utc::now().to_rfc3339(),
    })
}

/// Names accepted by [`build_experiment`].
pub const EXPERIMENTS: &[&str] = &[
    "pair-meeting",
    "blocks",
    "duality-circle",
    "annihilating",
    "lookdown",
    "dissimilarity",
    "lattice-coalescing",
    "voter",
];

struct Params<'a>(&'a BTreeMap<String, String>);

impl Params<'_> {
    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{v}` as a number"))),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{v}` as a count"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.0.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{s}`")))
                })
                .collect(),
        }
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            invalid(format!("{key} must be > 0"))
        }
    }

    fn times(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let ts = self.list(key, default)?;
        if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return invalid(format!("{key} must be a non-empty list of times >= 0"));
        }
        Ok(ts)
    }

    /// Arcs written as `start:length` separated by `;`.
    fn arcs(&self, key: &str, default: &str) -> Result<IntervalSet> {
        let text = self.0.get(key).map(String::as_str).unwrap_or(default);
        let raw = text
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                let (a, l) = s
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidArgument(format!("{key}: arcs are start:length, got `{s}`")))?;
                let a: f64 = a.trim().parse().map_err(|_| Error::InvalidArgument(format!("{key}: bad start `{a}`")))?;
                let l: f64 = l.trim().parse().map_err(|_| Error::InvalidArgument(format!("{key}: bad length `{l}`")))?;
                Ok((a, a + l))
            })
            .collect::<Result<Vec<_>>>()?;
        IntervalSet::normalize(&raw)
    }
}

fn flag(b: bool) -> f64 {
    f64::from(u8::from(b))
}

fn time_names(prefix: &str, ts: &[f64]) -> Vec<String> {
    ts.iter().map(|t| format!("{prefix}@{t}")).collect()
}

struct PairMeeting {
    ts: Vec<f64>,
    dt: f64,
}

impl Experiment for PairMeeting {
    fn outputs(&self) -> Vec<String> {
        time_names("cdf", &self.ts)
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let mut rng = seed.rng();
        let mut s = CoalescingState::uniform(2, &mut rng)?;
        let horizon = self.ts.iter().cloned().fold(0.0, f64::max);
        s.run_until(horizon, self.dt, &mut rng)?;
        let hit = s.merges().first().map(|m| m.time);
        Ok(self.ts.iter().map(|&t| flag(hit.is_some_and(|h| h <= t))).collect())
    }

    fn series(&self, est: &[Estimate]) -> Vec<Series> {
        vec![Series {
            name: "empirical".into(),
            points: self.ts.iter().zip(est).map(|(&t, e)| (t, e.value)).collect(),
        }]
    }
}

struct Blocks {
    n: usize,
    ts: Vec<f64>,
    dt: f64,
}

impl Experiment for Blocks {
    fn outputs(&self) -> Vec<String> {
        let mut v = time_names("N", &self.ts);
        v.extend(time_names("sumF2", &self.ts));
        v
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let horizon = self.ts.iter().cloned().fold(0.0, f64::max);
        let tr = crate::continuum::simulate_block_history(self.n, horizon.max(f64::MIN_POSITIVE), &self.ts, self.dt, seed)?;
        // the trace sorts its grid; report in the order requested
        let lookup = |t: f64| tr.grid.iter().position(|&g| g == t).expect("grid time present");
        let sums = tr.sum_of_squares();
        let mut out: Vec<f64> = self.ts.iter().map(|&t| tr.counts[lookup(t)] as f64).collect();
        out.extend(self.ts.iter().map(|&t| sums[lookup(t)]));
        Ok(out)
    }

    fn series(&self, est: &[Estimate]) -> Vec<Series> {
        vec![Series {
            name: "mean-blocks".into(),
            points: self.ts.iter().zip(est).map(|(&t, e)| (t, e.value)).collect(),
        }]
    }
}

struct DualityCircle {
    a: Vec<CirclePos>,
    b: IntervalSet,
    t: f64,
    dt: f64,
}

impl Experiment for DualityCircle {
    fn outputs(&self) -> Vec<String> {
        vec!["lhs".into(), "rhs".into()]
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let mut rng = seed.derive(0).rng();
        let mut w = CoalescingState::new(&self.a)?;
        w.run_until(self.t, self.dt, &mut rng)?;
        let lhs = w.positions().iter().all(|&x| self.b.contains(x));
        let mut rng = seed.derive(1).rng();
        let mut v = AnnihilatingState::new(&self.b);
        v.run_until(self.t, self.dt, &mut rng)?;
        let set = v.interval_set();
        let rhs = self.a.iter().all(|&x| set.contains(x));
        Ok(vec![flag(lhs), flag(rhs)])
    }
}

struct Annihilating {
    b: IntervalSet,
    t: f64,
    dt: f64,
}

impl Experiment for Annihilating {
    fn outputs(&self) -> Vec<String> {
        vec!["full".into(), "empty".into(), "length_fraction".into()]
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let mut v = AnnihilatingState::new(&self.b);
        v.run_until(self.t, self.dt, &mut seed.rng())?;
        let set = v.interval_set();
        Ok(vec![
            flag(set == IntervalSet::FullCircle),
            flag(set == IntervalSet::Empty),
            v.occupied_length() / crate::model::TAU,
        ])
    }
}

struct Lookdown {
    lambda: f64,
    t: f64,
    dt: f64,
    mode: TypeMode,
}

impl Experiment for Lookdown {
    fn outputs(&self) -> Vec<String> {
        vec!["particle_count".into(), "type_count".into(), "two_type_mass".into()]
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let mut rng = seed.rng();
        let mut s = LookdownState::init(self.lambda, &self.mode, &mut rng)?;
        s.run_until(self.t, self.dt, &mut rng)?;
        Ok(vec![
            s.particle_count() as f64,
            s.type_count() as f64,
            s.two_type_mass().unwrap_or(f64::NAN),
        ])
    }
}

struct Dissimilarity {
    lambda: f64,
    t: f64,
    n: usize,
    dt: f64,
}

impl Experiment for Dissimilarity {
    fn outputs(&self) -> Vec<String> {
        (2..=self.n).map(|k| format!("D{k}")).collect()
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let prof = dissimilarity_profile(self.lambda, self.t, self.n, 1, self.dt, seed)?;
        Ok(prof.iter().map(|d| d.value).collect())
    }
}

struct LatticeChain {
    voter: bool,
    cfg: LatticeConfig,
    start: SiteSet,
    t: f64,
}

impl Experiment for LatticeChain {
    fn outputs(&self) -> Vec<String> {
        vec!["size".into(), "site0".into()]
    }

    fn replicate(&self, seed: SeedSpec) -> Result<Vec<f64>> {
        let mut rng = seed.rng();
        let out = if self.voter {
            simulate_voter(self.start, &self.cfg, self.t, &mut rng)?
        } else {
            simulate_coalescing_rw(self.start, &self.cfg, self.t, &mut rng)?
        };
        Ok(vec![out.len() as f64, flag(out.contains(0))])
    }
}

/// Look up a registered experiment and parse its parameters.
pub fn build_experiment(name: &str, params: &BTreeMap<String, String>) -> Result<Box<dyn Experiment>> {
    let p = Params(params);
    let dt = p.positive("dt", DEFAULT_DT)?;
    Ok(match name {
        "pair-meeting" => Box::new(PairMeeting {
            ts: p.times("t", &[1.0])?,
            dt,
        }),
        "blocks" => {
            let n = p.usize("n", 1024)?;
            if n == 0 {
                return invalid("n must be >= 1");
            }
            Box::new(Blocks {
                n,
                ts: p.times("t", &[0.1])?,
                dt,
            })
        }
        "duality-circle" => {
            let a = p
                .list("a", &[0.0])?
                .into_iter()
                .map(CirclePos::new)
                .collect::<Result<Vec<_>>>()?;
            if a.is_empty() {
                return invalid("a must be non-empty");
            }
            CoalescingState::new(&a)?;
            Box::new(DualityCircle {
                a,
                b: p.arcs("b", "0:3.141592653589793")?,
                t: p.times("t", &[0.1])?[0],
                dt,
            })
        }
        "annihilating" => {
            let len = p.f64("length", std::f64::consts::PI)?;
            Box::new(Annihilating {
                b: IntervalSet::single_arc(0.0, len)?,
                t: p.times("t", &[1.0])?[0],
                dt,
            })
        }
        "lookdown" => {
            let mode = match params.get("mode").map(String::as_str).unwrap_or("diffuse") {
                "diffuse" => TypeMode::Diffuse,
                "two-type" => TypeMode::TwoType(p.arcs("b", "0:3.141592653589793")?),
                other => return invalid(format!("unknown mode `{other}`")),
            };
            Box::new(Lookdown {
                lambda: p.positive("lambda", 200.0)?,
                t: p.times("t", &[1.0])?[0],
                dt,
                mode,
            })
        }
        "dissimilarity" => {
            let n = p.usize("n", 2)?;
            if n < 2 {
                return invalid("n must be >= 2");
            }
            Box::new(Dissimilarity {
                lambda: p.positive("lambda", 200.0)?,
                t: p.times("t", &[1.0])?[0],
                n,
                dt,
            })
        }
        "lattice-coalescing" | "voter" => {
            let cfg = LatticeConfig::new(p.usize("N", 3)?, p.positive("lambda", 1.0)?)?;
            let sites: Vec<usize> = p.list("sites", &[0.0])?.iter().map(|&x| x as usize).collect();
            let start = SiteSet::from_sites(&sites)?;
            if name == "lattice-coalescing" && start.is_empty() {
                return invalid("sites must be non-empty");
            }
            Box::new(LatticeChain {
                voter: name == "voter",
                cfg,
                start,
                t: p.times("t", &[1.0])?[0],
            })
        }
        other => return Err(Error::UnknownExperiment(other.to_string())),
    })
}
