//! `coalcircle`: run the circle coalescent experiments from the command line.
//!
//! Every subcommand appends an [`ExperimentRecord`] to the results file and
//! prints a short summary. Exit status is 0 on success, 1 on invalid input and
//! 2 when `--check` finds a reference value out of tolerance.

mod plot;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalcircle::continuum::{
    estimate_duality_gap, estimate_scaling_exponent, simulate_block_history, AnnihilatingState, DEFAULT_DT,
};
use coalcircle::formulas::{
    absorbed_position_cdf, exit_high_cdf, exit_low_cdf, expected_block_count, pair_meeting_cdf, theta,
};
use coalcircle::harness::{
    append_jsonl, run_experiment, run_replications, Estimate, ExperimentRecord, ExperimentSpec, Series,
    DEFAULT_MASTER_SEED,
};
use coalcircle::lattice::{check_duality_exact, LatticeConfig};
use coalcircle::lookdown::{dissimilarity_profile, LookdownState, TypeMode};
use coalcircle::stats::{ks_one_sample_atoms, mean_se};
use coalcircle::tree::{build_dendrogram, capacity_estimate, compare_to_cantor, Gauge, UltrametricMatrix};
use coalcircle::{CirclePos, IntervalSet, SeedSpec, TAU};

use plot::{emit_plot, PlotKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] coalcircle::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid(msg.into()))
}

#[derive(Parser, Debug)]
#[command(name = "coalcircle", version, about = "Coalescing Brownian motions on the circle: formulas and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed for every random stream.
    #[arg(long, global = true, env = "COALCIRCLE_SEED", default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Number of Monte Carlo replications.
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Time step of the particle simulations.
    #[arg(long, global = true, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Time point; may be repeated.
    #[arg(long = "t", global = true)]
    t: Vec<f64>,
    /// Number of particles or lattice sites.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Jump rate on the lattice or intensity of the look-down system.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Gauge exponent; may be repeated.
    #[arg(long, global = true)]
    beta: Vec<f64>,
    /// Write the record here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of the written record.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also draw an SVG plot at this path.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Exit with status 2 if a reference value is missed.
    #[arg(long, global = true)]
    check: bool,
    /// JSON-lines file every record is appended to.
    #[arg(long, global = true, default_value = "results.jsonl")]
    results: PathBuf,
    /// Worker threads for replications; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Jacobi theta function at u.
    Theta {
        #[arg(long, required = true)]
        u: Vec<f64>,
    },
    /// Expected number of blocks at each --t, started from infinitely many particles.
    ExpectedBlocks,
    /// Distribution of the meeting time of two uniform particles; simulated too with --reps.
    PairCdf,
    /// Monte Carlo check of the coalescing/annihilating duality.
    DualityCircle {
        /// Starting point of a coalescing particle; may be repeated or comma separated.
        #[arg(long = "a", required = true, value_delimiter = ',')]
        a: Vec<f64>,
        /// Arc as start:length; may be repeated or separated by `;`.
        #[arg(long = "b", required = true, value_delimiter = ';')]
        b: Vec<String>,
    },
    /// Exact duality check between coalescing walks and the voter model on a cycle.
    DualityLattice,
    /// Mean block count and sum of squared frequencies from n uniform particles.
    Blocks,
    /// Covering-number dimension of one simulated coalescent tree.
    Dimension {
        /// Also write the tree's coalescence times here as lower-triangular CSV.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Exit law and arc length of annihilating interval endpoints.
    Annihilating {
        /// Arc as start:length; may be repeated or separated by `;`. Defaults to one arc of length π.
        #[arg(long = "b", value_delimiter = ';')]
        b: Vec<String>,
    },
    /// Look-down system: dissimilarity, or type-1 mass with --two-type.
    Lookdown {
        /// Two types, type 1 on the arcs given by --b.
        #[arg(long)]
        two_type: bool,
        /// Arcs carrying type 1, as start:length; may be repeated or separated by `;`.
        #[arg(long = "b", value_delimiter = ';')]
        b: Vec<String>,
    },
    /// Capacity of a coalescent tree against the middle-half Cantor set.
    Capacity {
        /// Lower-triangular coalescence-time CSV; a tree is simulated otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Cantor construction level used for the comparison.
        #[arg(long)]
        level: Option<u32>,
    },
    /// Log-log slope of the pair-meeting CDF near zero.
    Scaling,
}

/// What a subcommand produced.
struct Outcome {
    record: ExperimentRecord,
    summary: Vec<String>,
    /// `Some(false)` when a reference value was missed.
    check: Option<bool>,
    plot: Option<PlotKind>,
}

impl Outcome {
    fn new(record: ExperimentRecord, summary: Vec<String>) -> Self {
        Self {
            record,
            summary,
            check: None,
            plot: None,
        }
    }
}

fn est(name: impl Into<String>, value: f64, standard_error: f64) -> Estimate {
    Estimate {
        name: name.into(),
        value,
        standard_error,
    }
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn record(name: &str, o: &Common, parameters: BTreeMap<String, String>, reps: u64) -> ExperimentRecord {
    ExperimentRecord::new(name, parameters, o.seed, reps)
}

fn stamp(mut r: ExperimentRecord, start: Instant) -> ExperimentRecord {
    r.runtime_ms = start.elapsed().as_millis() as u64;
    r
}

impl Common {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid("dt must be > 0");
        }
        if self.t.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return invalid("t must be ≥ 0");
        }
        if self.reps == Some(0) {
            return invalid("reps must be ≥ 1");
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return invalid("lambda must be > 0");
            }
        }
        if self.workers == 0 {
            return invalid("workers must be ≥ 1");
        }
        if self.out.is_some() && self.format.is_none() {
            return invalid("--out needs --format csv or --format json");
        }
        Ok(())
    }

    fn times(&self, default: &[f64]) -> Vec<f64> {
        if self.t.is_empty() {
            default.to_vec()
        } else {
            self.t.clone()
        }
    }

    fn one_time(&self, default: f64) -> Result<f64, CliError> {
        match self.t.as_slice() {
            [] => Ok(default),
            [t] => Ok(*t),
            _ => invalid("this subcommand takes a single --t"),
        }
    }

    fn reps(&self, default: u64) -> u64 {
        self.reps.unwrap_or(default)
    }

    fn seed(&self) -> SeedSpec {
        SeedSpec::new(self.seed, 0)
    }
}

fn parse_arcs(specs: &[String]) -> Result<IntervalSet, CliError> {
    let raw = specs
        .iter()
        .map(|s| {
            let (a, l) = s
                .split_once(':')
                .ok_or_else(|| CliError::Invalid(format!("arcs are start:length, got `{s}`")))?;
            let a: f64 = a.trim().parse().map_err(|_| CliError::Invalid(format!("bad arc start `{a}`")))?;
            let l: f64 = l.trim().parse().map_err(|_| CliError::Invalid(format!("bad arc length `{l}`")))?;
            if !(0.0..=TAU).contains(&l) {
                return invalid(format!("arc length must lie in [0, 2π], got {l}"));
            }
            Ok((a, a + l))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(IntervalSet::normalize(&raw)?)
}

fn cmd_theta(u: &[f64]) -> Result<Outcome, CliError> {
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    for &x in u {
        let v = theta(x)?;
        estimates.push(est(format!("theta@{x}"), v, 0.0));
        summary.push(format!("theta({x}) = {v}"));
    }
    Ok(Outcome::new(
        ExperimentRecord::analytic("theta", params(&[("u", join(u))]), estimates),
        summary,
    ))
}

fn cmd_expected_blocks(o: &Common) -> Result<Outcome, CliError> {
    let ts = o.times(&[0.05, 0.1, 0.5, 1.0]);
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    let mut points = Vec::new();
    for &t in &ts {
        let v = expected_block_count(t)?;
        estimates.push(est(format!("E[N]@{t}"), v, 0.0));
        summary.push(format!("E[N({t})] = {v}"));
        if v.is_finite() {
            points.push((t, v));
        }
    }
    let mut r = ExperimentRecord::analytic("expected-blocks", params(&[("t", join(&ts))]), estimates);
    r.series.push(Series {
        name: "expected-blocks".into(),
        points,
    });
    let mut out = Outcome::new(r, summary);
    out.plot = Some(PlotKind::Trace);
    Ok(out)
}

fn cmd_pair_cdf(o: &Common) -> Result<Outcome, CliError> {
    let ts = o.times(&[0.1, 0.5, 1.0, 2.0, 4.0]);
    let series: Vec<f64> = ts.iter().map(|&t| pair_meeting_cdf(t)).collect::<Result<_, _>>()?;
    let mut summary: Vec<String> = ts.iter().zip(&series).map(|(t, v)| format!("P(T12 <= {t}) = {v}")).collect();
    let Some(reps) = o.reps else {
        let estimates = ts.iter().zip(&series).map(|(t, &v)| est(format!("series@{t}"), v, 0.0)).collect();
        let mut r = ExperimentRecord::analytic("pair-cdf", params(&[("t", join(&ts))]), estimates);
        r.series.push(Series {
            name: "series".into(),
            points: ts.iter().copied().zip(series.iter().copied()).collect(),
        });
        let mut out = Outcome::new(r, summary);
        out.plot = Some(PlotKind::Cdf);
        return Ok(out);
    };
    let parameters = params(&[("t", join(&ts)), ("dt", o.dt.to_string())]);
    let mut r = run_experiment(&ExperimentSpec {
        name: "pair-meeting".into(),
        parameters,
        reps,
        master_seed: o.seed,
        workers: o.workers,
    })?;
    let mut worst: f64 = 0.0;
    for (e, (&t, &f)) in r.estimates.iter().zip(ts.iter().zip(&series)) {
        worst = worst.max((e.value - f).abs());
        summary.push(format!("empirical P(T12 <= {t}) = {} ± {}", e.value, e.standard_error));
    }
    r.estimates
        .extend(ts.iter().zip(&series).map(|(t, &v)| est(format!("series@{t}"), v, 0.0)));
    summary.push(format!("max |empirical - series| = {worst:.4} (tolerance 0.01)"));
    let mut out = Outcome::new(r, summary);
    out.check = Some(worst <= 0.01);
    out.plot = Some(PlotKind::Cdf);
    Ok(out)
}

fn cmd_duality_circle(o: &Common, a: &[f64], b: &[String]) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let a_pts = a.iter().map(|&x| CirclePos::new(x)).collect::<coalcircle::Result<Vec<_>>>()?;
    let b_set = parse_arcs(b)?;
    let t = o.one_time(0.1)?;
    let reps = o.reps(10_000);
    let e = estimate_duality_gap(&a_pts, &b_set, t, reps, o.dt, o.seed())?;
    let parameters = params(&[
        ("a", join(a)),
        ("b", b.join(";")),
        ("t", t.to_string()),
        ("dt", o.dt.to_string()),
    ]);
    let mut r = record("duality-circle", o, parameters, reps);
    r.estimates = vec![
        est("lhs", e.lhs, e.lhs_se),
        est("rhs", e.rhs, e.rhs_se),
        est("gap", e.gap(), e.joint_se),
    ];
    let summary = vec![
        format!("P(W^A(t) in B) = {} ± {}", e.lhs, e.lhs_se),
        format!("Q(A in V^B(t)) = {} ± {}", e.rhs, e.rhs_se),
        format!("gap = {} ({:.2} joint SE, tolerance 3)", e.gap(), e.gap() / e.joint_se.max(f64::MIN_POSITIVE)),
    ];
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some(e.gap() <= 3.0 * e.joint_se);
    Ok(out)
}

fn cmd_duality_lattice(o: &Common) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let n = o.n.unwrap_or(3);
    let lambda = o.lambda.unwrap_or(1.0);
    let ts = o.times(&[1.0]);
    let cfg = LatticeConfig::new(n, lambda)?;
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    let mut worst: f64 = 0.0;
    for &t in &ts {
        let rep = check_duality_exact(&cfg, t)?;
        worst = worst.max(rep.max_error);
        estimates.push(est(format!("max_error@{t}"), rep.max_error, 0.0));
        summary.push(format!(
            "N={n} lambda={lambda} t={t}: max error {:e} at C={:?}, D={:?}",
            rep.max_error, rep.worst_c, rep.worst_d
        ));
    }
    let parameters = params(&[("N", n.to_string()), ("lambda", lambda.to_string()), ("t", join(&ts))]);
    let mut r = record("duality-lattice", o, parameters, 0);
    r.estimates = estimates;
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some(worst <= 1e-8);
    Ok(out)
}

fn cmd_blocks(o: &Common) -> Result<Outcome, CliError> {
    let n = o.n.unwrap_or(1024);
    if n == 0 {
        return invalid("n must be ≥ 1");
    }
    let ts = o.times(&[0.05, 0.1, 0.5, 1.0]);
    let parameters = params(&[("n", n.to_string()), ("t", join(&ts)), ("dt", o.dt.to_string())]);
    let r = run_experiment(&ExperimentSpec {
        name: "blocks".into(),
        parameters,
        reps: o.reps(200),
        master_seed: o.seed,
        workers: o.workers,
    })?;
    let mut ok = true;
    let mut summary = Vec::new();
    for (e, &t) in r.estimates.iter().zip(&ts) {
        let want = expected_block_count(t)?;
        let tol = (3.0 * e.standard_error).max(0.02 * want);
        ok &= (e.value - want).abs() <= tol;
        summary.push(format!("mean N({t}) = {} ± {} (reference {want}, tolerance {tol:.4})", e.value, e.standard_error));
    }
    let mut out = Outcome::new(r, summary);
    out.check = Some(ok);
    out.plot = Some(PlotKind::Trace);
    Ok(out)
}

fn cmd_dimension(o: &Common, matrix: Option<&Path>) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let n = o.n.unwrap_or(2000);
    if n < 2 {
        return invalid("n must be ≥ 2");
    }
    let horizon = o.one_time(0.2)?;
    if horizon <= 0.0 {
        return invalid("t must be > 0");
    }
    let tr = simulate_block_history(n, horizon, &[], o.dt, o.seed())?;
    let d = tr.dendrogram();
    if let Some(path) = matrix {
        let f = File::create(path).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", path.display())))?;
        d.ultrametric().write_lower_csv(f)?;
    }
    let hi = (horizon / 2.0).min(0.1);
    let lo = (hi * 1e-3).max(o.dt);
    let eps: Vec<f64> = (0..=12).map(|i| lo * (hi / lo).powf(i as f64 / 12.0)).collect();
    let fit = d.dimension_estimate(&eps)?;
    let parameters = params(&[("n", n.to_string()), ("t", horizon.to_string()), ("dt", o.dt.to_string())]);
    let mut r = record("dimension", o, parameters, 1);
    r.estimates = vec![est("slope", fit.slope, fit.slope_se), est("r_squared", fit.r_squared, 0.0)];
    r.series.push(Series {
        name: "covering-number".into(),
        points: fit.points.iter().map(|&(e, c)| (e, c as f64)).collect(),
    });
    let summary = vec![
        format!("covering-number slope = {} ± {}", fit.slope, fit.slope_se),
        format!("95% band [{:.4}, {:.4}], reference 0.5", fit.band.0, fit.band.1),
    ];
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some((0.45..=0.55).contains(&fit.slope));
    out.plot = Some(PlotKind::Loglog);
    Ok(out)
}

fn cmd_annihilating(o: &Common, b: &[String]) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let b_set = if b.is_empty() {
        IntervalSet::single_arc(0.0, std::f64::consts::PI)?
    } else {
        parse_arcs(b)?
    };
    let t = o.one_time(1.0)?;
    let reps = o.reps(2000);
    let runs = run_replications(reps, o.seed, o.workers, |s| {
        let mut v = AnnihilatingState::new(&b_set);
        v.run_until(t, o.dt, &mut s.rng())?;
        let set = v.interval_set();
        Ok((set == IntervalSet::FullCircle, set == IntervalSet::Empty, v.occupied_length()))
    })?;
    let flag = |f: fn(&(bool, bool, f64)) -> bool| -> (f64, f64) {
        mean_se(&runs.iter().map(|r| f64::from(u8::from(f(r)))).collect::<Vec<_>>())
    };
    let (full, full_se) = flag(|r| r.0);
    let (empty, empty_se) = flag(|r| r.1);
    let lengths: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let (len, len_se) = mean_se(&lengths);
    let parameters = params(&[("b", b_set.raw().iter().map(|(a, e)| format!("{a}:{}", e - a)).collect::<Vec<_>>().join(";")), ("t", t.to_string()), ("dt", o.dt.to_string())]);
    let mut r = record("annihilating", o, parameters, reps);
    r.estimates = vec![
        est("full", full, full_se),
        est("empty", empty, empty_se),
        est("length", len, len_se),
    ];
    let mut summary = vec![
        format!("P(full circle) = {full} ± {full_se}"),
        format!("P(empty) = {empty} ± {empty_se}"),
        format!("mean occupied length = {len} ± {len_se}"),
    ];
    let mut check = None;
    if let [arc] = b_set.arcs() {
        let x = arc.length();
        let want_full = exit_high_cdf(x, t)?;
        let want_empty = exit_low_cdf(x, t)?;
        let binom = |p: f64| (p * (1.0 - p) / reps as f64).sqrt();
        let cdf = |y: f64| absorbed_position_cdf(x, y, t).unwrap_or(f64::NAN);
        let left = |y: f64| {
            if y <= 0.0 {
                0.0
            } else if y >= TAU {
                1.0 - want_full
            } else {
                cdf(y)
            }
        };
        let ks = ks_one_sample_atoms(&lengths, cdf, left);
        summary.push(format!("reference P(full) = {want_full}, P(empty) = {want_empty}"));
        summary.push(format!("Kolmogorov distance of the length law = {ks:.4} (tolerance 0.02)"));
        r.estimates.push(est("ks_length", ks, 0.0));
        check = Some(
            (full - want_full).abs() <= 3.0 * full_se.max(binom(want_full))
                && (empty - want_empty).abs() <= 3.0 * empty_se.max(binom(want_empty))
                && ks <= 0.02,
        );
        let mut sorted = lengths.clone();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len() as f64;
        r.series.push(Series {
            name: "length-ecdf".into(),
            points: sorted.iter().enumerate().step_by((sorted.len() / 200).max(1)).map(|(i, &y)| (y, (i + 1) as f64 / k)).collect(),
        });
    } else {
        summary.push("no closed-form reference for several arcs".into());
    }
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = check;
    Ok(out)
}

fn cmd_lookdown(o: &Common, two_type: bool, b: &[String]) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let lambda = o.lambda.unwrap_or(200.0);
    let t = o.one_time(1.0)?;
    if two_type {
        let b_set = if b.is_empty() {
            IntervalSet::single_arc(0.0, std::f64::consts::PI)?
        } else {
            parse_arcs(b)?
        };
        let reps = o.reps(20);
        let mode = TypeMode::TwoType(b_set.clone());
        let masses = run_replications(reps, o.seed, o.workers, |s| {
            let mut rng = s.rng();
            let mut st = LookdownState::init(lambda, &mode, &mut rng)?;
            st.run_until(t, o.dt, &mut rng)?;
            st.two_type_mass()
        })?;
        let (m, se) = mean_se(&masses);
        // the dual arc length is a bounded martingale
        let want = b_set.total_length() / TAU;
        let parameters = params(&[("lambda", lambda.to_string()), ("t", t.to_string()), ("dt", o.dt.to_string()), ("mode", "two-type".into())]);
        let mut r = record("lookdown", o, parameters, reps);
        r.estimates = vec![est("two_type_mass", m, se)];
        let summary = vec![format!("mean type-1 mass = {m} ± {se} (reference {want})")];
        let mut out = Outcome::new(stamp(r, start), summary);
        // a finite system also fluctuates in its particle count
        out.check = Some((m - want).abs() <= 3.0 * se.max(1.0 / reps as f64));
        return Ok(out);
    }
    let n = o.n.unwrap_or(2);
    if n < 2 {
        return invalid("n must be ≥ 2");
    }
    let reps = o.reps(10_000);
    let prof = dissimilarity_profile(lambda, t, n, reps, o.dt, o.seed())?;
    let want = 1.0 - pair_meeting_cdf(t)?;
    let parameters = params(&[("lambda", lambda.to_string()), ("t", t.to_string()), ("n", n.to_string()), ("dt", o.dt.to_string())]);
    let mut r = record("lookdown", o, parameters, reps);
    r.estimates = prof.iter().map(|d| est(format!("D{}", d.n), d.value, d.se)).collect();
    let mut summary: Vec<String> = prof.iter().map(|d| format!("D{} = {} ± {}", d.n, d.value, d.se)).collect();
    summary.push(format!("reference D2 = {want}"));
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some((prof[0].value - want).abs() <= 3.0 * prof[0].se);
    Ok(out)
}

fn cmd_capacity(o: &Common, input: Option<&Path>, level: Option<u32>) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let betas = if o.beta.is_empty() {
        vec![0.3, 0.4, 0.45]
    } else {
        o.beta.clone()
    };
    let (d, source) = match input {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", p.display())))?;
            let m = UltrametricMatrix::read_lower_csv(BufReader::new(f))?;
            (build_dendrogram(&m)?, p.display().to_string())
        }
        None => {
            let n = o.n.unwrap_or(256);
            if n < 2 {
                return invalid("n must be ≥ 2");
            }
            let horizon = o.one_time(1.0)?;
            if horizon <= 0.0 {
                return invalid("t must be > 0");
            }
            let tr = simulate_block_history(n, horizon, &[], o.dt, o.seed())?;
            (tr.dendrogram(), format!("simulated n={n} t={horizon}"))
        }
    };
    let cmp = compare_to_cantor(&d, &betas, level)?;
    let mut estimates = Vec::new();
    let mut summary = Vec::new();
    for (beta, row) in betas.iter().zip(&cmp.rows) {
        let cap = capacity_estimate(&d, &Gauge::power(*beta)?)?;
        estimates.push(est(format!("capacity@{beta}"), cap, 0.0));
        estimates.push(est(format!("ratio@{beta}"), row.ratio, 0.0));
        summary.push(format!("beta={beta}: capacity {cap}, ratio to Cantor level {} = {}", cmp.cantor_level, row.ratio));
    }
    let parameters = params(&[("beta", join(&betas)), ("source", source), ("dt", o.dt.to_string())]);
    let mut r = record("capacity", o, parameters, 1);
    r.estimates = estimates;
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some(cmp.within(0.5, 2.0));
    Ok(out)
}

fn cmd_scaling(o: &Common) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let ts = o.times(&(0..=20).map(|i| 10f64.powf(-4.0 + 2.0 * i as f64 / 20.0)).collect::<Vec<_>>());
    let (curve, reps) = match o.reps {
        None => (
            ts.iter().map(|&t| Ok((t, pair_meeting_cdf(t)?))).collect::<coalcircle::Result<Vec<_>>>()?,
            0,
        ),
        Some(reps) => {
            let r = run_experiment(&ExperimentSpec {
                name: "pair-meeting".into(),
                parameters: params(&[("t", join(&ts)), ("dt", o.dt.to_string())]),
                reps,
                master_seed: o.seed,
                workers: o.workers,
            })?;
            (ts.iter().copied().zip(r.estimates.iter().map(|e| e.value)).filter(|p| p.1 > 0.0).collect(), reps)
        }
    };
    let fit = estimate_scaling_exponent(&curve)?;
    let mut r = record("scaling", o, params(&[("t", join(&ts))]), reps);
    r.estimates = vec![est("slope", fit.slope, fit.slope_se), est("r_squared", fit.r_squared, 0.0)];
    r.series.push(Series {
        name: "pair-cdf".into(),
        points: curve,
    });
    let summary = vec![format!("log-log slope = {} ± {} (reference 0.50 ± 0.01)", fit.slope, fit.slope_se)];
    let mut out = Outcome::new(stamp(r, start), summary);
    out.check = Some((fit.slope - 0.5).abs() <= 0.01);
    out.plot = Some(PlotKind::Loglog);
    Ok(out)
}

fn write_record(r: &ExperimentRecord, format: Format, mut w: impl Write) -> Result<(), CliError> {
    let io = |e: io::Error| CliError::Invalid(format!("cannot write output: {e}"));
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, r).map_err(|e| CliError::Invalid(e.to_string()))?;
            writeln!(w).map_err(io)
        }
        Format::Csv => Ok(r.write_csv(w)?),
    }
}

/// Status 2 means a check was requested and missed.
fn run(cli: Cli) -> Result<u8, CliError> {
    let o = &cli.opts;
    o.validate()?;
    let out = match &cli.command {
        Command::Theta { u } => cmd_theta(u)?,
        Command::ExpectedBlocks => cmd_expected_blocks(o)?,
        Command::PairCdf => cmd_pair_cdf(o)?,
        Command::DualityCircle { a, b } => cmd_duality_circle(o, a, b)?,
        Command::DualityLattice => cmd_duality_lattice(o)?,
        Command::Blocks => cmd_blocks(o)?,
        Command::Dimension { matrix } => cmd_dimension(o, matrix.as_deref())?,
        Command::Annihilating { b } => cmd_annihilating(o, b)?,
        Command::Lookdown { two_type, b } => cmd_lookdown(o, *two_type, b)?,
        Command::Capacity { input, level } => cmd_capacity(o, input.as_deref(), *level)?,
        Command::Scaling => cmd_scaling(o)?,
    };

    append_jsonl(&o.results, &out.record)?;
    match (&o.out, o.format) {
        (Some(path), Some(f)) => {
            let file = File::create(path).map_err(|e| CliError::Invalid(format!("cannot create {}: {e}", path.display())))?;
            write_record(&out.record, f, file)?;
        }
        (None, Some(f)) => write_record(&out.record, f, io::stdout().lock())?,
        _ => {}
    }
    if o.format.is_none() || o.out.is_some() {
        for line in &out.summary {
            println!("{line}");
        }
    }
    if let Some(path) = &o.svg {
        let kind = out
            .plot
            .ok_or_else(|| CliError::Invalid(format!("{} has no plot", out.record.name)))?;
        emit_plot(&out.record, kind, path)?;
    }
    if o.check {
        match out.check {
            Some(true) => eprintln!("check passed"),
            Some(false) => {
                eprintln!("check failed");
                return Ok(2);
            }
            None => eprintln!("nothing to check"),
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
