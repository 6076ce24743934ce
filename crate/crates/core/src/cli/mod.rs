//! The `sbpack` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 internal invariant
//! failure, 4 resource guard.

mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::engine::{
    run_stream, run_timed, InitialState, SampleOptions, Scenario, StreamRun, TraceSample,
    DEFAULT_TOP_CONFIGS,
};
use crate::error::Error;
use crate::model::PackingInstance;
use crate::oracle::{exact_offline_opt, ItemMultiset};
use crate::policies::PolicyKind;
use crate::wastelp::classify;

pub use output::{configs_csv, fmt_real, levels_csv, Clock, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "sbpack", version, about = "Online stochastic bin packing toolkit")]
struct Cli {
    /// Random seed (overrides the scenario seed for `simulate`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Output directory for CSV files and manifests.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the waste LP and classify the distribution.
    Classify(InstanceArgs),
    /// Pack a stream of i.i.d. items without departures.
    Pack(PackArgs),
    /// Run a timed simulation with departures from a scenario file.
    Simulate(SimulateArgs),
    /// Run a scenario over policies, arrival rates and seeds.
    Sweep(SweepArgs),
    /// Exact offline optimum for a small list of items.
    Opt(OptArgs),
}

#[derive(Debug, Args, Serialize)]
struct InstanceArgs {
    #[arg(long)]
    capacity: u32,
    /// Comma-separated item sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<u32>,
    /// Comma-separated probabilities, one per size.
    #[arg(long, value_delimiter = ',', required = true)]
    probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum ScheduleArg {
    Fixed,
    Anytime,
}

#[derive(Debug, Args, Serialize)]
struct PackArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// pd-quad, pd-exp, ss or bf.
    #[arg(long)]
    policy: String,
    /// Penalty schedule of the PD policies.
    #[arg(long, value_enum, default_value = "anytime")]
    schedule: ScheduleArg,
    /// Number of items.
    #[arg(long)]
    n: u64,
    /// Sample period in items (0: final sample only).
    #[arg(long, default_value_t = 1000)]
    snapshot: u64,
    #[arg(long, default_value = "pack")]
    prefix: String,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    policy: String,
    #[arg(long, default_value = "simulate")]
    prefix: String,
    /// Configurations reported per sample.
    #[arg(long, default_value_t = DEFAULT_TOP_CONFIGS)]
    top_configs: usize,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    policies: Vec<String>,
    /// Arrival rates; every phase rate and the initial state scale with
    /// `lambda / first-phase rate`.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    seeds: Vec<u64>,
    /// Waste threshold, as a fraction of lambda, for the recovery time.
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_CONFIGS)]
    top_configs: usize,
    /// Worker threads (0: rayon default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args, Serialize)]
struct OptArgs {
    #[arg(long)]
    capacity: u32,
    /// Comma-separated `size:count` pairs.
    #[arg(long, value_delimiter = ',', required = true)]
    counts: Vec<String>,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("i/o error: {e}"))
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ExplosionGuard { .. } => 4,
        Error::IllegalPlacement(_)
        | Error::UnknownBin(_)
        | Error::UnknownItem { .. }
        | Error::NumericalFailure(_)
        | Error::Invariant(_) => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, &argv) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, argv: &[String]) -> Result<(), Failure> {
    match &cli.command {
        Command::Classify(a) => cmd_classify(cli, a),
        Command::Pack(a) => cmd_pack(cli, a, argv),
        Command::Simulate(a) => cmd_simulate(cli, a, argv),
        Command::Sweep(a) => cmd_sweep(cli, a, argv),
        Command::Opt(a) => cmd_opt(cli, a),
    }
}

fn instance(a: &InstanceArgs) -> Result<PackingInstance, Failure> {
    if a.sizes.len() != a.probs.len() {
        return Err(Failure::usage(format!(
            "{} sizes but {} probabilities",
            a.sizes.len(),
            a.probs.len()
        )));
    }
    Ok(PackingInstance::from_parts(a.capacity, &a.sizes, &a.probs)?)
}

fn cmd_classify(cli: &Cli, a: &InstanceArgs) -> Result<(), Failure> {
    let inst = instance(a)?;
    let c = classify(&inst)?;
    let sizes = inst.workload().sizes();
    let b = inst.capacity() as usize;
    let flows: Vec<(u32, usize, f64)> = c
        .solution
        .flows
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-12)
        .map(|(k, &v)| (sizes[k / b], k % b, v))
        .collect();
    if cli.json {
        let report = json!({
            "capacity": inst.capacity(),
            "sizes": sizes,
            "probs": inst.workload().probs(),
            "class": c.class.short(),
            "waste_rate": c.solution.waste_rate,
            "flows": flows.iter().map(|&(s, h, v)| json!({"size": s, "level": h, "rate": v})).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    } else {
        println!("class={} W_F={}", c.class.short(), fmt_real(c.solution.waste_rate));
        for (s, h, v) in flows {
            println!("v(size={s},level={h})={}", fmt_real(v));
        }
    }
    Ok(())
}

fn policy(name: &str, capacity: u32, horizon: Option<u64>) -> Result<PolicyKind, Failure> {
    PolicyKind::from_name(name, capacity, horizon).map_err(|e| Failure::usage(e.to_string()))
}

fn finish(cli: &Cli, manifest: &RunManifest, name: &str) -> Result<(), Failure> {
    output::write_file(&cli.out, name, &manifest.to_json())?;
    if cli.json {
        print!("{}", manifest.to_json());
    }
    Ok(())
}

fn cmd_pack(cli: &Cli, a: &PackArgs, argv: &[String]) -> Result<(), Failure> {
    let inst = instance(&a.instance)?;
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let horizon = (a.schedule == ScheduleArg::Fixed).then_some(a.n);
    let policy = policy(&a.policy, inst.capacity(), horizon)?;
    let seed = cli.seed.unwrap_or(0);
    let run = StreamRun {
        instance: inst.clone(),
        policy,
        n: a.n,
        seed,
        snapshot_every: a.snapshot,
        top_configs: 0,
    };
    let samples = run_stream(&run)?;
    let levels = format!("{}_levels.csv", a.prefix);
    output::write_file(&cli.out, &levels, &levels_csv(&samples, inst.capacity(), Clock::Items))?;
    let mut m = RunManifest::new("pack", argv, json!({"args": a, "policy": policy}), seed);
    m.outputs.push(levels);
    if !cli.json {
        let last = samples.last().expect("n >= 1");
        println!("items={} bins={} true_waste={} gap_waste={}", last.arrivals, last.bin_count, last.true_waste, last.gap_waste);
    }
    finish(cli, &m, &format!("{}_manifest.json", a.prefix))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let s = Scenario::from_json(&text)?;
    s.validate()?;
    Ok(s)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs, argv: &[String]) -> Result<(), Failure> {
    let mut scenario = load_scenario(&a.scenario)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    let policy = policy(&a.policy, scenario.capacity, None)?;
    let samples = run_timed(&scenario, &policy, SampleOptions { top_configs: a.top_configs })?;
    let m = write_timed_outputs(&cli.out, &a.prefix, &scenario, &samples)?;
    let mut manifest = RunManifest::new(
        "simulate",
        argv,
        json!({"scenario": scenario, "policy": policy, "top_configs": a.top_configs}),
        scenario.seed,
    );
    manifest.outputs = m;
    if !cli.json {
        let last = samples.last().expect("at least one sample");
        println!(
            "time={} items={} bins={} true_waste={}",
            fmt_real(last.time),
            last.item_count,
            last.bin_count,
            last.true_waste
        );
    }
    finish(cli, &manifest, &format!("{}_manifest.json", a.prefix))
}

fn write_timed_outputs(
    dir: &Path,
    prefix: &str,
    scenario: &Scenario,
    samples: &[TraceSample],
) -> Result<Vec<String>, Failure> {
    let levels = format!("{prefix}_levels.csv");
    let configs = format!("{prefix}_configs.csv");
    output::write_file(dir, &levels, &levels_csv(samples, scenario.capacity, Clock::Time))?;
    output::write_file(dir, &configs, &configs_csv(samples))?;
    Ok(vec![levels, configs])
}

/// The scenario with arrival rates, and the initial state, scaled so that
/// the first phase runs at `lambda`.
pub fn scale_scenario(base: &Scenario, lambda: f64, seed: u64) -> Scenario {
    let factor = lambda / base.phases[0].arrival_rate;
    let mut s = base.clone();
    s.seed = seed;
    for p in &mut s.phases {
        p.arrival_rate *= factor;
    }
    s.initial = match &base.initial {
        InitialState::Empty => InitialState::Empty,
        InitialState::ExplicitBins(bins) => InitialState::ExplicitBins(
            bins.iter()
                .map(|b| {
                    let mut b = b.clone();
                    b.count = (b.count as f64 * factor).round() as u64;
                    b
                })
                .collect(),
        ),
        InitialState::PerfectPackingSample { expected_items } => {
            InitialState::PerfectPackingSample { expected_items: expected_items * factor }
        }
    };
    s
}

/// Summary statistics of one timed run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    /// Mean true waste over samples in the final 20% of the horizon.
    pub steady_true_waste: f64,
    pub steady_gap_waste: f64,
    /// First sample time with `true_waste < threshold * lambda`.
    pub time_to_threshold: Option<f64>,
}

pub fn summarize(samples: &[TraceSample], horizon: f64, lambda: f64, threshold: f64) -> RunSummary {
    let tail: Vec<&TraceSample> = samples.iter().filter(|s| s.time >= 0.8 * horizon).collect();
    let n = tail.len().max(1) as f64;
    RunSummary {
        steady_true_waste: tail.iter().map(|s| s.true_waste as f64).sum::<f64>() / n,
        steady_gap_waste: tail.iter().map(|s| s.gap_waste as f64).sum::<f64>() / n,
        time_to_threshold: samples
            .iter()
            .find(|s| (s.true_waste as f64) < threshold * lambda)
            .map(|s| s.time),
    }
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs, argv: &[String]) -> Result<(), Failure> {
    if a.policies.is_empty() || a.lambdas.is_empty() || a.seeds.is_empty() {
        return Err(Failure::usage("policies, lambdas and seeds must all be non-empty"));
    }
    if let Some(l) = a.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Failure::usage(format!("arrival rate {l} must be positive")));
    }
    let base = load_scenario(&a.scenario)?;
    let policies: Vec<PolicyKind> = a
        .policies
        .iter()
        .map(|p| policy(p, base.capacity, None))
        .collect::<Result<_, _>>()?;
    let mut jobs = Vec::new();
    for (pi, name) in a.policies.iter().enumerate() {
        for &lambda in &a.lambdas {
            for &seed in &a.seeds {
                jobs.push((pi, name.as_str(), lambda, seed));
            }
        }
    }
    let work = |&(pi, name, lambda, seed): &(usize, &str, f64, u64)| {
        let scenario = scale_scenario(&base, lambda, seed);
        let prefix = format!("{name}_lambda{}_seed{seed}", fmt_real(lambda));
        let samples = run_timed(&scenario, &policies[pi], SampleOptions { top_configs: a.top_configs })?;
        let files = write_timed_outputs(&cli.out, &prefix, &scenario, &samples)?;
        Ok::<_, Failure>((files, summarize(&samples, scenario.horizon, lambda, a.threshold)))
    };
    let results: Vec<Result<_, Failure>> = if a.jobs == 0 {
        jobs.par_iter().map(work).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(a.jobs)
            .build()
            .map_err(|e| Failure::usage(e.to_string()))?
            .install(|| jobs.par_iter().map(work).collect())
    };

    let mut summary = String::from("policy,lambda,seed,status,steady_true_waste,steady_gap_waste,time_to_threshold\n");
    let mut manifest = RunManifest::new(
        "sweep",
        argv,
        json!({"scenario": base, "policies": policies, "lambdas": a.lambdas, "seeds": a.seeds,
               "threshold": a.threshold, "top_configs": a.top_configs}),
        a.seeds[0],
    );
    let mut worst = 0;
    for (&(_, name, lambda, seed), r) in jobs.iter().zip(&results) {
        match r {
            Ok((files, s)) => {
                manifest.outputs.extend(files.iter().cloned());
                summary.push_str(&format!(
                    "{name},{},{seed},ok,{},{},{}\n",
                    fmt_real(lambda),
                    fmt_real(s.steady_true_waste),
                    fmt_real(s.steady_gap_waste),
                    s.time_to_threshold.map(fmt_real).unwrap_or_default()
                ));
            }
            Err(f) => {
                worst = worst.max(f.code);
                summary.push_str(&format!("{name},{},{seed},failed,,,\n", fmt_real(lambda)));
                manifest.failures.push(json!({
                    "policy": name, "lambda": lambda, "seed": seed,
                    "exit_code": f.code, "error": f.message,
                }));
            }
        }
    }
    output::write_file(&cli.out, "summary.csv", &summary)?;
    manifest.outputs.push("summary.csv".into());
    finish(cli, &manifest, "sweep_manifest.json")?;
    if !cli.json {
        print!("{summary}");
    }
    if worst != 0 {
        return Err(Failure {
            code: worst,
            message: format!("{} of {} runs failed", manifest.failures.len(), jobs.len()),
        });
    }
    Ok(())
}

fn parse_counts(pairs: &[String]) -> Result<Vec<(u32, u64)>, Failure> {
    pairs
        .iter()
        .map(|p| {
            let (s, c) = p
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("expected size:count, got '{p}'")))?;
            let size = s.trim().parse().map_err(|_| Failure::usage(format!("bad size '{s}'")))?;
            let count = c.trim().parse().map_err(|_| Failure::usage(format!("bad count '{c}'")))?;
            Ok((size, count))
        })
        .collect()
}

fn cmd_opt(cli: &Cli, a: &OptArgs) -> Result<(), Failure> {
    let items = ItemMultiset::new(&parse_counts(&a.counts)?);
    let opt = exact_offline_opt(&items, a.capacity)?;
    if cli.json {
        println!("{}", json!({"capacity": a.capacity, "bins": opt.min_bins, "waste": opt.waste}));
    } else {
        println!("bins={} waste={}", opt.min_bins, opt.waste);
    }
    Ok(())
}
