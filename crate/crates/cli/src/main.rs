//! `lotus`: instance generation, sweeps, scoring, reports, depth transfer and
//! the invariant suite.
//!
//! Exit status is 0 on success, 1 when a check or run fails and 2 for usage or
//! configuration errors.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lotus_core::harness::{
    depth_transfer_experiment, improvement_summary, invariant_suite, read_records, run_sweep_with, score_records,
    significance_matrix, write_score_csv, SuiteOptions, SweepConfig, SweepOptions, TransferOptions, DEFAULT_ALPHA,
};
use lotus_core::optim::{lotus_optimize, LotusInitConfig, Registry, RunSettings};
use lotus_core::{HfaParams, Instance};

#[derive(Parser, Debug)]
#[command(name = "lotus", version, about = "Hybrid Fourier-autoregressive QAOA benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write weighted Erdős–Rényi instance files.
    Gen(GenArgs),
    /// Run a benchmark sweep.
    Run(RunArgs),
    /// Score every record of a result file.
    Score(ScoreArgs),
    /// Print improvement and significance tables for a result file.
    Report(ReportArgs),
    /// Evaluate an optimized schedule at other depths and compare warm starts.
    Transfer(TransferArgs),
    /// Run the invariant suite.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Number of nodes.
    #[arg(short, long)]
    n: usize,
    /// Edge probability.
    #[arg(short = 'p', long, default_value_t = 0.75)]
    density: f64,
    /// Seed of the first instance.
    #[arg(short, long, default_value_t = 0)]
    seed: u64,
    /// Instances to write, with consecutive seeds.
    #[arg(short, long, default_value_t = 1)]
    count: u64,
    /// Output file, or directory when `--count` is above 1.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON sweep config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// NDJSON result file (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "LOTUS_WORKERS")]
    workers: Option<usize>,
    /// Shots per objective evaluation.
    #[arg(long, conflicts_with = "exact")]
    shots: Option<u32>,
    /// Use exact expectations during optimization.
    #[arg(long)]
    exact: bool,
    /// Continue an interrupted sweep from its resume marker.
    #[arg(long)]
    resume: bool,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// NDJSON result file.
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// NDJSON result file.
    input: PathBuf,
    /// LOTUS mode count to compare; the smallest present by default.
    #[arg(short, long)]
    k: Option<usize>,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct TransferArgs {
    /// Instance file; otherwise one is generated from `--n`, `--density`, `--seed`.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0.75)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// HFA parameters (JSON); optimized at the source depth when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Fourier modes when optimizing.
    #[arg(short, long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 8)]
    source_depth: usize,
    /// Comma-separated target depths.
    #[arg(long, value_delimiter = ',', default_values_t = vec![8, 16, 32, 64])]
    depths: Vec<usize>,
    /// Optimizer for the source fit and the warm/cold runs.
    #[arg(long, default_value = "nelder-mead")]
    method: String,
    /// Skip the warm/cold start comparison.
    #[arg(long)]
    no_hot_start: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Corrupt one schedule before the certificate check (the suite must fail).
    #[arg(long, hide = true)]
    inject_lipschitz_violation: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

/// A failure that maps to exit status 1 rather than 2.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Transfer(a) => transfer(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain, skipping causes already included in the message above them.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use lotus_core::Error;
    if e.downcast_ref::<CheckFailed>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::InvalidParameter(_) | Error::UnknownMethod(_) | Error::InvalidGraph(_)) => 2,
        Some(Error::Io { .. } | Error::Json(_)) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn gen(a: GenArgs) -> Result<()> {
    if a.count == 0 {
        bail!(lotus_core::Error::Config("count must be at least 1".into()));
    }
    if a.count > 1 {
        fs::create_dir_all(&a.out).map_err(|e| lotus_core::Error::io(&a.out, e))?;
    }
    for i in 0..a.count {
        let seed = a.seed + i;
        let inst = Instance::generate(a.n, a.density, seed)?;
        let path = if a.count > 1 { a.out.join(format!("n{}_p{}_s{seed}.json", a.n, a.density)) } else { a.out.clone() };
        inst.save(&path)?;
        println!("{} ({} edges, W = {:.6})", path.display(), inst.graph.edges().len(), inst.graph.total_weight());
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    if let Some(out) = a.out {
        cfg.output = Some(out);
    }
    if let Some(shots) = a.shots {
        cfg.shots = shots;
    }
    if a.exact {
        cfg.shots = 0;
    }
    let opts = SweepOptions { workers: a.workers, resume: a.resume };
    let registry = Registry::default();
    cfg.validate(&registry)?;
    eprintln!(
        "{} cells x {} runs, {} shots per evaluation",
        cfg.cells().len(),
        cfg.runs_per_cell(),
        if cfg.shots == 0 { "exact".to_string() } else { cfg.shots.to_string() }
    );
    let records = run_sweep_with(&cfg, &opts, &registry)?;
    match &cfg.output {
        Some(out) => println!("{} records written to {}", records.len(), out.display()),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            for r in &records {
                serde_json::to_writer(&mut w, r)?;
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let records = read_records(&a.input)?;
    let scores = score_records(&records, a.alpha)?;
    match a.out {
        Some(path) => {
            let file = File::create(&path).map_err(|e| lotus_core::Error::io(&path, e))?;
            write_score_csv(BufWriter::new(file), &records, &scores)?;
        }
        None => write_score_csv(io::stdout().lock(), &records, &scores)?,
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let records = read_records(&a.input)?;
    let summary = improvement_summary(&records, a.k)?;
    let k = a.k.unwrap_or_else(|| records.iter().filter(|r| r.is_lotus()).map(|r| r.k).min().unwrap_or(0));
    println!("LOTUS (K = {k}) against each baseline, medians over shared cells");
    println!("positive: higher expectation, fewer evaluations");
    println!("{:<16} {:>8} {:>14} {:>14}", "baseline", "cells", "expectation %", "evaluations %");
    for s in &summary {
        println!("{:<16} {:>8} {:>+14.2} {:>+14.2}", s.baseline, s.cells, s.expectation_pct, s.iteration_pct);
    }

    let m = significance_matrix(&records, a.alpha)?;
    println!();
    println!("Wilcoxon signed-rank p-values on verified expectations (* = p < {})", a.alpha);
    let width = m.arms.iter().map(String::len).max().unwrap_or(4).max(10);
    print!("{:<width$}", "");
    for arm in &m.arms {
        print!(" {arm:>width$}");
    }
    println!();
    for (i, arm) in m.arms.iter().enumerate() {
        print!("{arm:<width$}");
        for j in 0..m.arms.len() {
            let cell = match (m.p_values[i][j], m.significant(i, j)) {
                (Some(p), Some(true)) => format!("{p:.3e}*"),
                (Some(p), _) => format!("{p:.3e}"),
                (None, _) => "n/a".to_string(),
            };
            print!(" {cell:>width$}");
        }
        println!();
    }
    Ok(())
}

fn load_params(path: &Path) -> Result<HfaParams> {
    let text = fs::read_to_string(path).map_err(|e| lotus_core::Error::io(path, e))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn transfer(a: TransferArgs) -> Result<()> {
    let inst = match &a.instance {
        Some(path) => Instance::load(path, true)?,
        None => Instance::generate(a.n, a.density, a.seed)?,
    };
    let registry = Registry::default();
    let settings = RunSettings::exact(&a.method);
    let params = match &a.params {
        Some(path) => load_params(path)?,
        None => lotus_optimize(&inst, a.source_depth, a.k, &LotusInitConfig::default(), &settings, a.seed, &registry)?.params,
    };
    let opts = TransferOptions { hot_start: !a.no_hot_start, settings, seed: a.seed, ..Default::default() };
    let rep = depth_transfer_experiment(&inst, &params, a.source_depth, &a.depths, &opts, &registry)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
        return Ok(());
    }
    println!("source depth {}: exact expectation {:.6}", rep.source_depth, rep.source_value);
    println!("{:>6} {:>12}", "depth", "expectation");
    for (p, v) in rep.depths.iter().zip(&rep.values) {
        println!("{p:>6} {v:>12.6}");
    }
    println!("{:>6} {:>6} {:>12}", "p", "p'", "|C(p)-C(p')|");
    for g in &rep.gaps {
        println!("{:>6} {:>6} {:>12.6}", g.p, g.p_next, g.gap);
    }
    if !rep.hot_start.is_empty() {
        println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}", "depth", "cold E", "warm E", "cold ev", "warm ev", "reached");
        for h in &rep.hot_start {
            println!(
                "{:>6} {:>10.5} {:>10.5} {:>10} {:>10} {:>8}",
                h.depth, h.cold_value, h.warm_value, h.cold_evaluations, h.warm_evaluations, h.warm_reached
            );
        }
    }
    Ok(())
}

fn check(a: CheckArgs) -> Result<()> {
    let rep = invariant_suite(&SuiteOptions { inject_lipschitz_violation: a.inject_lipschitz_violation });
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    } else {
        println!("{rep}");
    }
    if rep.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = rep.failures().map(|c| c.name.as_str()).collect();
        Err(CheckFailed(format!("failed checks: {}", names.join(", "))).into())
    }
}
