use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cidor_core::config::ScenarioConfig;
use cidor_core::metrics::{self, RunRow};
use cidor_core::sim::{SimError, World};
use cidor_core::sweep::{self, Axis};

/// Content-centric DTN simulator.
#[derive(Parser)]
#[command(name = "cidor-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write run.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write an event trace to trace.log.
        #[arg(long)]
        trace: bool,
    },
    /// Run the cartesian product of varied keys over several seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// KEY=V1,V2,... (repeatable).
        #[arg(long)]
        vary: Vec<String>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate run CSVs found in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

/// Failure with the process exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        err: err.into(),
    }
}

fn runtime(err: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        err: err.into(),
    }
}

fn sim_failure(err: SimError) -> Failure {
    let code = match err {
        SimError::Config(_) | SimError::Workload(_) => 2,
        SimError::Invariant { .. } => 3,
        SimError::Trace(_) => 1,
    };
    Failure {
        code,
        err: err.into(),
    }
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::load(path)
        .with_context(|| format!("config {}", path.display()))
        .map_err(usage)
}

fn write_csv(path: &Path, rows: &[RunRow]) -> Result<(), Failure> {
    let f = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(runtime)?;
    metrics::write_runs(BufWriter::new(f), rows).map_err(runtime)
}

fn write_aggregate(path: &Path, rows: &[RunRow]) -> Result<usize, Failure> {
    let aggs = metrics::aggregate_groups(rows).map_err(runtime)?;
    let f = File::create(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(runtime)?;
    metrics::write_aggregates(BufWriter::new(f), &aggs).map_err(runtime)?;
    Ok(aggs.len())
}

fn run(config: &Path, seed: Option<u64>, out: &Path, trace: bool) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    fs::create_dir_all(out).map_err(runtime)?;
    fs::write(out.join("config.effective"), cfg.echo()).map_err(runtime)?;
    let mut world = World::from_config(&cfg, cfg.seed).map_err(sim_failure)?;
    if trace {
        let f = File::create(out.join("trace.log")).map_err(runtime)?;
        world.set_trace(Box::new(BufWriter::new(f)));
    }
    let summary = world.run().map_err(sim_failure)?;
    let row = summary.row();
    write_csv(&out.join("run.csv"), std::slice::from_ref(&row))?;
    println!(
        "{} seed {}: response ratio {:.4}, latency {:.1} s, delivery ratio {:.4}, cost {:.2}",
        row.router,
        row.seed,
        row.response_ratio,
        row.avg_latency_s,
        row.delivery_ratio,
        row.avg_cost
    );
    Ok(())
}

fn sweep_cmd(config: &Path, vary: &[String], seeds: u64, out: &Path) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let axes = vary
        .iter()
        .map(|v| Axis::parse(v))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let points = sweep::points(&cfg, &axes).map_err(usage)?;
    fs::create_dir_all(out).map_err(runtime)?;
    fs::write(out.join("config.effective"), cfg.echo()).map_err(runtime)?;
    let rows = sweep::run_points(&points, cfg.seed, seeds.max(1)).map_err(sim_failure)?;
    write_csv(&out.join("runs.csv"), &rows)?;
    let groups = write_aggregate(&out.join("aggregate.csv"), &rows)?;
    println!(
        "{} runs, {} points -> {}",
        rows.len(),
        groups,
        out.display()
    );
    Ok(())
}

fn report(input: &Path) -> Result<(), Failure> {
    let mut files: Vec<PathBuf> = Vec::new();
    let mut dirs = vec![input.to_path_buf()];
    while let Some(d) = dirs.pop() {
        let entries = fs::read_dir(&d)
            .with_context(|| format!("reading {}", d.display()))
            .map_err(usage)?;
        for e in entries {
            let p = e.map_err(runtime)?.path();
            if p.is_dir() {
                dirs.push(p);
            } else if matches!(
                p.file_name().and_then(|n| n.to_str()),
                Some("run.csv" | "runs.csv")
            ) {
                files.push(p);
            }
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(usage(anyhow::anyhow!(
            "no run.csv or runs.csv under {}",
            input.display()
        )));
    }
    let mut rows = Vec::new();
    for f in &files {
        let file = File::open(f).map_err(runtime)?;
        rows.extend(
            metrics::read_runs(file)
                .with_context(|| format!("parsing {}", f.display()))
                .map_err(usage)?,
        );
    }
    let aggs = metrics::aggregate_groups(&rows).map_err(runtime)?;
    metrics::write_aggregates(io::stdout().lock(), &aggs).map_err(runtime)?;
    let path = input.join("aggregate.csv");
    write_aggregate(&path, &rows)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            out,
            trace,
        } => run(config, *seed, out, *trace),
        Command::Sweep {
            config,
            vary,
            seeds,
            out,
        } => sweep_cmd(config, vary, *seeds, out),
        Command::Report { input } => report(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
