use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use randhmc_harness::checks::run_checks;
use randhmc_harness::config::{self, ChainConfig, LemmaConfig, SweepConfig};
use randhmc_harness::error::{HarnessError, Result};
use randhmc_harness::fit::{
    fit_records, fit_rows, plot_rows, read_plot_data, summarize, write_plot_data, Axis, PLOT_HEADER,
};
use randhmc_harness::records::{read_records, write_records};
use randhmc_harness::run::{run_chain_config, write_trajectory};
use randhmc_harness::sweep::run_sweep;

#[derive(Parser)]
#[command(name = "randhmc", version, about = "Randomized-time HMC on Gaussian targets")]
struct Cli {
    /// Worker threads for replica-parallel runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the lemma-check suite; prints one JSON line per check.
    CheckLemmas {
        #[command(flatten)]
        common: Common,
        /// Run a single check by name.
        #[arg(long)]
        only: Option<String>,
    },
    /// Run one chain configuration and write per-replica records.
    RunChain {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV (default: next to --out as <stem>.trajectory.csv).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run a scaling sweep over a (d, kappa) grid.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Fit the log-log slope of median gradient evaluations along one axis.
    FitScaling {
        /// Sweep CSV or plot data.
        input: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a sweep CSV into tab-separated plot columns.
    EmitPlotData {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(HarnessError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::usage(e.to_string()))?;
    }
    match cli.command {
        Command::CheckLemmas { common, only } => check_lemmas(common, only.as_deref()),
        Command::RunChain { common, trajectory } => run_chain(common, trajectory),
        Command::Sweep { common } => sweep(common),
        Command::FitScaling { input, axis, out } => fit_scaling(&input, &axis, out.as_deref()),
        Command::EmitPlotData { input, out } => emit_plot_data(&input, out.as_deref()),
    }
}

fn load_or_default<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => config::load(p),
        None => config::parse("{}").map_err(|e| HarnessError::usage(e.to_string())),
    }
}

fn require_config<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    config::load(path.ok_or_else(|| HarnessError::usage("--config is required"))?)
}

/// Writes `body` to `path`, or stdout.
fn emit(path: Option<&Path>, body: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(|e| HarnessError::io(p, e))?);
            f.write_all(body)
                .and_then(|_| f.flush())
                .map_err(|e| HarnessError::io(p, e))
        }
        None => io::stdout()
            .write_all(body)
            .map_err(|e| HarnessError::io("<stdout>", e)),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| HarnessError::csv("<buffer>", e))?;
    Ok(buf)
}

fn check_lemmas(common: Common, only: Option<&str>) -> Result<u8> {
    let mut config: LemmaConfig = load_or_default(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let results = run_checks(&config, only)?;
    let mut body = Vec::new();
    for r in &results {
        serde_json::to_writer(&mut body, r).expect("check results serialize");
        body.push(b'\n');
    }
    emit(common.out.as_deref(), &body)?;
    Ok(if results.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn trajectory_path(out: Option<&Path>, explicit: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    let out = out.ok_or_else(|| HarnessError::usage("a thinned trajectory needs --trajectory or --out"))?;
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    Ok(out.with_file_name(format!("{stem}.trajectory.csv")))
}

fn run_chain(common: Common, trajectory: Option<PathBuf>) -> Result<u8> {
    let mut config: ChainConfig = require_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let traj_path = match config.trajectory_thin {
        Some(_) => Some(trajectory_path(common.out.as_deref(), trajectory)?),
        None if trajectory.is_some() => {
            return Err(HarnessError::usage("--trajectory needs trajectory_thin in the config"))
        }
        None => None,
    };
    let run = run_chain_config(&config)?;
    emit(common.out.as_deref(), &csv_bytes(|b| write_records(b, &run.records))?)?;
    if let (Some(path), Some(rows)) = (traj_path, run.trajectory) {
        emit(Some(&path), &csv_bytes(|b| write_trajectory(b, run.plan.d, &rows))?)?;
    }
    Ok(0)
}

fn sweep(common: Common) -> Result<u8> {
    let mut config: SweepConfig = require_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let records = run_sweep(&config)?;
    emit(common.out.as_deref(), &csv_bytes(|b| write_records(b, &records))?)?;
    Ok(0)
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| HarnessError::io(path, e))?;
    Ok(buf)
}

fn is_plot_data(bytes: &[u8]) -> bool {
    let first = BufReader::new(bytes)
        .lines()
        .next()
        .and_then(|l| l.ok())
        .unwrap_or_default();
    first.split('\t').eq(PLOT_HEADER.iter().copied())
}

fn fit_scaling(input: &Path, axis: &str, out: Option<&Path>) -> Result<u8> {
    let axis: Axis = axis.parse()?;
    let bytes = read_input(input)?;
    let fit = if is_plot_data(&bytes) {
        fit_rows(&read_plot_data(bytes.as_slice())?, axis)?
    } else {
        let records = read_records(bytes.as_slice()).map_err(|e| HarnessError::csv(input, e))?;
        fit_records(&records, axis)?
    };
    let mut body = serde_json::to_vec(&fit).expect("fit serializes");
    body.push(b'\n');
    emit(out, &body)?;
    Ok(0)
}

fn emit_plot_data(input: &Path, out: Option<&Path>) -> Result<u8> {
    let bytes = read_input(input)?;
    let records = read_records(bytes.as_slice()).map_err(|e| HarnessError::csv(input, e))?;
    let mut body = Vec::new();
    write_plot_data(&mut body, &plot_rows(&summarize(&records))).map_err(|e| HarnessError::io("<buffer>", e))?;
    emit(out, &body)?;
    Ok(0)
}
