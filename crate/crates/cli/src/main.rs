use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use streamguard::experiment::{
    extract_to_csv, report, run_experiment, ExperimentConfig, ExperimentError, ReportError,
};
use streamguard::parallel::init_workers_from_env;
use streamguard::synth::{build_stream, load_pools, read_spec, synthetic_pools_for, write_stream};

const EXIT_USAGE: u8 = 1;
const EXIT_INGEST: u8 = 2;
const EXIT_SYNTH: u8 = 3;
const EXIT_EVAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "streamguard",
    version,
    about = "Streaming anomaly detection for IoT traffic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a pcap or packet CSV into per-window feature vectors.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Build a four-phase drift stream from a spec and sample pools.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Directory of `<pool_id>.csv` files, or `synthetic` for generated pools.
        #[arg(long)]
        pools: String,
        #[arg(long = "out")]
        output: PathBuf,
        /// Overrides the spec's shuffle seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a configured experiment and write per-run and aggregate summaries.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Print a comparison table from run or aggregate JSON files.
    Report { files: Vec<PathBuf> },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl ToString) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn experiment_failure(e: ExperimentError) -> Failure {
    let code = match &e {
        ExperimentError::Config { .. } | ExperimentError::Invalid(_) => EXIT_USAGE,
        ExperimentError::Synth(_) => EXIT_SYNTH,
        ExperimentError::Eval(_) | ExperimentError::Output { .. } => EXIT_EVAL,
    };
    fail(code, e)
}

fn cmd_extract(input: &Path, output: &Path) -> Result<(), Failure> {
    let stats = extract_to_csv(input, output).map_err(|e| fail(EXIT_INGEST, e))?;
    println!(
        "read {} packets ({} skipped), wrote {} windows to {}",
        stats.packets,
        stats.skipped,
        stats.windows,
        output.display()
    );
    Ok(())
}

fn cmd_synth(spec: &Path, pools: &str, output: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let mut spec = read_spec(spec).map_err(|e| fail(EXIT_SYNTH, e))?;
    if seed.is_some() {
        spec.shuffle_seed = seed;
    }
    let pools = if pools == "synthetic" {
        synthetic_pools_for(&spec, spec.shuffle_seed.unwrap_or(0))
    } else {
        load_pools(pools)
    }
    .map_err(|e| fail(EXIT_SYNTH, e))?;
    let stream = build_stream(&spec, &pools).map_err(|e| fail(EXIT_SYNTH, e))?;
    write_stream(output, &stream).map_err(|e| fail(EXIT_SYNTH, e))?;
    println!(
        "wrote {} samples to {}, {}",
        stream.samples.len(),
        output.display(),
        stream.schedule.to_line().trim_end()
    );
    Ok(())
}

fn cmd_run(
    config: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    reps: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::read(config).map_err(experiment_failure)?;
    if let Some(seed) = seed {
        cfg.set_seed(seed);
    }
    if let Some(reps) = reps {
        cfg.set_repetitions(reps);
    }
    let out = run_experiment(&cfg, out_dir).map_err(experiment_failure)?;
    for run in &out.runs {
        println!(
            "{} rep {:>2}: F1 {:.4}  accuracy {:.4}  drift events {}",
            run.learner,
            run.repetition,
            run.metrics.f1,
            run.metrics.accuracy,
            run.drift_events.len()
        );
    }
    if let Some(agg) = &out.aggregate {
        println!(
            "{} over {} runs: F1 {:.4} ± {:.4}",
            agg.learner, agg.runs, agg.f1.mean, agg.f1.std
        );
    }
    println!("wrote {} files to {}", out.files.len(), out_dir.display());
    Ok(())
}

fn cmd_report(files: &[PathBuf]) -> Result<(), Failure> {
    let table = report(files).map_err(|e| {
        let code = match e {
            ReportError::Empty => EXIT_USAGE,
            _ => EXIT_EVAL,
        };
        fail(code, e)
    })?;
    print!("{table}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_workers_from_env();
    let result = match &cli.command {
        Command::Extract { input, output } => cmd_extract(input, output),
        Command::Synth {
            spec,
            pools,
            output,
            seed,
        } => cmd_synth(spec, pools, output, *seed),
        Command::Run {
            config,
            out_dir,
            seed,
            reps,
        } => cmd_run(config, out_dir, *seed, *reps),
        Command::Report { files } => cmd_report(files),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
