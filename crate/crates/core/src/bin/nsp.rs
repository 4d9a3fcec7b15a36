use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsp_core::harness::{
    exit_code, parse_config, run_experiment, write_outputs, Experiment, RunConfig, CONFIG_HELP, EXIT_ASSERTION,
    EXIT_CONFIG, EXIT_OK,
};
use nsp_core::NspError;

#[derive(Parser)]
#[command(
    name = "nsp",
    version,
    about = "Navier-Stokes-Poisson experiments on a periodic box",
    after_long_help = CONFIG_HELP,
    after_help = "Run with --help for the configuration keys and defaults.\n\
                  Exit codes: 0 ok, 1 assertion failure, 2 config error, 3 numerical abort.\n\
                  NSP_THREADS caps the worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full nonlinear run with energy reports.
    Run(Common),
    /// Homogeneous linear reference run with damping margins.
    Linear(Common),
    /// Trajectory distances between truncation levels n, 2n, ...
    Refine(Common),
    /// Difference between runs from data and perturbed data.
    Perturb(Common),
    /// Littlewood-Paley and constant checks on a random ensemble.
    CheckLemmas(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exit with status 1 when any assertion fails.
    #[arg(long)]
    assert: bool,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Common) -> Result<RunConfig, NspError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| NspError::Io {
            path: p.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn threads() -> Result<(), String> {
    let Ok(v) = std::env::var("NSP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("NSP_THREADS = `{v}` is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Run(a) => (Experiment::Run, a),
        Command::Linear(a) => (Experiment::Linear, a),
        Command::Refine(a) => (Experiment::Refine, a),
        Command::Perturb(a) => (Experiment::Perturb, a),
        Command::CheckLemmas(a) => (Experiment::CheckLemmas, a),
    };
    if let Err(msg) = threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let cfg = match load(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let mode = if args.assert { "enforced" } else { "reported" };
    println!("nsp {}: assertions ({mode}):", experiment.name());
    for a in experiment.assertions() {
        println!("  - {a}");
    }
    let out = match run_experiment(experiment, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    for line in &out.summary {
        println!("{line}");
    }
    for a in &out.assertions {
        let tag = if a.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {}", a.name, a.detail);
    }
    match write_outputs(&out, &cfg.output_dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    }
    if args.assert && !out.all_passed() {
        return ExitCode::from(EXIT_ASSERTION as u8);
    }
    ExitCode::from(EXIT_OK as u8)
}
