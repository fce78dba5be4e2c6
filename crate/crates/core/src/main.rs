use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hspde::cli::{run, EXIT_FAILURE};
use hspde::config::{parse_config, Command, ExperimentConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Kernel,
    Variance,
    Admissibility,
    Simulate,
    Continuity,
    Calibrate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Kernel => Command::Kernel,
            Cmd::Variance => Command::Variance,
            Cmd::Admissibility => Command::Admissibility,
            Cmd::Simulate => Command::Simulate,
            Cmd::Continuity => Command::Continuity,
            Cmd::Calibrate => Command::Calibrate,
        }
    }
}

/// Hermite-series kernels, isometry oracles and Monte Carlo sampling for
/// hyperbolic SPDEs with harmonic-oscillator structure.
#[derive(Debug, Parser)]
#[command(name = "hspde", version)]
struct Args {
    /// Command to run; falls back to `command` in the config.
    command: Option<Cmd>,
    /// Run configuration (flat `key = value` text).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path prefix; overrides `output.prefix`.
    #[arg(long)]
    out: Option<String>,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `numerics.tol`.
    #[arg(long)]
    tol: Option<f64>,
}

fn load(args: &Args) -> Result<ExperimentConfig, String> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text).map_err(|e| match &args.config {
        Some(path) => format!("{}: {e}", path.display()),
        None => e.to_string(),
    })?;
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.numerics.seed = seed;
    }
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err("--tol must be positive".into());
        }
        cfg.numerics.tol = Some(tol);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FAILURE as u8 } else { 0 });
        }
    };
    let cfg = match load(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    };
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    }
    let Some(command) = args.command.map(Command::from).or(cfg.command) else {
        eprintln!("error: no command given on the command line or in the config");
        return ExitCode::from(EXIT_FAILURE as u8);
    };
    let outcome = run(&cfg, command);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.code == 0 {
        println!("{}", outcome.message);
    } else {
        eprintln!("error: {}", outcome.message);
    }
    ExitCode::from(outcome.code as u8)
}
