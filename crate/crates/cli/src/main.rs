use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use microsets_cli::config::*;
use microsets_cli::{run, Failure};

#[derive(Parser)]
#[command(name = "microsets", version, about = "Finite-depth microset experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Seed; defaults to MICROSETS_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Artifact path; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    max_depth: Option<u32>,
    #[arg(long, global = true)]
    max_trials: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Build a prefix of ψ(x) and check its block densities
    Realize(RealizeArgs),
    /// Survival statistics of constant-exponent percolation on K
    Percolate(PercolateArgs),
    /// Survival and conditional slope of K ∩ Γ(β) at chosen depths
    Hawkes(HawkesArgs),
    /// Ball-tree family on a finite net
    Family(FamilyArgs),
    /// Grid counts of K(x)^d, or packing and covering counts of a point set
    Dims(DimsArgs),
    /// Zoomed view (2^m K + u) ∩ [0,1]^d
    Zoom(ZoomArgs),
    /// Run a JSON experiment config
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(cli: Cli) -> Result<ExperimentConfig, Failure> {
    let mut config = match cli.command {
        Sub::Run { config } => {
            let text = fs::read_to_string(&config).map_err(|e| Failure::Validation(format!("{}: {e}", config.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("config: {e}")))?
        }
        sub => ExperimentConfig {
            command: match sub {
                Sub::Realize(a) => Command::Realize(a),
                Sub::Percolate(a) => Command::Percolate(a),
                Sub::Hawkes(a) => Command::Hawkes(a),
                Sub::Family(a) => Command::Family(a),
                Sub::Dims(a) => Command::Dims(a),
                Sub::Zoom(a) => Command::Zoom(a),
                Sub::Run { .. } => unreachable!(),
            },
            seed: None,
            out: None,
            limits: Limits::default(),
        },
    };
    // flags override the file
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.out.is_some() {
        config.out = cli.out;
    }
    if let Some(d) = cli.max_depth {
        config.limits.max_depth = d;
    }
    if let Some(t) = cli.max_trials {
        config.limits.max_trials = t;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let config = load(cli)?;
    let outcome = run(&config)?;
    match &config.out {
        Some(path) => {
            fs::write(path, &outcome.artifact).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            println!("{}", outcome.summary);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.artifact.as_bytes());
            eprintln!("{}", outcome.summary);
        }
    }
    if !outcome.violations.is_empty() {
        return Err(Failure::Invariant(outcome.violations.join("; ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("microsets: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
