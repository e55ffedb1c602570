use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonlocal_lab::experiment::{run_scenario, sweep, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "nonlocal-lab",
    version,
    about = "Nonlocal diffusion and aggregation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Flatness of the fractional Laplacian of (1-y²)_+^{σ/2}
    Getoor(RunArgs),
    /// Linear fractional heat kernel and the explicit s = 1/2 fit
    HeatKernel(RunArgs),
    /// Power-law tail exponent of the heat kernel
    TailFit(RunArgs),
    /// Fixed number of porous-flow steps from a compact bump
    Evolve(RunArgs),
    /// Rescaled flow: distance to the stationary profile and entropy
    Rescaled(RunArgs),
    /// Flow started on the explicit self-similar family
    BarenblattTrack(RunArgs),
    /// Exponential envelope of the flow
    Propagation(RunArgs),
    /// Decay exponent of max u and mass-doubling ratio
    SmoothingFit(RunArgs),
    /// One step of the porous model with nonlinear diffusion
    Model1Contrast(RunArgs),
    /// Stationary obstacle problem against the explicit profile
    Obstacle(RunArgs),
    /// Second-order swarm relaxing to a flock
    SwarmFlock(RunArgs),
    /// Relaxed particle minimizer and its radial profile
    DiskMinimizer(RunArgs),
    /// Euler-Lagrange conditions of a relaxed ensemble
    ElCheck(RunArgs),
    /// Run a scenario over a list of parameter values
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<scenario>)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel scenario runs in a sweep
    #[arg(long)]
    workers: Option<usize>,
    /// Override one parameter; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (Scenario, RunArgs) {
        match self {
            Command::Getoor(a) => (Scenario::Getoor, a),
            Command::HeatKernel(a) => (Scenario::HeatKernel, a),
            Command::TailFit(a) => (Scenario::TailFit, a),
            Command::Evolve(a) => (Scenario::Evolve, a),
            Command::Rescaled(a) => (Scenario::Rescaled, a),
            Command::BarenblattTrack(a) => (Scenario::BarenblattTrack, a),
            Command::Propagation(a) => (Scenario::Propagation, a),
            Command::SmoothingFit(a) => (Scenario::SmoothingFit, a),
            Command::Model1Contrast(a) => (Scenario::Model1Contrast, a),
            Command::Obstacle(a) => (Scenario::Obstacle, a),
            Command::SwarmFlock(a) => (Scenario::SwarmFlock, a),
            Command::DiskMinimizer(a) => (Scenario::DiskMinimizer, a),
            Command::ElCheck(a) => (Scenario::ElCheck, a),
            Command::Sweep(a) => (Scenario::Sweep, a),
        }
    }
}

fn config(scenario: Scenario, args: RunArgs) -> nonlocal_lab::Result<ExperimentConfig> {
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    let mut cfg = ExperimentConfig::new(scenario, out);
    if let Some(path) = &args.config {
        cfg = cfg.with_file(path)?;
    }
    if let Some(seed) = args.seed {
        cfg = cfg.with("seed", seed);
    }
    if let Some(w) = args.workers {
        cfg = cfg.with("workers", w);
    }
    for pair in &args.set {
        cfg = cfg.set(pair)?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(command) = cli.command else {
        use clap::CommandFactory;
        let _ = Cli::command().print_help();
        return ExitCode::SUCCESS;
    };
    let (scenario, args) = command.split();
    let cfg = match config(scenario, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if scenario == Scenario::Sweep {
        return match sweep(&cfg) {
            Ok(table) => {
                println!(
                    "{} runs written to {}",
                    table.rows.len(),
                    cfg.output_dir.display()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }
    match run_scenario(&cfg) {
        Ok(out) => {
            for v in &out.verdicts {
                println!("{v}");
            }
            println!("outputs in {}", cfg.output_dir.display());
            if out.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
