use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pme_lab::field_io::read_field;
use pme_lab::harness::{
    run_experiment, simulate, ExperimentConfig, SimulationConfig, SimulationKind,
};
use pme_lab::kernels::{laplace_kernel, matern_kernel, validate_admissibility, EtaRule};
use pme_lab::transport::{w2_circle_1d, w2_sinkhorn, SinkhornOptions};
use pme_lab::PeriodicGrid;

#[derive(Parser)]
#[command(
    name = "pme",
    version,
    about = "Porous medium particle method laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Matern,
    Laplace,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run { config: PathBuf },
    /// Check the admissibility properties of a kernel.
    ValidateKernel {
        #[arg(long, value_enum, default_value = "matern")]
        family: Family,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        epsilons: Vec<f64>,
        #[arg(long, default_value_t = 1.2)]
        gamma: f64,
    },
    /// Wasserstein-2 distance between two field files.
    W2 {
        a: PathBuf,
        b: PathBuf,
        /// Entropic regularisation used in d ≥ 2.
        #[arg(long)]
        reg: Option<f64>,
    },
    /// Grid aggregation solver from a simulation config.
    RunAggregation { config: PathBuf },
    /// Porous medium reference solver from a simulation config.
    RunPme { config: PathBuf },
    /// Particle solver from a simulation config.
    RunParticles { config: PathBuf },
}

fn print(value: &impl serde::Serialize) -> pme_lab::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(cmd: Command) -> pme_lab::Result<bool> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let outcome = run_experiment(&cfg)?;
            print(&outcome.summary)?;
            Ok(outcome.passed())
        }
        Command::ValidateKernel {
            family,
            s,
            dim,
            n,
            epsilons,
            gamma,
        } => {
            let spec = match family {
                Family::Matern => matern_kernel(s, dim)?,
                Family::Laplace => laplace_kernel(dim)?,
            };
            let grid = PeriodicGrid::new(dim, n)?;
            let report = validate_admissibility(&spec, &grid, &epsilons, EtaRule::Power { gamma });
            print(&report)?;
            Ok(report.all_passed())
        }
        Command::W2 { a, b, reg } => {
            let (u, v) = (read_field(a)?, read_field(b)?);
            let result = if u.grid().dim() == 1 {
                w2_circle_1d(&u, &v)?
            } else {
                let mut opts = SinkhornOptions::default();
                if let Some(r) = reg {
                    opts.reg = r;
                }
                w2_sinkhorn(&u, &v, &opts)?
            };
            print(
                &serde_json::json!({ "distance": result.distance, "method": result.method, "meta": result.meta }),
            )?;
            Ok(result.meta.converged.unwrap_or(true))
        }
        Command::RunAggregation { config } => run_simulation(config, SimulationKind::Aggregation),
        Command::RunPme { config } => run_simulation(config, SimulationKind::Pme),
        Command::RunParticles { config } => run_simulation(config, SimulationKind::Particles),
    }
}

fn run_simulation(config: PathBuf, kind: SimulationKind) -> pme_lab::Result<bool> {
    let cfg = SimulationConfig::from_path(config)?;
    let outcome = simulate(&cfg, kind)?;
    print(&outcome)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
