use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pprobe_cli::campaign::Lemma;
use pprobe_cli::commands::{self, Outcome};
use pprobe_cli::config::{Format, Overrides, RunConfig};
use pprobe_cli::{exit, thread_pool, CliError};

#[derive(Parser)]
#[command(
    name = "pprobe",
    version,
    about = "Numerical probes of the pressure field of incompressible flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    #[arg(long = "box-l", global = true)]
    box_l: Option<f64>,
    #[arg(long, global = true)]
    order: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a velocity grid (DFF1) and print its divergence residual.
    Gen,
    /// Run a bound-check census: 2.1 2.2 2.3 2.4 2.5 3.1 3.2 thm1.1.
    Verify { lemma: String },
    /// Compute ∇P by the configured routes and compare them.
    Pressure,
    /// Integrate the flow and monitor the trajectory ratios.
    Simulate,
    /// Aggregate CSV outputs into plot data.
    Report { inputs: Vec<PathBuf> },
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        grid_n: cli.grid_n,
        box_l: cli.box_l,
        order: cli.order,
        out: cli.out.clone(),
        format: cli.format,
    });
    let pool = thread_pool()?;
    pool.install(|| match &cli.command {
        Command::Gen => commands::gen(&cfg),
        Command::Verify { lemma } => commands::verify(lemma.parse::<Lemma>()?, &cfg),
        Command::Pressure => commands::pressure(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Report { inputs } => commands::report(inputs, &cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(o) => {
            print!("{}", o.stdout);
            ExitCode::from(if o.passed { exit::OK } else { exit::CHECK_FAILED } as u8)
        }
        Err(e) => {
            eprintln!("pprobe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
