use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use facetflow::scenario::{self, Mode, Scenario};
use facetflow::Error;

#[derive(Parser)]
#[command(name = "facetflow", version, about = "Facet dynamics for total variation flow with dynamic boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify facets: Cahn-Hoffman field, λ, μ and case tag
    Classify(Common),
    /// Evolve a monotone profile with the exact facet tracker
    Evolve(Common),
    /// Run the implicit minimizing-movement solver
    Pde(Common),
    /// Run the solver and the exact tracker and report their differences
    Compare(Common),
    /// Boundary onset at t = 0
    Onset(Common),
    /// Detachment phase diagram over (r0, ρ, τ)
    Sweep(Common),
    /// Run every acceptance criterion
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file (optional for selftest)
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized suites; overrides the scenario's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stdout
    #[arg(long)]
    quiet: bool,
}

fn load(mode: Mode, c: &Common) -> Result<Scenario, Error> {
    match &c.scenario {
        Some(p) => scenario::load_scenario(p, Some(mode)),
        None if mode == Mode::Selftest => scenario::parse_scenario(r#"{"mode": "selftest"}"#, None),
        None => Err(Error::Validation("--scenario is required".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, c) = match &cli.command {
        Command::Classify(c) => (Mode::Classify, c),
        Command::Evolve(c) => (Mode::EvolveExact, c),
        Command::Pde(c) => (Mode::EvolvePde, c),
        Command::Compare(c) => (Mode::Compare, c),
        Command::Onset(c) => (Mode::Onset, c),
        Command::Sweep(c) => (Mode::Sweep, c),
        Command::Selftest(c) => (Mode::Selftest, c),
    };
    let outcome = load(mode, c).and_then(|sc| scenario::run(&sc, &c.out, c.seed));
    match outcome {
        Ok(o) => {
            if !c.quiet {
                for line in &o.summary {
                    println!("{line}");
                }
                println!("wrote {} files to {}", o.files.len(), c.out.display());
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("facetflow: one or more checks failed (see report.json)");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("facetflow: {e}");
            ExitCode::from(scenario::exit_code(&e) as u8)
        }
    }
}
