use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use equidistlab_cli::selftest::{selftest, Tolerances};
use equidistlab_cli::{run_experiment, write_outputs, CliError, Command, ExitStatus, ExperimentConfig, RunOptions};

/// Exact image cosets, Weyl sums and orbit closures for polynomial maps.
///
/// Exit codes: 0 pass, 1 tolerance failure, 2 usage or config error,
/// 3 budget exhausted, 4 predicted/empirical closure mismatch.
#[derive(Debug, Parser)]
#[command(name = "equidistlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Weyl-sum table and equidistribution verdict.
    Weyl(ExperimentArgs),
    /// Predicted versus empirical image closure.
    Closure(ExperimentArgs),
    /// Van der Corput inequality trials.
    Vdc(ExperimentArgs),
    /// Constant-derivative decay bound.
    Constderiv(ExperimentArgs),
    /// Value frequencies of a homomorphism into a finite group.
    Homo(ExperimentArgs),
    /// Orbit closure in the windowed shift space.
    Orbit(ExperimentArgs),
    /// Ergodic averages from several starting points.
    Ergodic(ExperimentArgs),
    /// Run the bundled acceptance criteria.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and the CSV table; stdout gets the JSON otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Decimal digits every phase must be accurate to.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Multiplies every numeric threshold; 0 makes the tolerance criteria fail.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
}

fn experiment(command: Command, args: &ExperimentArgs) -> Result<ExitStatus, CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let opts = RunOptions {
        threads: args.threads,
        precision: args.precision,
        seed: args.seed,
    };
    let report = run_experiment(&config, command, &opts)?;
    match &args.out {
        Some(dir) => {
            write_outputs(&report, dir)?;
            eprintln!("{}", report.summary);
        }
        None => println!("{}", report.to_json()),
    }
    Ok(report.status)
}

fn run_selftest(args: &SelftestArgs) -> Result<ExitStatus, CliError> {
    if !(args.tolerance_scale >= 0.0 && args.tolerance_scale.is_finite()) {
        return Err(CliError::Config("tolerance-scale: must be a finite nonnegative number".into()));
    }
    let tol = Tolerances::default().scaled(args.tolerance_scale);
    let results: Vec<_> = if args.only.is_empty() {
        selftest(&tol, args.seed)
    } else {
        args.only
            .iter()
            .map(|&id| equidistlab_cli::selftest::run_criterion(id, &tol, args.seed))
            .collect()
    };
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria passed", results.len());
    Ok(ExitStatus::from_outcome(passed == results.len(), false))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Sub::Weyl(a) => experiment(Command::Weyl, a),
        Sub::Closure(a) => experiment(Command::Closure, a),
        Sub::Vdc(a) => experiment(Command::Vdc, a),
        Sub::Constderiv(a) => experiment(Command::Constderiv, a),
        Sub::Homo(a) => experiment(Command::Homo, a),
        Sub::Orbit(a) => experiment(Command::Orbit, a),
        Sub::Ergodic(a) => experiment(Command::Ergodic, a),
        Sub::Selftest(a) => run_selftest(a),
    };
    let status = outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.status()
    });
    ExitCode::from(status.code() as u8)
}
