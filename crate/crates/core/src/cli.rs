//! Command-line entry point: `run`, `compare`, and `solve` subcommands.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 runtime.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, preset, ScenarioConfig, Strategy};
use crate::report::{
    read_instance, replicate, to_json_bytes, EpisodeOutcome, Report, Summary,
};
use crate::rng::{substream, Stream};
use crate::vrpp::{solve_exact, solve_heuristic, validate_solution, DEFAULT_EXACT_SITE_LIMIT};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser)]
#[command(
    name = "hazard-dispatch",
    version,
    about = "Round-based hazard-mitigation dispatch simulator and VRPP solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write per-episode trace and summary files.
    Run(RunArgs),
    /// Run several strategies over a seed range and write a comparison report.
    Compare(CompareArgs),
    /// Solve a standalone VRPP instance file.
    Solve(SolveArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario preset: scenario1 | scenario2 | scenario3.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a TOML scenario config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single seed (default: the config's seed).
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Inclusive seed range A..B, e.g. 0..99.
    #[arg(long)]
    seeds: Option<String>,
    /// Heuristic solver restarts per routing problem.
    #[arg(long)]
    budget: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Strategy to run (repeatable; default: the config's strategy).
    #[arg(long = "strategy", value_enum)]
    strategies: Vec<CliStrategy>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Strategies to compare (repeat at least twice).
    #[arg(long = "strategy", value_enum)]
    strategies: Vec<CliStrategy>,
}

#[derive(Args)]
struct SolveArgs {
    /// VRPP instance file (JSON).
    instance: PathBuf,
    /// Force the exact solver (errors above its site limit).
    #[arg(long)]
    exact: bool,
    /// Seed for the heuristic solver.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Heuristic solver restarts.
    #[arg(long, default_value_t = 16)]
    budget: u32,
    /// Solution output path (default: <instance>.solution.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliStrategy {
    Bucb,
    Random,
    #[value(name = "round_robin")]
    RoundRobin,
    Oracle,
}

impl From<CliStrategy> for Strategy {
    fn from(s: CliStrategy) -> Self {
        match s {
            CliStrategy::Bucb => Strategy::Bucb,
            CliStrategy::Random => Strategy::Random,
            CliStrategy::RoundRobin => Strategy::RoundRobin,
            CliStrategy::Oracle => Strategy::Oracle,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    App(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::App(e)
    }
}

fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Usage(_) => EXIT_USAGE,
        CliError::App(e) => match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::TooLarge { .. } => EXIT_CONFIG,
            Error::Contract(_) | Error::Io(_) | Error::Serialize(_) => EXIT_RUNTIME,
        },
    }
}

/// Parses argv and runs the program, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Solve(args) => cmd_solve(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(err) => {
            match &err {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::App(e) => eprintln!("error: {e}"),
            }
            exit_code(&err)
        }
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<(ScenarioConfig, Vec<u64>), CliError> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => parse_config(path)?,
        (None, None) => {
            return Err(CliError::Usage("either --preset or --config is required".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(budget) = args.budget {
        config.solver_budget = budget;
        config.validate()?;
    }
    let seeds = match (args.seed, &args.seeds) {
        (Some(s), None) => vec![s],
        (None, Some(range)) => parse_seed_range(range)?,
        (None, None) => vec![config.seed],
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    Ok((config, seeds))
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>, CliError> {
    let parts: Vec<&str> = text.split("..").collect();
    let err = || CliError::Usage(format!("--seeds expects an inclusive range A..B, got {text:?}"));
    if parts.len() != 2 {
        return Err(err());
    }
    let a: u64 = parts[0].parse().map_err(|_| err())?;
    let b: u64 = parts[1].parse().map_err(|_| err())?;
    if a > b {
        return Err(err());
    }
    Ok((a..=b).collect())
}

fn strategies_or_default(
    strategies: &[CliStrategy],
    config: &ScenarioConfig,
) -> Vec<Strategy> {
    if strategies.is_empty() {
        vec![config.strategy]
    } else {
        strategies.iter().map(|&s| s.into()).collect()
    }
}

/// Writes all episode files; on any failure removes what was written.
fn write_outcomes(out_dir: &Path, outcomes: &[EpisodeOutcome]) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(Error::from)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let try_write = |written: &mut Vec<PathBuf>| -> Result<(), Error> {
        for outcome in outcomes {
            let stem = format!("{}_seed{}", outcome.strategy, outcome.seed);
            let trace_path = out_dir.join(format!("{stem}_trace.csv"));
            let mut trace = Vec::new();
            crate::report::write_trace(&mut trace, &outcome.result)?;
            std::fs::write(&trace_path, trace)?;
            written.push(trace_path);

            let summary_path = out_dir.join(format!("{stem}_summary.json"));
            let summary = Summary {
                strategy: outcome.strategy,
                seed: outcome.seed,
                metrics: outcome.result.metrics.clone(),
            };
            std::fs::write(&summary_path, to_json_bytes(&summary)?)?;
            written.push(summary_path);
        }
        Ok(())
    };
    if let Err(e) = try_write(&mut written) {
        for path in written {
            let _ = std::fs::remove_file(path);
        }
        return Err(e.into());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let (config, seeds) = load_scenario(&args.scenario)?;
    let strategies = strategies_or_default(&args.strategies, &config);
    let outcomes = replicate(&config, &strategies, &seeds)?;
    write_outcomes(&args.scenario.out, &outcomes)?;
    for outcome in &outcomes {
        let m = &outcome.result.metrics;
        println!(
            "{} seed {}: terminated round {} (cumulative hazard {:.2}, cleaning rate {:.2}, final MAE {:.3})",
            outcome.strategy, outcome.seed, m.termination_round, m.cumulative_hazard,
            m.cleaning_rate, m.final_mae,
        );
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let (config, seeds) = load_scenario(&args.scenario)?;
    let strategies = strategies_or_default(&args.strategies, &config);
    if strategies.len() < 2 {
        return Err(CliError::Usage(
            "compare needs at least two --strategy flags".into(),
        ));
    }
    let outcomes = replicate(&config, &strategies, &seeds)?;
    let report = Report::build(&outcomes);
    std::fs::create_dir_all(&args.scenario.out).map_err(Error::from)?;
    let path = args.scenario.out.join("report.json");
    std::fs::write(&path, to_json_bytes(&report).map_err(CliError::from)?).map_err(Error::from)?;
    for agg in &report.aggregates {
        println!(
            "{}: T_end {:.2} +- {:.2} (median {}), cumulative {:.2}, rate {:.2}, MAE {:.3}",
            agg.strategy,
            agg.termination_round.mean,
            agg.termination_round.std,
            agg.termination_round.median,
            agg.cumulative_hazard.mean,
            agg.cleaning_rate.mean,
            agg.final_mae.mean,
        );
    }
    if let Some(pct) = report.improvement.bucb_vs_random_pct {
        println!("bucb vs random: {pct:.1}% fewer rounds");
    }
    if let Some(pct) = report.improvement.bucb_vs_round_robin_pct {
        println!("bucb vs round_robin: {pct:.1}% fewer rounds");
    }
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let instance = read_instance(&args.instance)?;
    let solution = if args.exact {
        solve_exact(&instance, DEFAULT_EXACT_SITE_LIMIT)?
    } else {
        let mut rng = substream(args.seed, Stream::Solver);
        solve_heuristic(&instance, &mut rng, args.budget)
    };
    let violations = validate_solution(&instance, &solution);
    if !violations.is_empty() {
        return Err(CliError::App(Error::Contract(format!(
            "solver produced an infeasible solution: {violations:?}"
        ))));
    }
    let out = args
        .out
        .unwrap_or_else(|| args.instance.with_extension("solution.json"));
    std::fs::write(&out, to_json_bytes(&solution).map_err(CliError::from)?).map_err(Error::from)?;
    println!("objective {}", solution.objective);
    println!("solution written to {}", out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_range_is_inclusive() {
        assert_eq!(parse_seed_range("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seed_range("7..7").unwrap(), vec![7]);
        assert!(parse_seed_range("5..2").is_err());
        assert!(parse_seed_range("abc").is_err());
        assert!(parse_seed_range("1..2..3").is_err());
    }
}
