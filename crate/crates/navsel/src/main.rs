//! Command-line front end for the navigation policy-selection testbed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use navsel::envgen::{EnvFamily, EnvParams, OfficeParams};
use navsel::estimators::{train_tabular, Estimator, DEFAULT_R_E};
use navsel::harness::{
    generate_scenarios, precompute, report, run_deployments, write_report_csvs, CostMatrix,
    ExperimentConfig, HarnessError, ReplayCache, Scale, SelectorSpec,
};
use navsel::planner::SensingParams;
use navsel::selection::SelectorConfig;

#[derive(Parser)]
#[command(
    name = "navsel",
    about = "Frontier navigation testbed with offline alt-policy replay and constrained bandit selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenario files for one environment family.
    GenEnvs(GenEnvsArgs),
    /// Write the fixed estimator roster (nonlearned, trusting, avoiding).
    GenRoster(GenRosterArgs),
    /// Train a tabular estimator on a scenario directory.
    Train(TrainArgs),
    /// Run every (policy, scenario) trial and all alt-policy replays.
    Precompute(PrecomputeArgs),
    /// Run Monte-Carlo deployments over the precomputed tables.
    Deploy(DeployArgs),
    /// Aggregate deployment logs into CSV reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenEnvsArgs {
    /// maze_green | maze_gray | maze_random | office_base | office_diff
    #[arg(long)]
    family: String,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Maze side length (odd).
    #[arg(long, default_value_t = 17)]
    maze_size: usize,
    /// Office side length.
    #[arg(long, default_value_t = 35)]
    office_size: usize,
}

#[derive(Args)]
struct GenRosterArgs {
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of training scenario files.
    #[arg(long)]
    scenarios: PathBuf,
    /// Name recorded inside the estimator file.
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    range: f64,
    #[arg(long, default_value_t = 360)]
    n_rays: usize,
}

#[derive(Args)]
struct PrecomputeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Use the desk-scale preset regardless of the config's scale.
    #[arg(long)]
    desk: bool,
    /// Also replay each policy on its own record and verify it matches.
    #[arg(long)]
    diagonal: bool,
}

#[derive(Args)]
struct DeployArgs {
    #[arg(long)]
    config: PathBuf,
    /// ucb | constrained (overrides the config)
    #[arg(long)]
    mode: Option<String>,
    /// opt | sc | wgt (overrides the config)
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    p_short: Option<f64>,
    #[arg(long)]
    desk: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Logs root (one subdirectory per selector configuration).
    #[arg(long)]
    logs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cost matrix path; defaults to `<logs>/../matrix.json`.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenEnvs(args) => {
            let family = EnvFamily::from_slug(&args.family)?;
            let params = EnvParams {
                maze_size: (args.maze_size, args.maze_size),
                office: OfficeParams {
                    width: args.office_size,
                    height: args.office_size,
                    ..OfficeParams::default()
                },
            };
            let scenarios = generate_scenarios(family, &params, args.count, args.seed, &args.out)?;
            println!(
                "wrote {} {} scenarios to {}",
                scenarios.len(),
                family,
                args.out.display()
            );
        }
        Command::GenRoster(args) => {
            std::fs::create_dir_all(&args.out)?;
            for est in [
                Estimator::non_learned(),
                Estimator::trusting(),
                Estimator::avoiding(),
            ] {
                let path = args.out.join(format!("{}.json", est.name));
                est.save_to(&path)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Train(args) => {
            let scenarios = navsel::envgen::load_scenario_dir(&args.scenarios)?;
            let sensing = SensingParams {
                range: args.range,
                n_rays: args.n_rays,
            };
            let output = train_tabular(&scenarios, &sensing, &args.name, DEFAULT_R_E)?;
            if output.skipped_scenarios > 0 {
                eprintln!(
                    "warning: skipped {} unfinished training scenarios",
                    output.skipped_scenarios
                );
            }
            output.estimator.save_to(&args.out)?;
            println!(
                "trained '{}' on {} scenarios -> {}",
                args.name,
                scenarios.len(),
                args.out.display()
            );
        }
        Command::Precompute(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            if args.desk {
                config.scale = Scale::desk();
            }
            let (matrix, _, summary) = precompute(&config, args.diagonal)?;
            println!(
                "matrix {} policies x {} scenarios: {} trials computed ({} cached), {} replays computed ({} cached)",
                matrix.policies.len(),
                matrix.scenarios.len(),
                summary.trials_computed,
                summary.trials_cached,
                summary.replays_computed,
                summary.replays_cached,
            );
            if args.diagonal {
                println!(
                    "self-replay verification: {} mismatches",
                    summary.self_replay_mismatches
                );
            }
        }
        Command::Deploy(args) => {
            let mut config = ExperimentConfig::load(&args.config)?;
            if args.desk {
                config.scale = Scale::desk();
            }
            let mut spec: SelectorSpec = config.selector.clone();
            if let Some(mode) = args.mode {
                spec.mode = mode;
            }
            if let Some(bound) = args.bound {
                spec.bound = bound;
            }
            if let Some(p) = args.p_short {
                spec.p_short = p;
            }
            let selector: SelectorConfig = spec.to_selector_config()?;
            let matrix = CostMatrix::load(&config.matrix_path())?;
            let cache = ReplayCache::load_dir(&config.replays_dir())?;
            let logs = run_deployments(&config, &selector, &matrix, &cache)?;
            println!("wrote {} deployment logs", logs.len());
        }
        Command::Report(args) => {
            let matrix_path = args
                .matrix
                .unwrap_or_else(|| args.logs.join("..").join("matrix.json"));
            let matrix = CostMatrix::load(&matrix_path)?;
            let rep = report(&args.logs, &matrix)?;
            write_report_csvs(&rep, &args.out)?;
            for config in &rep.configs {
                let last_cost = config.avg_cost.last();
                let last_regret = config.regret.last();
                println!(
                    "{}: {} deployments, final avg cost {:.2}, final regret {:.2}",
                    config.config_label,
                    config.n_deployments,
                    last_cost.map(|p| p.mean).unwrap_or(f64::NAN),
                    last_regret.map(|p| p.mean).unwrap_or(f64::NAN),
                );
            }
            println!("reports written to {}", args.out.display());
        }
    }
    Ok(())
}
