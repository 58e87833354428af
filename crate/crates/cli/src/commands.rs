//! Command-line surface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use noma_core::dual::bisection_search;
use noma_core::dynamics::ActionFilter;
use noma_core::mdp::{evaluate_policy_exact, policy_values};
use noma_core::sim::{policy_matches, sample_episode};

use crate::config::load_config;
use crate::error::CliError;
use crate::experiments::{default_lambda_grid, delta_sweep, lambda_sweep, par_monte_carlo};
use crate::tables;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "noma",
    about = "Constrained-optimal NOMA power, rate, and decoding-order policies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the optimal multiplier by bisection and write policy, summary, and trace.
    Solve(SolveArgs),
    /// Solve and evaluate π_λ over a grid of multipliers.
    SweepLambda(SweepArgs),
    /// Average constrained-optimal capacity over random placements per outage threshold.
    DeltaSweep(DeltaArgs),
    /// Monte-Carlo check of a policy file against exact evaluation.
    Simulate(SimulateArgs),
    /// Dump per-action delivery probabilities.
    Probabilities(ProbabilitiesArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value = "full", value_parser = parse_filter)]
    pub filter: ActionFilter,
    /// Output directory for policy.csv, summary.csv, and trace.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated multipliers; defaults to a log-spaced grid plus λ*.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Repeatable; defaults to all three filters.
    #[arg(long, value_parser = parse_filter)]
    pub filter: Vec<ActionFilter>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeltaArgs {
    /// Scenario template; its fading gains are replaced per placement.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.05,0.1,0.2")]
    pub delta_grid: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub realizations: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_filter)]
    pub filter: Vec<ActionFilter>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Policy CSV as written by `solve`.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100_000)]
    pub episodes: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write every slot of every episode to this CSV.
    #[arg(long)]
    pub episode_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbabilitiesArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_filter(s: &str) -> Result<ActionFilter, String> {
    ActionFilter::parse(s).ok_or_else(|| format!("unknown filter `{s}` (expected full, order12, or order21)"))
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// No multiplier met the outage threshold.
    Infeasible,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Done => 0,
            Status::Infeasible => 2,
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn filters_or_all(filters: &[ActionFilter]) -> Vec<ActionFilter> {
    if filters.is_empty() {
        ActionFilter::ALL.to_vec()
    } else {
        filters.to_vec()
    }
}

fn positive_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--epsilon must be positive, got {epsilon}")))
    }
}

pub fn run(cli: Cli) -> Result<Status, CliError> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::SweepLambda(args) => cmd_sweep_lambda(&args),
        Command::DeltaSweep(args) => cmd_delta_sweep(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Probabilities(args) => {
            let cfg = load_config(&args.config)?;
            tables::write_probabilities(output(args.out.as_deref())?, &cfg)?;
            Ok(Status::Done)
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Status, CliError> {
    positive_epsilon(args.epsilon)?;
    let cfg = load_config(&args.config)?;
    let result = bisection_search(&cfg, args.epsilon, args.filter);
    let values = policy_values(&cfg, &result.policy, result.lambda_star);

    std::fs::create_dir_all(&args.out)?;
    tables::write_policy(
        File::create(args.out.join("policy.csv"))?,
        &cfg,
        &result.policy,
        &values,
    )?;
    tables::write_summary(File::create(args.out.join("summary.csv"))?, args.filter, &result)?;
    tables::write_trace(File::create(args.out.join("trace.csv"))?, &result)?;

    println!("filter            {}", args.filter.as_str());
    println!("feasible          {}", result.feasible);
    println!("lambda*           {}", result.lambda_star);
    println!("expected capacity {}", result.eval.expected_capacity);
    println!(
        "outage            {} (threshold {})",
        result.eval.outage_prob, cfg.delta
    );
    println!("probes            {}", result.trace.len());
    Ok(if result.feasible {
        Status::Done
    } else {
        Status::Infeasible
    })
}

pub fn cmd_sweep_lambda(args: &SweepArgs) -> Result<Status, CliError> {
    positive_epsilon(args.epsilon)?;
    let cfg = load_config(&args.config)?;
    let grid = match &args.lambda_grid {
        Some(g) if g.is_empty() => return Err(CliError::Usage("--lambda-grid is empty".into())),
        Some(g) if g.iter().any(|l| !(*l >= 0.0)) => {
            return Err(CliError::Usage("--lambda-grid values must be nonnegative".into()))
        }
        Some(g) => g.clone(),
        None => {
            let star = bisection_search(&cfg, args.epsilon, ActionFilter::Full);
            default_lambda_grid(&cfg, star.feasible.then_some(star.lambda_star))
        }
    };
    let rows = lambda_sweep(&cfg, &grid, &filters_or_all(&args.filter));
    tables::write_sweep(output(args.out.as_deref())?, &rows)?;
    Ok(Status::Done)
}

pub fn cmd_delta_sweep(args: &DeltaArgs) -> Result<Status, CliError> {
    positive_epsilon(args.epsilon)?;
    if args.delta_grid.is_empty() {
        return Err(CliError::Usage("--delta-grid is empty".into()));
    }
    if args.realizations == 0 {
        return Err(CliError::Usage("--realizations must be at least 1".into()));
    }
    let cfg = load_config(&args.config)?;
    let rows = delta_sweep(
        &cfg,
        &args.delta_grid,
        &filters_or_all(&args.filter),
        args.realizations,
        args.seed,
        args.epsilon,
    )?;
    for r in rows.iter().filter(|r| r.infeasible > 0) {
        eprintln!(
            "{} delta={}: {} of {} placements infeasible",
            r.filter.as_str(),
            r.delta,
            r.infeasible,
            args.realizations
        );
    }
    tables::write_delta_sweep(output(args.out.as_deref())?, &rows)?;
    Ok(Status::Done)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Status, CliError> {
    if args.episodes == 0 {
        return Err(CliError::Usage("--episodes must be at least 1".into()));
    }
    if !(args.lambda >= 0.0) {
        return Err(CliError::Usage("--lambda must be nonnegative".into()));
    }
    let cfg = load_config(&args.config)?;
    let policy = tables::read_policy(File::open(&args.policy)?, &cfg)?;
    debug_assert!(policy_matches(&cfg, &policy));

    let est = par_monte_carlo(&cfg, &policy, args.lambda, args.episodes, args.seed);
    let exact = evaluate_policy_exact(&cfg, &policy);
    let exact_return = exact.lagrangian_at(args.lambda, cfg.delta);

    let z = |diff: f64, se: f64| if se > 0.0 { diff / se } else { f64::NAN };
    println!("episodes     {}", est.episodes);
    println!("quantity     monte-carlo (se)              exact              z");
    println!(
        "capacity     {:.6} ({:.6})   {:.6}   {:+.3}",
        est.capacity,
        est.capacity_se,
        exact.expected_capacity,
        z(est.capacity - exact.expected_capacity, est.capacity_se)
    );
    println!(
        "outage       {:.6} ({:.6})   {:.6}   {:+.3}",
        est.outage,
        est.outage_se,
        exact.outage_prob,
        z(est.outage - exact.outage_prob, est.outage_se)
    );
    println!(
        "return       {:.6} ({:.6})   {:.6}   {:+.3}",
        est.mean_return,
        est.return_se,
        exact_return,
        z(est.mean_return - exact_return, est.return_se)
    );

    if let Some(path) = &args.episode_log {
        let episodes: Vec<_> = (0..args.episodes)
            .map(|m| sample_episode(&cfg, &policy, args.lambda, args.seed.wrapping_add(m)))
            .collect();
        tables::write_episode_log(BufWriter::new(File::create(path)?), &cfg, &episodes)?;
    }
    Ok(Status::Done)
}
