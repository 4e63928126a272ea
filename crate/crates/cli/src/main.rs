//! `linksel`: run bandit experiments, solve the benchmark LP, preprocess
//! item logs and check trace files.
//!
//! Exit codes: 0 success, 1 trace check found problems, 2 configuration or
//! input error, 3 infeasible threshold, 4 numeric failure during a run.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linksel_core::experiment::{run_experiment, NestedConfig, PartialConfig};
use linksel_core::ingest::{ingest, read_raw_items, DEFAULT_MAX_VIEWS, DEFAULT_MIN_CONVERSIONS};
use linksel_core::io::{read_arm_pool, read_gain_vector, write_arm_pool_file};
use linksel_core::oracle::solve_constrained_lp;
use linksel_core::trace::{check_records, format_sig12, read_trace};
use linksel_core::{Algorithm, Error};

#[derive(Parser)]
#[command(name = "linksel", version, about = "Constrained multi-play bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-replica traces plus summary.csv.
    Run(RunArgs),
    /// Solve the relaxed benchmark LP for an arm pool.
    Oracle(OracleArgs),
    /// Turn an item_id,views,conversions log into an arm pool.
    Ingest(IngestArgs),
    /// Check trace files for monotonicity and consistency.
    CheckTrace(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Expected number of arms in the pool (K).
    #[arg(long)]
    arms_count: Option<usize>,
    /// Arms selected per round (L).
    #[arg(long)]
    select: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
    /// Arm-pool CSV (arm_id,mean_ctr,mean_revenue).
    #[arg(long)]
    arms: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Triangle-wave drifting second-level rewards.
    #[arg(long)]
    drift: bool,
    /// Child pools for nested second-level rewards
    /// (parent,arm_id,mean_ctr,mean_revenue).
    #[arg(long)]
    nested_children: Option<PathBuf>,
    #[arg(long, requires = "nested_children")]
    nested_select: Option<usize>,
    #[arg(long, requires = "nested_children", default_value_t = 0.0)]
    nested_threshold: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    arms: PathBuf,
    #[arg(long)]
    select: usize,
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Objective vector (arm_id,g); defaults to mean_ctr * mean_revenue.
    #[arg(long)]
    g_file: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Raw CSV with header item_id,views,conversions.
    #[arg(long)]
    raw: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_VIEWS)]
    max_views: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_CONVERSIONS)]
    min_conversions: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } => 3,
        Error::NumericOverflow { .. }
        | Error::CappingUnsolvable { .. }
        | Error::MalformedVector(_)
        | Error::DegenerateVariance => 4,
        _ => 2,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::CheckTrace(args) => cmd_check(args),
    }
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let base = match &args.config {
        Some(p) => match PartialConfig::from_file(p) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        },
        None => PartialConfig::default(),
    };
    let nested = args.nested_children.map(|children| NestedConfig {
        children,
        select: args.nested_select.unwrap_or(1),
        threshold: args.nested_threshold,
    });
    let flags = PartialConfig {
        algorithm: args.algorithm,
        arms_count: args.arms_count,
        select: args.select,
        threshold: args.threshold,
        horizon: args.horizon,
        gamma: args.gamma,
        delta: args.delta,
        seed: args.seed,
        replicas: args.replicas,
        checkpoint_interval: args.checkpoint_interval,
        arms: args.arms,
        out: args.out,
        drift: args.drift.then_some(true),
        nested,
    };
    let cfg = match base.merge(flags).resolve() {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let summary = match run_experiment(&cfg) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let mut code = 0;
    for r in &summary.replicas {
        match &r.outcome {
            Ok(trace) => {
                if let Some(last) = trace.last() {
                    println!(
                        "replica {} (seed {}): t={} regret={} violation={} lambda={}",
                        r.replica,
                        r.seed,
                        last.t,
                        format_sig12(last.regret),
                        format_sig12(last.violation_perround),
                        format_sig12(last.lambda)
                    );
                }
            }
            Err(e) => {
                eprintln!("replica {} (seed {}) failed: {e}", r.replica, r.seed);
                code = code.max(exit_code(e));
            }
        }
    }
    println!("summary written to {}", summary.summary_path.display());
    ExitCode::from(code)
}

fn cmd_oracle(args: OracleArgs) -> ExitCode {
    let result = (|| {
        let pool = read_arm_pool(&args.arms)?;
        let g = match &args.g_file {
            Some(p) => read_gain_vector(p)?,
            None => pool.mean_compound(),
        };
        solve_constrained_lp(&g, pool.mean_ctr(), args.select, args.threshold)
    })();
    match result {
        Ok(sol) => {
            let x: Vec<String> = sol.x.iter().map(|&v| format_sig12(v)).collect();
            println!("x = {}", x.join(","));
            println!("objective = {}", format_sig12(sol.objective));
            println!("slack = {}", format_sig12(sol.constraint_slack));
            match sol.multiplier {
                Some(m) => println!("multiplier = {}", format_sig12(m)),
                None => println!("multiplier = unknown"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn cmd_ingest(args: IngestArgs) -> ExitCode {
    let result = read_raw_items(&args.raw).and_then(|rows| {
        let report = ingest(&rows, args.max_views, args.min_conversions)?;
        write_arm_pool_file(&args.out, &report.pool)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            println!("kept {} items, dropped {}", report.kept, report.dropped);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let mut bad = false;
    for path in &args.traces {
        match read_trace(path) {
            Ok(recs) => {
                let issues = check_records(&recs);
                if issues.is_empty() {
                    println!("{}: ok ({} rows)", path.display(), recs.len());
                }
                for (row, msg) in issues {
                    bad = true;
                    println!("{}: row {}: {msg}", path.display(), row + 1);
                }
            }
            Err(e) => return fail(&e),
        }
    }
    if bad {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
