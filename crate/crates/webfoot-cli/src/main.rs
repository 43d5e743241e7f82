use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use webfoot_cli::{config, runner, HarnessError};

#[derive(Parser)]
#[command(name = "webfoot", version, about = "Tendon-coupled swimming-leg experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment plan and write logs, summary and plots.
    Run {
        /// Plan file (key = value format); omit keys for defaults.
        plan: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Override the plan's seed base.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute the summary from existing timeseries CSV files.
    Metrics {
        /// Directory containing timeseries_*.csv files.
        dir: PathBuf,
        /// Output summary path (default: <dir>/summary_recomputed.csv).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plan file for metric parameters (defaults when omitted).
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Parse and validate a plan file, printing the resolved configuration.
    Validate {
        plan: PathBuf,
    },
}

fn load_plan(path: &PathBuf) -> Result<config::Resolved, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    config::parse_config(&text)
}

fn print_aggregate_table(outcome: &runner::PlanOutcome) {
    println!(
        "{:<6} {:>10} {:>12} {:>10} {:>9} {:>9}",
        "config", "F_net[N]", "W_input[J]", "eta[N/J]", "TP1/T", "TP2/T"
    );
    for a in &outcome.aggregates {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<6} {:>10.4} {:>12.4} {:>10.4} {:>9} {:>9}",
            a.config.to_string(),
            a.f_net_mean,
            a.w_input_mean,
            a.eta_mean,
            fmt_opt(a.tp1_over_t_mean),
            fmt_opt(a.tp2_over_t_mean),
        );
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { plan, out, jobs, seed } => {
            let mut resolved = load_plan(&plan)?;
            if let Some(seed) = seed {
                resolved.plan.seed_base = seed;
            }
            let outcome = runner::run_plan(&resolved, &out, jobs)?;
            print_aggregate_table(&outcome);
            println!("wrote outputs to {}", out.display());
            Ok(())
        }
        Command::Metrics { dir, out, plan } => {
            let resolved = match plan {
                Some(p) => load_plan(&p)?,
                None => config::parse_config("")?,
            };
            let out = out.unwrap_or_else(|| dir.join("summary_recomputed.csv"));
            let outcome = runner::recompute_metrics(&dir, &out, &resolved)?;
            print_aggregate_table(&outcome);
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Validate { plan } => {
            let resolved = load_plan(&plan)?;
            for (k, v) in resolved.echo() {
                println!("{k} = {v}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
