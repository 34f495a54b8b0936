use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lagcons_cli::convergence::write_dat;
use lagcons_cli::{audit_command, convergence_study, parse_snapshot_arg, run, RunConfig, StudyKind};

#[derive(Parser)]
#[command(name = "lagcons", version, about = "Conservative Lagrangian gas dynamics in 1D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance a configured problem to t_end, writing snapshots and the budget ledger.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Self-convergence study of the final velocity.
    Convergence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// spatial, temporal, or both
        #[arg(long, default_value = "both")]
        kind: String,
        /// Directory for the .dat files (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit one step offline from two snapshots.
    Audit {
        /// Snapshot prefix, or `nodes.csv,cells.csv`.
        #[arg(long)]
        lo: String,
        #[arg(long)]
        hi: String,
        /// Step length; defaults to the one recorded with `--hi`.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        config: PathBuf,
        /// Ledger file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAGCONS_LOG", "info")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = run(&cfg, out.as_deref())?;
            let s = &outcome.summary;
            if let Some(f) = &s.failure {
                eprintln!("solver failure: {f}");
            }
            for v in &s.violations {
                eprintln!("budget violation: {v}");
            }
            println!(
                "{} steps, t = {}, ledger in {}",
                s.steps,
                s.t_final,
                outcome.output_dir.display()
            );
            Ok(outcome.exit_code())
        }
        Command::Convergence {
            config,
            levels,
            kind,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let kinds = match kind.as_str() {
                "both" => vec![StudyKind::Spatial, StudyKind::Temporal],
                k => vec![k.parse::<StudyKind>().map_err(anyhow::Error::msg)?],
            };
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            for k in kinds {
                let report = convergence_study(&cfg, levels, k)?;
                let path = write_dat(&report, &dir)?;
                println!("{} -> {}", report.describe(), path.display());
            }
            Ok(0)
        }
        Command::Audit {
            lo,
            hi,
            tau,
            config,
            out,
        } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = audit_command(&parse_snapshot_arg(&lo), &parse_snapshot_arg(&hi), tau, &cfg)?;
            lagcons_cli::audit::write_ledger(&outcome.records, out.as_ref())?;
            Ok(if outcome.violations > 0 {
                lagcons_cli::EXIT_BUDGET_VIOLATION
            } else {
                lagcons_cli::EXIT_OK
            })
        }
    }
}
