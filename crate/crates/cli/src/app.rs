use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config;
use crate::error::{exit, CliResult};
use crate::output::{artifact, ensure_dir, write_json};
use crate::verify::{self, Suite};
use crate::{commands, sweep};

#[derive(Debug, Parser)]
#[command(name = "mulab", version, about = "Simulate and verify the periodic mu-family of wave equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory, overriding outputs.dir.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Grid size, overriding grid.n.
    #[arg(long, global = true)]
    pub n: Option<usize>,

    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Integrate the configured datum and write a time series and summary.
    Simulate,
    /// Evaluate the breakdown criteria on the initial datum only.
    Criteria,
    /// Run a property suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Run the configured parameter sweep.
    Sweep,
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mulab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| crate::CliError::Config("--config is required".into()))?;
    let cfg = config::load(path, cli.out.as_deref(), cli.n)?;
    match cli.command {
        Command::Simulate => {
            let (code, summary) = commands::simulate(&cfg)?;
            if !cli.quiet {
                println!(
                    "{} n={} {} t={} t_star={} rate_sigma={}",
                    summary.model.name,
                    summary.n,
                    sweep::termination_name(summary.termination),
                    summary.final_time,
                    crate::output::fmt_opt(summary.t_star),
                    crate::output::fmt_opt(summary.rate_sigma),
                );
            }
            Ok(code)
        }
        Command::Criteria => {
            let out = commands::criteria(&cfg)?;
            if !cli.quiet {
                println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            }
            Ok(exit::OK)
        }
        Command::Verify { suite } => {
            let report = verify::run(&cfg, suite)?;
            let out = &cfg.run.outputs;
            ensure_dir(&out.dir)?;
            let suffix = format!("_verify_{}.json", suite.name());
            write_json(&artifact(&out.dir, &out.prefix, &suffix), &report)?;
            if !cli.quiet {
                for c in &report.checks {
                    let verdict = if c.passed { "ok  " } else { "FAIL" };
                    let limit = c
                        .at_most
                        .map(|l| format!("<= {l:e}"))
                        .or(c.at_least.map(|l| format!(">= {l:e}")))
                        .unwrap_or_default();
                    println!("{verdict} {:<40} {:e} {limit}", c.name, c.value);
                }
            }
            Ok(if report.passed { exit::OK } else { exit::VERIFY_FAILED })
        }
        Command::Sweep => {
            let outcome = sweep::run(&cfg, cli.jobs)?;
            if !cli.quiet {
                println!("{} cases -> {}", outcome.rows.len(), outcome.master.display());
            }
            Ok(exit::OK)
        }
    }
}
