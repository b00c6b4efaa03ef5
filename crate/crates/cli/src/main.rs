use std::process::ExitCode;

use clap::Parser;
use mulab_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let code = mulab_cli::run(&cli);
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
