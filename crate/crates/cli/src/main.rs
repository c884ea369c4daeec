mod cli;
mod commands;
mod config;
mod error;
mod io;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::cli::{Cli, Command};
use crate::commands::Context;
use crate::config::Document;
use crate::error::CliError;

fn init_logging(level: &str) {
    let filter = EnvFilter::try_new(level).unwrap_or_else(|_| EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .try_init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let doc = Document::load_opt(cli.config.as_deref())?;
    let level = cli
        .log_level
        .clone()
        .or_else(|| std::env::var("RUST_LOG").ok())
        .or_else(|| doc.log_level().map(String::from))
        .unwrap_or_else(|| "info".into());
    init_logging(&level);
    let seed = cli.seed.or(doc.seed()).unwrap_or(0);
    let ctx = Context { doc, seed };
    match cli.command {
        Command::Filter(a) => commands::filter(a, &ctx),
        Command::Ingest(a) => commands::ingest(a, &ctx),
        Command::Annotate(a) => commands::annotate(a, &ctx),
        Command::TrainMeta(a) => commands::train_meta_cmd(a, &ctx),
        Command::Ensemble(a) => commands::ensemble(a, &ctx),
        Command::Evaluate(a) => commands::evaluate(a, &ctx),
        Command::Stats(a) => commands::stats_cmd(a, &ctx),
        Command::MockServer(a) => commands::mock_server(a, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!(code = e.exit_code(), "{e}");
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
