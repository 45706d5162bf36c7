mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use ringqed::ProjectConfig;

use args::Cli;
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ringqed::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Input(String),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let config = match &g.config {
        Some(p) => ProjectConfig::from_path(p)?,
        None => ProjectConfig::reference(),
    };
    config.validate()?;
    let ctx = commands::Context {
        config,
        out: Output::new(&g.out, g.format)?,
        grid_pitch: g.grid_pitch,
        seed: g.seed,
    };
    commands::run(&cli.command, &ctx)
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
