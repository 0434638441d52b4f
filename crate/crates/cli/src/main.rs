//! `clustercert`: sample grid functions, compute fractional seminorms, search
//! for clustering certificates, evaluate the depth bound and run
//! verification sweeps.
//!
//! Exit codes: 0 success (or certificate found), 1 verification rows failed,
//! 2 validation or I/O error, 3 search exhausted without a certificate.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use clustercert::seminorms::with_workers;

use commands::Outcome;
use config::{Params, RunConfig};

#[derive(Parser)]
#[command(
    name = "clustercert",
    version,
    about = "Fractional seminorms and level-set clustering certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a function family on a grid and write the GridFunction JSON.
    Sample(Run),
    /// Gagliardo, gradient and total-variation seminorms of a grid function.
    Seminorm(Run),
    /// Search for a clustering certificate.
    Search(Run),
    /// The depth bound k* with every factor itemized.
    Bound(Run),
    /// Scaling or embedding verification sweep over the built-in corpus.
    Verify(Run),
}

#[derive(clap::Args)]
struct Run {
    #[command(flatten)]
    params: Params,

    /// Run configuration JSON; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the merged run configuration to this file.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (&'static str, Run) {
        match self {
            Command::Sample(r) => ("sample", r),
            Command::Seminorm(r) => ("seminorm", r),
            Command::Search(r) => ("search", r),
            Command::Bound(r) => ("bound", r),
            Command::Verify(r) => ("verify", r),
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let (name, run) = cli.command.split();
    let params = match &run.config {
        Some(path) => {
            let file = RunConfig::load(path)?;
            if file.command != name {
                bail!("{} is a config for `{}`, not `{name}`", path.display(), file.command);
            }
            run.params.over(file.params)
        }
        None => run.params,
    };
    if let Some(path) = &run.save_config {
        let cfg = RunConfig {
            command: name.to_string(),
            params: params.clone(),
        };
        let mut text = serde_json::to_string_pretty(&cfg)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let workers = params.workers();
    with_workers(workers, move || match name {
        "sample" => commands::sample_cmd(&params),
        "seminorm" => commands::seminorm_cmd(&params),
        "search" => commands::search_cmd(&params),
        "bound" => commands::bound_cmd(&params),
        _ => commands::verify_cmd(&params),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Ok(Outcome::Exhausted) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
