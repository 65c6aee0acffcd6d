//! `maxtomo <forward|impedance|reconstruct|locate|validate> --config <path>`

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use maxtomo::io::write_text;
use maxtomo::Error;

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    /// solve one boundary value problem with plane-wave data
    Forward,
    /// assemble the local impedance matrix on the patch
    Impedance,
    /// scan Fourier samples and invert for the contrast
    Reconstruct,
    /// locate small inclusions and fit their moments
    Locate,
    /// run the invariant suites
    Validate,
}

#[derive(Debug, Parser)]
#[command(name = "maxtomo", version, about = "Partial-data electromagnetic impedance tomography")]
struct Cli {
    command: Command,
    /// TOML run configuration (defaults when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// overrides `seed` from the config
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads; the computation is sequential, so only 1 is meaningful
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
}

enum Failure {
    Core(Error),
    Validation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("{}: {}", e.class(), e);
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
        Err(Failure::Validation(n)) => {
            eprintln!("VALIDATION_FAILED: {n} suite(s) failed");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let _ = cli.threads;
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("maxtomo-out"));
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let report = match cli.command {
        Command::Forward => commands::forward(&cfg, &out)?,
        Command::Impedance => commands::impedance_cmd(&cfg, &out)?,
        Command::Reconstruct => commands::reconstruct(&cfg, &out)?,
        Command::Locate => commands::locate(&cfg, &out)?,
        Command::Validate => return validate(&cfg, &out),
    };
    finish(&out, report.as_str())?;
    Ok(())
}

fn finish(out: &Path, text: &str) -> Result<(), Failure> {
    write_text(out.join("report.txt"), text)?;
    print!("{text}");
    Ok(())
}

fn validate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let outcomes = validate::run(cfg);
    let mut text = String::new();
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        text.push_str(&format!("{tag} {} {}\n", o.name, o.detail));
    }
    finish(out, &text)?;
    match outcomes.iter().filter(|o| !o.pass).count() {
        0 => Ok(()),
        n => Err(Failure::Validation(n)),
    }
}
