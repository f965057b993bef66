//! `ehmmse` command line.
//!
//! Exit codes: 0 success, 1 invalid input, 2 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ehmmse::experiments::{
    bound_csv, json_document, run_bound, run_simulate, run_verify, simulate_csv, ExperimentConfig,
    Format, Sidecar, SimulateOutput, PRESETS,
};

#[derive(Parser)]
#[command(name = "ehmmse", version, about = "MMSE bounds and campaigns for energy-harvesting remote estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tightest error-bound frontier versus target probability.
    Bound(Common),
    /// Monte-Carlo campaigns, or the success heatmap if configured.
    Simulate(Common),
    /// Run the self-check suites; exits 2 if any check fails.
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named configuration (see --help for the list).
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when omitted. CSV outputs get a `<out>.json` sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

enum Failure {
    Invalid(String),
    Verification,
}

impl From<ehmmse::Error> for Failure {
    fn from(e: ehmmse::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn resolve(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = c.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &c.out {
        cfg.output.path = Some(out.clone());
    }
    if let Some(f) = c.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn emit(cfg: &ExperimentConfig, body: &str, sidecar: Option<String>) -> Result<(), Failure> {
    match &cfg.output.path {
        Some(path) => {
            fs::write(path, body)
                .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
            if let Some(side) = sidecar {
                let sp = sidecar_path(path);
                fs::write(&sp, side)
                    .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", sp.display())))?;
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, common) = match &cli.command {
        Command::Bound(c) => ("bound", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Verify(c) => ("verify", c),
    };
    let cfg = resolve(common)?;
    if common.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let csv = cfg.output.format == Format::Csv;
    match name {
        "bound" => {
            let rows = run_bound(&cfg)?;
            if csv {
                let side = Sidecar::new("bound", &cfg, serde_json::json!({ "rows": rows.len() }));
                emit(&cfg, &bound_csv(&rows), Some(side.to_json()))
            } else {
                emit(&cfg, &json_document("bound", &cfg, &rows), None)
            }
        }
        "simulate" => {
            let out = run_simulate(&cfg)?;
            if csv {
                let summary = match &out {
                    SimulateOutput::Campaigns { summaries, .. } => serde_json::json!({ "campaigns": summaries }),
                    SimulateOutput::Heatmap { cells } => serde_json::json!({ "cells": cells.len() }),
                };
                let side = Sidecar::new("simulate", &cfg, summary);
                emit(&cfg, &simulate_csv(&out), Some(side.to_json()))
            } else {
                emit(&cfg, &json_document("simulate", &cfg, &out), None)
            }
        }
        _ => {
            let report = run_verify(&cfg)?;
            for f in &report.failures {
                eprintln!("FAILED {f}");
            }
            if csv {
                let side = Sidecar::new("verify", &cfg, serde_json::json!({ "failures": report.failures }));
                emit(&cfg, &report.to_csv(), Some(side.to_json()))?;
            } else {
                emit(&cfg, &json_document("verify", &cfg, &report), None)?;
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => ExitCode::from(2),
    }
}
