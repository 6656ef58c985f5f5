//! `radial-chirp <experiment> --config <path> [--out <dir>] [--seed <u64>]`
//!
//! Writes `config.json` (resolved), `table.csv` and `summary.json` to the
//! output directory. Exit status: 0 on success, 1 when an acceptance bound
//! fails, 2 on an invalid config, 3 when the computation itself fails.

mod config;
mod experiments;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use serde_json::json;

use config::{ConfigError, Experiment};

#[derive(Debug, Parser)]
#[command(name = "radial-chirp", version, about = "Chirp decompositions of radial multilinear multipliers")]
struct Args {
    experiment: Experiment,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory [default: out/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed used when the config gives none.
    #[arg(long)]
    seed: Option<u64>,
}

enum Failure {
    Config(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ConfigError>() {
            Ok(c) => Failure::Config(c.0),
            Err(e) => Failure::Run(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(args: &Args) -> Result<bool, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = config::parse(&text, &args.config)?.resolve(args.experiment, args.seed)?;
    cfg.spec_if_present()?;

    let outcome = experiments::run(&cfg)?;

    let mut checks = Vec::new();
    let mut pass = true;
    for (name, bound) in cfg.acceptance.iter().flatten() {
        let Some(&value) = outcome.metrics.get(name) else {
            let known: Vec<&str> = outcome.metrics.keys().map(String::as_str).collect();
            return Err(ConfigError(format!(
                "invalid config at `acceptance.{name}`: `{}` reports no such metric (known: {})",
                args.experiment,
                known.join(", ")
            ))
            .into());
        };
        let ok = bound.admits(value);
        pass &= ok;
        checks.push(json!({ "metric": name, "value": value, "min": bound.min, "max": bound.max, "pass": ok }));
    }

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out").join(args.experiment.name()));
    let write = || -> anyhow::Result<()> {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        fs::write(out.join("config.json"), serde_json::to_string_pretty(&cfg)? + "\n")?;
        fs::write(out.join("table.csv"), &outcome.table)?;
        let summary = json!({
            "experiment": args.experiment.name(),
            "seed": cfg.seed,
            "metrics": outcome.metrics,
            "acceptance": checks,
            "pass": pass,
            "details": outcome.details,
        });
        fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(())
    };
    write().map_err(Failure::Run)?;

    for line in &outcome.lines {
        println!("{line}");
    }
    for c in &checks {
        let verdict = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
        println!("{verdict} {} = {} (min {}, max {})", c["metric"].as_str().unwrap_or(""), c["value"], c["min"], c["max"]);
    }
    println!("wrote {}", out.display());
    Ok(pass)
}
