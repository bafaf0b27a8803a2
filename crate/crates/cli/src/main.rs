//! `lamshift run --config exp.json` runs one experiment and writes
//! `report.json` (plus `<command>.csv` with `--format csv`);
//! `lamshift replay report.json` reruns it and compares field by field.
//!
//! Exit codes: 0 pass, 1 property failure or replay mismatch, 2 configuration
//! error, 3 truncation or resource cap.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use lamshift::stats::GENERATOR_ID;
use serde_json::{json, Value};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "lamshift", version, about = "Experiments on nonsingular ladder shifts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Rerun a report's embedded config and compare the results.
    Replay {
        report: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

const CONFIG_ERROR: u8 = 2;
const TRUNCATION: u8 = 3;

fn error_code(e: &lamshift::Error) -> u8 {
    use lamshift::Error::*;
    match e {
        Parameter(_) | Domain(_) | Data(_) | DegenerateSet(_) => CONFIG_ERROR,
        Window(_) | Truncation { .. } => TRUNCATION,
        NotInDomain(_) | NotLattice(_) => 1,
    }
}

fn set_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn build_report(cfg: &ExperimentConfig) -> Result<(Value, commands::Outcome), lamshift::Error> {
    let o = commands::run(cfg)?;
    let report = json!({
        "command": cfg.command.name(),
        "generator": GENERATOR_ID,
        "config": cfg,
        "passed": o.passed,
        "truncated": o.truncated,
        "result": o.result,
        "summary": o.summary,
    });
    Ok((report, o))
}

fn run(config: &Path, seed: Option<u64>, out: &Path, format: Format) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(config).with_context(|| format!("cannot read {}", config.display()))?;
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return Ok(CONFIG_ERROR);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (report, outcome) = match build_report(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", cfg.command.name());
            return Ok(error_code(&e));
        }
    };
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    if format == Format::Csv {
        if let Some(csv) = &outcome.csv {
            std::fs::write(out.join(format!("{}.csv", cfg.command.name())), csv)?;
        } else {
            eprintln!("{} has no tabular output; wrote JSON only", cfg.command.name());
        }
    }
    std::fs::write(out.join("summary.txt"), format!("{}\n", outcome.summary))?;
    println!("{}", outcome.summary);
    println!("{}: {}", cfg.command.name(), if outcome.passed { "PASS" } else { "FAIL" });
    Ok(if outcome.truncated {
        TRUNCATION
    } else if outcome.passed {
        0
    } else {
        1
    })
}

/// Path of the first field where two JSON values differ.
fn first_difference(a: &Value, b: &Value, path: &str) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match y.get(k) {
                    Some(vb) => {
                        if let Some(d) = first_difference(va, vb, &p) {
                            return Some(d);
                        }
                    }
                    None => return Some(p),
                }
            }
            y.keys().find(|k| !x.contains_key(*k)).map(|k| if path.is_empty() { k.clone() } else { format!("{path}.{k}") })
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Some(format!("{path}.len"));
            }
            x.iter().zip(y).enumerate().find_map(|(i, (va, vb))| first_difference(va, vb, &format!("{path}[{i}]")))
        }
        _ => (a != b).then(|| path.to_string()),
    }
}

fn replay(path: &Path) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let stored: Value = serde_json::from_str(&text).context("report is not JSON")?;
    let cfg_value = stored.get("config").context("report has no embedded config")?;
    let cfg: ExperimentConfig = match serde_json::from_value(cfg_value.clone()).map_err(anyhow::Error::from).and_then(|c: ExperimentConfig| {
        c.validate()?;
        Ok(c)
    }) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error in report: {e:#}");
            return Ok(CONFIG_ERROR);
        }
    };
    let fresh = match build_report(&cfg) {
        Ok((r, _)) => r,
        Err(e) => {
            eprintln!("replay failed: {e}");
            return Ok(error_code(&e));
        }
    };
    match first_difference(&stored, &fresh, "") {
        None => {
            println!("replay identical: {}", path.display());
            Ok(0)
        }
        Some(field) => {
            println!("replay mismatch at field '{field}'");
            Ok(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run { config, seed, out, jobs, format } => {
            set_jobs(jobs);
            run(&config, seed, &out, format)
        }
        Cmd::Replay { report, jobs } => {
            set_jobs(jobs);
            replay(&report)
        }
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}
