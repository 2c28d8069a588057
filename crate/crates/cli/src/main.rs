mod cli;
mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lshoot_core::Error;
use serde_json::json;

/// Exit status for each error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Config(_) | Error::InsufficientData(_) | Error::UnsupportedDimension(_) => 2,
        Error::NoBracket(_) => 3,
        Error::PrecisionLimit { .. } | Error::NotClosable { .. } | Error::DistinctRoots { .. } => 4,
        Error::StepFailure(_) => 5,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::Config(_) => "config",
        Error::InsufficientData(_) => "insufficient-data",
        Error::NotClosable { .. } => "not-closable",
        Error::UnsupportedDimension(_) => "unsupported-dimension",
        Error::NoBracket(_) => "no-bracket",
        Error::PrecisionLimit { .. } => "precision-limit",
        Error::DistinctRoots { .. } => "distinct-roots",
        Error::StepFailure(_) => "step-failure",
    }
}

fn report(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let mut v = json!({"error": kind(e), "message": e.to_string(), "exit_code": code});
    match e {
        Error::PrecisionLimit { lo, hi, .. } => v["bracket"] = json!([lo, hi]),
        Error::NotClosable { x_at_s1, theta_gap } => {
            v["x_at_s1"] = json!(x_at_s1);
            v["theta_gap"] = json!(theta_gap);
        }
        Error::DistinctRoots { lower, upper } => v["deltas"] = json!([lower, upper]),
        _ => {}
    }
    let _ = writeln!(std::io::stderr(), "{v}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = cli::Cli::parse();
    let run = match commands::run(cli.command) {
        Ok(run) => run,
        Err(e) => return report(&e),
    };
    let summary = run.outputs.summary.clone();
    if let Err(e) = run.outputs.write(&run.out, run.name, run.config) {
        let _ = writeln!(
            std::io::stderr(),
            "{}",
            json!({"error": "io", "message": format!("{e:#}"), "exit_code": 1})
        );
        return ExitCode::FAILURE;
    }
    for line in summary {
        println!("{line}");
    }
    println!("wrote {}", run.out.join("manifest.json").display());
    match run.deferred {
        Some(e) => report(&e),
        None => ExitCode::SUCCESS,
    }
}
