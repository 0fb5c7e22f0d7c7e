//! `fhn-lab` command-line front end.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 1 on failed checks
//! or numerical failures. Errors are written to stderr as one JSON object.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;

use commands::{cli, default_out, SUBCOMMANDS};
use config::{resolve, CliError};
use output::Output;

/// Apply `FHN_LAB_THREADS` to the global rayon pool.
fn configure_threads() -> Result<Option<usize>, CliError> {
    let Ok(raw) = std::env::var("FHN_LAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("env.FHN_LAB_THREADS", format!("{raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("env.FHN_LAB_THREADS", e.to_string()))?;
    Ok(Some(n))
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let sub_name = argv.get(1).cloned().unwrap_or_default();
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let key = e
                .get(clap::error::ContextKind::InvalidArg)
                .map(|a| {
                    let flag = a.to_string();
                    let flag = flag.split_whitespace().next().unwrap_or("").trim_start_matches('-');
                    format!("{sub_name}.{flag}")
                })
                .unwrap_or_else(|| "argv".into());
            let message = e.render().to_string();
            return Err(CliError::config(
                key,
                message.lines().next().unwrap_or("").trim_start_matches("error: "),
            ));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let spec = SUBCOMMANDS
        .iter()
        .find(|s| s.name == name)
        .expect("registered subcommand");
    let keys = (spec.keys)();
    let cfg = resolve(name, &keys, sub)?;
    let threads = configure_threads()?;
    let dir = sub
        .get_one::<String>("out")
        .map(PathBuf::from)
        .unwrap_or_else(|| default_out(name));
    let mut out = Output::new(dir)?;
    let result = (spec.run)(&cfg, &mut out);
    // a rejected configuration leaves no manifest behind
    if !matches!(result, Err(CliError::Config { .. })) {
        out.finish(&cfg, threads)?;
    }
    let v = match result {
        Ok(v) => v,
        Err(CliError::ChecksFailed { failed, result }) => {
            print_json(&result);
            return Err(CliError::ChecksFailed {
                failed,
                result: serde_json::Value::Null,
            });
        }
        Err(e) => return Err(e),
    };
    print_json(&v);
    Ok(())
}

fn print_json(v: &serde_json::Value) {
    if !v.is_null() {
        println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
