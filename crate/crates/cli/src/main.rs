//! `qprobe`: thermodynamic witnesses of quantum probing from declarative
//! scenario configs.
//!
//! ```text
//! qprobe run <config>
//! qprobe sweep <config> --axis <lambda|delta_T|g|beta> [--out <path>]
//! qprobe check <fn|fidelity|jc|all>
//! ```
//!
//! Exit codes: 0 ok, 2 config/usage, 3 domain error, 4 resource cap.

mod commands;
mod config;

use std::process::ExitCode;

/// An error already mapped to its process exit code.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn config(message: String) -> Self {
        Self { code: 2, message }
    }

    pub fn domain(message: String) -> Self {
        Self { code: 3, message }
    }
}

impl From<qprobe::Error> for CliError {
    fn from(e: qprobe::Error) -> Self {
        let code = match &e {
            qprobe::Error::InvalidModel(_) => 2,
            qprobe::Error::CapExceeded { .. } => 4,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

const USAGE: &str = "\
usage:
  qprobe run <config>
  qprobe sweep <config> --axis <lambda|delta_T|g|beta> [--out <path>]
  qprobe check <fn|fidelity|jc|all>";

fn dispatch(args: &[String]) -> Result<(), CliError> {
    match args.first().map(String::as_str) {
        Some("run") => {
            let [config] = &args[1..] else {
                return Err(CliError::usage(format!("run takes one config path\n{USAGE}")));
            };
            commands::run(config)
        }
        Some("sweep") => {
            let mut config = None;
            let mut axis = None;
            let mut out = None;
            let mut it = args[1..].iter();
            while let Some(arg) = it.next() {
                match arg.as_str() {
                    "--axis" => {
                        axis = Some(it.next().ok_or_else(|| {
                            CliError::usage(format!("--axis needs a value\n{USAGE}"))
                        })?);
                    }
                    "--out" => {
                        out = Some(it.next().ok_or_else(|| {
                            CliError::usage(format!("--out needs a value\n{USAGE}"))
                        })?);
                    }
                    other if config.is_none() && !other.starts_with("--") => {
                        config = Some(other.to_string());
                    }
                    other => {
                        return Err(CliError::usage(format!(
                            "unexpected argument `{other}`\n{USAGE}"
                        )))
                    }
                }
            }
            let config = config
                .ok_or_else(|| CliError::usage(format!("sweep needs a config path\n{USAGE}")))?;
            let axis =
                axis.ok_or_else(|| CliError::usage(format!("sweep needs --axis\n{USAGE}")))?;
            commands::sweep(&config, axis, out.map(String::as_str))
        }
        Some("check") => {
            let [suite] = &args[1..] else {
                return Err(CliError::usage(format!("check takes one suite name\n{USAGE}")));
            };
            commands::check(suite)
        }
        Some(other) => Err(CliError::usage(format!("unknown command `{other}`\n{USAGE}"))),
        None => Err(CliError::usage(USAGE.to_string())),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
