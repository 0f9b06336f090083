//! `--config FILE` support: `key = value` lines turned into flags.
//!
//! The generated flags are inserted right after the subcommand name, ahead
//! of anything typed on the command line. Every option overrides itself, so
//! the later command-line occurrence wins.

use std::ffi::OsString;
use std::path::PathBuf;

use crate::error::{CliError, Result};

/// Arguments with the config file expanded, and the file that was read.
pub struct Expanded {
    pub args: Vec<OsString>,
    pub config_file: Option<PathBuf>,
}

pub fn expand(argv: Vec<OsString>) -> Result<Expanded> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config_file = None;
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = it.next().ok_or_else(|| CliError::usage("--config needs a file path"))?;
            config_file = Some(PathBuf::from(path));
        } else if let Some(path) = text.strip_prefix("--config=") {
            config_file = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config_file else {
        return Ok(Expanded { args: rest, config_file: None });
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::usage(format!("cannot read config file {}: {e}", path.display())))?;
    let flags = parse(&text)?;
    // position of the subcommand: first word after the program name that is not a flag
    let at = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 2);
    if let Some(at) = at {
        rest.splice(at..at, flags);
    }
    Ok(Expanded { args: rest, config_file: Some(path) })
}

/// Turn the file into `--key value` pairs. Boolean keys take `true` or
/// `false`; `false` drops the flag.
pub fn parse(text: &str) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::usage(format!("config line {}: bad key", n + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}
