//! `key = value` run files.
//!
//! Each non-empty line that is not a `#` comment becomes `--key value`
//! (a bare `key` becomes the flag `--key`). Arguments given on the command
//! line come after the file's, so an argument parser that keeps the last
//! occurrence lets flags win.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_config_str(text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let k = k.trim();
                if k.is_empty() {
                    return Err(Error::Format(format!("line {}: empty key", no + 1)));
                }
                out.push(format!("--{}", k.replace('_', "-")));
                out.push(v.trim().trim_matches('"').to_string());
            }
            None => out.push(format!("--{}", line.replace('_', "-"))),
        }
    }
    Ok(out)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<String>> {
    parse_config_str(&std::fs::read_to_string(path)?)
}

/// Splices the file named by `--config` into `args` ahead of the remaining
/// command-line arguments. `args[0]` and the subcommand stay in front.
pub fn expand_config_args(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let (path, consumed) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (
            args.get(pos + 1).cloned().ok_or_else(|| Error::InvalidParameter("--config needs a path".into()))?,
            2,
        ),
    };
    let head = 2.min(pos);
    let mut out: Vec<String> = args[..head].to_vec();
    out.extend(load_config(&path)?);
    out.extend(args[head..pos].iter().cloned());
    out.extend(args[pos + consumed..].iter().cloned());
    Ok(out)
}
