//! Config-file overlay: `key=value` lines or one JSON object, turned into
//! flags that sit before the command-line flags so the command line wins.

use std::ffi::OsString;
use std::path::Path;

use anyhow::Context;

use crate::error::CliError;

/// Parse overlay text into `(key, value)` pairs; `None` marks a bare switch.
pub fn parse_overlay(text: &str) -> Result<Vec<(String, Option<String>)>, CliError> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| CliError::usage(format!("config JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::usage("config JSON must be an object"))?;
        let mut out = Vec::new();
        for (k, v) in obj {
            match v {
                serde_json::Value::Bool(true) => out.push((k.clone(), None)),
                serde_json::Value::Bool(false) | serde_json::Value::Null => {}
                serde_json::Value::String(s) => out.push((k.clone(), Some(s.clone()))),
                serde_json::Value::Number(n) => out.push((k.clone(), Some(n.to_string()))),
                _ => return Err(CliError::usage(format!("config key {k:?}: only strings, numbers and booleans"))),
            }
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let v = v.trim();
                match v {
                    "true" => out.push((k.trim().to_string(), None)),
                    "false" => {}
                    _ => out.push((k.trim().to_string(), Some(v.to_string()))),
                }
            }
            None => return Err(CliError::usage(format!("config line {}: expected key=value, got {line:?}", i + 1))),
        }
    }
    Ok(out)
}

fn as_flags(pairs: Vec<(String, Option<String>)>) -> Vec<OsString> {
    let mut flags = Vec::new();
    for (k, v) in pairs {
        let k = k.trim_start_matches('-').replace('_', "-");
        flags.push(OsString::from(format!("--{k}")));
        if let Some(v) = v {
            flags.push(OsString::from(v));
        }
    }
    flags
}

/// Insert overlay flags right after the subcommand token.
pub fn splice(argv: &[OsString], subcommand: &str, path: &Path) -> anyhow::Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let flags = as_flags(parse_overlay(&text)?);
    let at = argv
        .iter()
        .skip(1)
        .position(|a| a == subcommand)
        .map(|p| p + 2)
        .ok_or_else(|| CliError::usage("no subcommand given"))?;
    let mut out = argv[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}
