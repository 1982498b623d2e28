//! `--config file.json` support.
//!
//! A config file is a JSON object whose keys mirror the long flags of the
//! subcommand (`half_width` and `half-width` are both accepted). Its entries
//! are spliced into the argument list ahead of the user's flags; a key given
//! on the command line is dropped from the config, so flags always win.

use std::collections::HashSet;
use std::fs;

use serde_json::Value;

/// Reasons a config file cannot be merged.
#[derive(Debug)]
pub enum ConfigError {
    Usage(String),
    Data(String),
}

/// Expands `--config PATH` in `args` (program name first, subcommand second).
pub fn expand(args: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| ConfigError::Data(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError::Data(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(ConfigError::Data(format!(
            "config {path} must be a JSON object"
        )));
    };
    let given: HashSet<String> = args.iter().skip(2).filter_map(|a| flag_name(a)).collect();
    let mut from_file = Vec::new();
    for (key, value) in map {
        let name = key.replace('_', "-");
        if name == "config" || given.contains(&name) {
            continue;
        }
        push_flag(&mut from_file, &name, &value)?;
    }
    let mut out: Vec<String> = args.iter().take(2).cloned().collect();
    out.extend(from_file);
    out.extend(args.into_iter().skip(2));
    Ok(out)
}

fn config_path(args: &[String]) -> Result<Option<String>, ConfigError> {
    let mut iter = args.iter().skip(2);
    while let Some(a) = iter.next() {
        if a == "--config" {
            return iter
                .next()
                .cloned()
                .map(Some)
                .ok_or_else(|| ConfigError::Usage("--config needs a path".into()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Ok(Some(p.to_string()));
        }
    }
    Ok(None)
}

fn flag_name(arg: &str) -> Option<String> {
    let body = arg.strip_prefix("--")?;
    Some(body.split('=').next().unwrap_or(body).to_string())
}

fn scalar(name: &str, value: &Value) -> Result<String, ConfigError> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(ConfigError::Usage(format!(
            "config key {name:?} must be a string, number, boolean or array of those"
        ))),
    }
}

fn push_flag(out: &mut Vec<String>, name: &str, value: &Value) -> Result<(), ConfigError> {
    match value {
        Value::Null | Value::Bool(false) => {}
        Value::Bool(true) => out.push(format!("--{name}")),
        Value::Array(items) => {
            let parts: Result<Vec<String>, _> = items.iter().map(|v| scalar(name, v)).collect();
            out.push(format!("--{name}={}", parts?.join(",")));
        }
        other => out.push(format!("--{name}={}", scalar(name, other)?)),
    }
    Ok(())
}
