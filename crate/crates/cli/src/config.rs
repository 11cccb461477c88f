//! `--config FILE`: TOML `key = value` pairs expanded into flags that were
//! not given on the command line.

use std::fs;

use crate::error::{CliError, CliResult};

fn flag_present(args: &[String], flag: &str) -> bool {
    let with_eq = format!("{flag}=");
    args.iter().any(|a| a == flag || a.starts_with(&with_eq))
}

fn scalar(value: &toml::Value) -> CliResult<String> {
    match value {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(CliError::validation(format!(
            "unsupported config value `{other}`"
        ))),
    }
}

/// Removes `--config FILE` from `args` and appends the file's settings as
/// flags, skipping any flag already present.
pub fn expand(args: Vec<String>) -> CliResult<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config_path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::validation("--config needs a file path"))?;
            config_path = Some(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config_path = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config_path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::validation(format!("cannot read config {path}: {e}")))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        CliError::validation(format!("config {path}: {}", e.message()))
    })?;
    let mut extra = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag_present(&rest, &flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<CliResult<Vec<_>>>()?;
                extra.push(format!("{flag}={}", parts.join(",")));
            }
            other => extra.push(format!("{flag}={}", scalar(&other)?)),
        }
    }
    rest.extend(extra);
    Ok(rest)
}
