//! Config files become extra `--key value` arguments placed right after the
//! subcommand, so command-line flags given later override them and unknown
//! keys fail the same way unknown flags do.

use std::ffi::OsString;
use std::path::Path;

use serde_json::{Map, Value};

use crate::UsageError;

/// Global options that take a value and may precede the subcommand.
const VALUED_GLOBALS: [&str; 7] = ["--config", "--out", "--seed", "--format", "--target-tail", "--guard", "--max-dim"];

#[derive(Debug, Default, PartialEq)]
pub struct Config {
    pub command: Option<String>,
    pub entries: Vec<(String, Value)>,
}

/// Parses JSON (flat, or `{"command": …, "config": {…}}` as echoed in output
/// headers, possibly under `meta`), a `#`-prefixed JSON header line, or
/// `key = value` lines.
pub fn parse(text: &str) -> Result<Config, UsageError> {
    let trimmed = text.trim_start();
    if let Some(rest) = trimmed.strip_prefix('#') {
        let line = rest.lines().next().unwrap_or("").trim();
        if line.starts_with('{') {
            return parse_json(line);
        }
    }
    if trimmed.starts_with('{') {
        return parse_json(trimmed);
    }
    parse_lines(text)
}

fn parse_json(text: &str) -> Result<Config, UsageError> {
    let v: Value = serde_json::from_str(text).map_err(|e| UsageError(format!("config is not valid JSON: {e}")))?;
    let Value::Object(mut top) = v else {
        return Err(UsageError("config JSON must be an object".into()));
    };
    if let Some(Value::Object(meta)) = top.get("meta") {
        if meta.contains_key("config") {
            top = meta.clone();
        }
    }
    let command = match top.remove("command") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(other) => return Err(UsageError(format!("config command must be a string, got {other}"))),
    };
    let body: Map<String, Value> = match top.remove("config") {
        Some(Value::Object(inner)) => inner,
        Some(other) => return Err(UsageError(format!("config field must be an object, got {other}"))),
        None => top,
    };
    Ok(Config { command, entries: body.into_iter().collect() })
}

fn parse_lines(text: &str) -> Result<Config, UsageError> {
    let mut cfg = Config::default();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| UsageError(format!("config line {}: expected key = value", k + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(UsageError(format!("config line {}: empty key", k + 1)));
        }
        if key == "command" {
            cfg.command = Some(value.to_owned());
        } else {
            cfg.entries.push((key.to_owned(), Value::String(value.to_owned())));
        }
    }
    Ok(cfg)
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        parse(&text)
    }

    /// Entries as flags. `true` becomes a bare switch, `false` and null are dropped.
    pub fn to_args(&self) -> Result<Vec<OsString>, UsageError> {
        let mut out = Vec::new();
        for (key, value) in &self.entries {
            let flag = format!("--{}", key.replace('_', "-"));
            if key == "config" {
                return Err(UsageError("config files cannot nest --config".into()));
            }
            match value {
                Value::Null | Value::Bool(false) => {}
                Value::Bool(true) => out.push(flag.into()),
                Value::String(s) if s == "true" => out.push(flag.into()),
                Value::String(s) if s == "false" => {}
                Value::String(s) => {
                    out.push(flag.into());
                    out.push(s.into());
                }
                Value::Number(n) => {
                    out.push(flag.into());
                    out.push(n.to_string().into());
                }
                other => return Err(UsageError(format!("config key {key} has unsupported value {other}"))),
            }
        }
        Ok(out)
    }
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, UsageError> {
    let mut found = None;
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = Some(iter.next().cloned().ok_or_else(|| UsageError("--config needs a path".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(p.into());
        }
    }
    Ok(found)
}

/// Index of the subcommand in `args` (program name excluded), if any.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut k = 0;
    while k < args.len() {
        let s = args[k].to_string_lossy();
        if VALUED_GLOBALS.contains(&s.as_ref()) {
            k += 2;
        } else if s.starts_with('-') {
            k += 1;
        } else {
            return Some(k);
        }
    }
    None
}

/// `argv` with config entries spliced in after the subcommand.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, UsageError> {
    let Some((program, rest)) = argv.split_first() else { return Ok(argv) };
    let Some(path) = config_path(rest)? else { return Ok(argv) };
    let cfg = Config::load(Path::new(&path))?;
    let injected = cfg.to_args()?;
    let (before, command, after): (&[OsString], OsString, &[OsString]) = match subcommand_index(rest) {
        Some(k) => {
            let given = rest[k].to_string_lossy().into_owned();
            if let Some(c) = &cfg.command {
                if *c != given {
                    return Err(UsageError(format!("config is for `{c}` but the command is `{given}`")));
                }
            }
            (&rest[..k], rest[k].clone(), &rest[k + 1..])
        }
        None => {
            let c = cfg.command.clone().ok_or_else(|| UsageError("no subcommand given and the config names none".into()))?;
            (rest, c.into(), &[])
        }
    };
    let mut out = vec![program.clone(), command];
    out.extend(injected);
    out.extend(before.iter().cloned());
    out.extend(after.iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn key_value_lines() {
        let cfg = parse("# fig\ncommand = ratio\nstate = ssdns\nr = 0.2\nscan_t = true\n\n").unwrap();
        assert_eq!(cfg.command.as_deref(), Some("ratio"));
        assert_eq!(cfg.to_args().unwrap(), os(&["--state", "ssdns", "--r", "0.2", "--scan-t"]));
    }

    #[test]
    fn header_echo() {
        let cfg = parse("# {\"command\":\"state\",\"config\":{\"n\":2,\"state\":\"fock\",\"l\":null},\"dim\":9}\nm,prob\n").unwrap();
        assert_eq!(cfg.command.as_deref(), Some("state"));
        assert_eq!(cfg.to_args().unwrap(), os(&["--n", "2", "--state", "fock"]));
    }

    #[test]
    fn flat_json_and_errors() {
        let cfg = parse("{\"kappa\": 0, \"fig6\": false}").unwrap();
        assert_eq!(cfg.to_args().unwrap(), os(&["--kappa", "0"]));
        assert!(parse("just words").is_err());
        assert!(parse("[1, 2]").is_err());
        assert!(parse("{\"x\": [1]}").unwrap().to_args().is_err());
    }

    #[test]
    fn subcommand_detection() {
        assert_eq!(subcommand_index(&os(&["--seed", "3", "--format", "json", "state", "fock"])), Some(4));
        assert_eq!(subcommand_index(&os(&["--config", "x"])), None);
    }
}
