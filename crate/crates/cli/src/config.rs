//! Flat `key = value` configuration with flag overrides.
//!
//! Every subcommand owns a table of keys with defaults. The same table builds
//! the clap flags, validates config files and fills the manifest, so a key
//! that is accepted in one place is accepted everywhere.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{key}: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Run(String),
    #[error("failing checks: {failed:?}")]
    ChecksFailed {
        failed: Vec<String>,
        result: serde_json::Value,
    },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Run(_) | Self::ChecksFailed { .. } => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Self::Config { key, message } => {
                serde_json::json!({ "error": { "kind": "config", "key": key, "message": message } })
            }
            Self::Run(message) => serde_json::json!({ "error": { "kind": "run", "message": message } }),
            Self::ChecksFailed { failed, .. } => {
                serde_json::json!({ "error": { "kind": "check_failure", "failed": failed, "message": self.to_string() } })
            }
        }
    }
}

pub fn run_err(e: impl std::fmt::Display) -> CliError {
    CliError::Run(e.to_string())
}

pub struct Key {
    pub name: &'static str,
    /// `None` marks a key that has no default and must be given when used.
    pub default: Option<String>,
    pub help: &'static str,
}

pub fn key(name: &'static str, default: impl ToString, help: &'static str) -> Key {
    Key {
        name,
        default: Some(default.to_string()),
        help,
    }
}

pub fn optional(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: None,
        help,
    }
}

/// Resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct Config {
    pub subcommand: String,
    pub values: BTreeMap<String, String>,
}

impl Config {
    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.subcommand)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::config(self.path(key), "required key is missing"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.require(key)?;
        v.parse()
            .map_err(|e| CliError::config(self.path(key), format!("cannot parse {v:?}: {e}")))
    }

    /// A numeric key that also accepts `auto`.
    pub fn get_auto(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.require(key)? {
            "auto" => Ok(None),
            _ => self.get(key).map(Some),
        }
    }

    pub fn choice<'a>(&'a self, key: &str, allowed: &[&str]) -> Result<&'a str, CliError> {
        let v = self.require(key)?;
        if allowed.contains(&v) {
            Ok(v)
        } else {
            Err(CliError::config(
                self.path(key),
                format!("{v:?} is not one of {allowed:?}"),
            ))
        }
    }

    pub fn invalid(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::config(self.path(key), message)
    }
}

/// Clap command for a subcommand built from its key table.
pub fn command(name: &'static str, about: &'static str, keys: &[Key]) -> Command {
    let mut cmd = Command::new(name)
        .about(about)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file, or a manifest.json from an earlier run"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .help("output directory [default: fhn-lab-out/<subcommand>]"),
        );
    for k in keys {
        let help = match &k.default {
            Some(d) => format!("{} [default: {d}]", k.help),
            None => k.help.to_string(),
        };
        cmd = cmd.arg(
            Arg::new(k.name)
                .long(k.name)
                .value_name("VALUE")
                .action(ArgAction::Set)
                .allow_negative_numbers(true)
                .help(help),
        );
    }
    cmd
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::config(
                format!("{origin}:{}", i + 1),
                "expected `key = value`",
            ));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::config(format!("{origin}:{}", i + 1), "empty key"));
        }
        if v.is_empty() {
            return Err(CliError::config(
                format!("{origin}:{}", i + 1),
                format!("key {k:?} has no value"),
            ));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Pairs from a manifest written by an earlier run of `subcommand`.
fn parse_manifest(text: &str, origin: &str, subcommand: &str) -> Result<Vec<(String, String)>, CliError> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::config(origin.to_string(), format!("invalid JSON: {e}")))?;
    match v.get("subcommand").and_then(|s| s.as_str()) {
        Some(s) if s == subcommand => {}
        other => {
            return Err(CliError::config(
                format!("{origin}:subcommand"),
                format!("manifest is for {other:?}, not {subcommand:?}"),
            ))
        }
    }
    let cfg = v
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| CliError::config(format!("{origin}:config"), "missing config object"))?;
    cfg.iter()
        .map(|(k, v)| match v.as_str() {
            Some(s) => Ok((k.clone(), s.to_string())),
            None => Err(CliError::config(
                format!("{origin}:config.{k}"),
                "values must be strings",
            )),
        })
        .collect()
}

/// Defaults, then the config file, then flags.
pub fn resolve(subcommand: &str, keys: &[Key], m: &ArgMatches) -> Result<Config, CliError> {
    let mut values = BTreeMap::new();
    for k in keys {
        if let Some(d) = &k.default {
            values.insert(k.name.to_string(), d.clone());
        }
    }
    if let Some(file) = m.get_one::<String>("config") {
        let text = fs::read_to_string(file).map_err(|e| CliError::config(file.clone(), e.to_string()))?;
        let pairs = if Path::new(file).extension().is_some_and(|e| e == "json") {
            parse_manifest(&text, file, subcommand)?
        } else {
            parse_key_values(&text, file)?
        };
        for (k, v) in pairs {
            if !keys.iter().any(|x| x.name == k) {
                return Err(CliError::config(
                    format!("{subcommand}.{k}"),
                    format!("unknown key (in {file})"),
                ));
            }
            values.insert(k, v);
        }
    }
    for k in keys {
        if let Some(v) = m.get_one::<String>(k.name) {
            values.insert(k.name.to_string(), v.clone());
        }
    }
    Ok(Config {
        subcommand: subcommand.to_string(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_value_lines() {
        let p = parse_key_values("# model\na = 0.4\n\ngamma=0.1  # trailing\n", "f").unwrap();
        assert_eq!(p, vec![("a".into(), "0.4".into()), ("gamma".into(), "0.1".into())]);
        assert!(matches!(parse_key_values("a 0.4", "f"), Err(CliError::Config { key, .. }) if key == "f:1"));
        assert!(parse_key_values("a =", "f").is_err());
    }

    #[test]
    fn manifest_must_match_subcommand() {
        let m = r#"{"subcommand":"speed","config":{"a":"0.3"}}"#;
        assert_eq!(
            parse_manifest(m, "m.json", "speed").unwrap(),
            vec![("a".into(), "0.3".into())]
        );
        assert!(parse_manifest(m, "m.json", "spectrum").is_err());
    }
}
