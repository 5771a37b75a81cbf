//! Flat key-value configuration files and flag/file/default resolution.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Keys every command accepts besides its own.
const COMMON_KEYS: &[&str] = &["command", "version", "threads"];

/// Settings read from a config file, consulted when a flag is absent.
#[derive(Debug, Default)]
pub struct Resolver {
    file: Map<String, Value>,
    resolved: Map<String, Value>,
}

impl Resolver {
    /// Loads a TOML or JSON file (chosen by extension, JSON also sniffed from
    /// a leading `{`). Keys outside `allowed` are rejected.
    pub fn load(path: Option<&Path>, command: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let value: Value = if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?
        } else {
            let t: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))?;
            serde_json::to_value(t).map_err(|e| CliError::Config(e.to_string()))?
        };
        let Value::Object(file) = value else {
            return Err(CliError::Config("config file must hold a flat table of keys".into()));
        };
        for (k, v) in &file {
            if !allowed.contains(&k.as_str()) && !COMMON_KEYS.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown config key {k:?} for {command}")));
            }
            if v.is_object() {
                return Err(CliError::Config(format!("config key {k:?} must be a plain value")));
            }
        }
        if let Some(c) = file.get("command").and_then(Value::as_str) {
            if c != command {
                return Err(CliError::Config(format!("config file is for {c:?}, not {command:?}")));
            }
        }
        Ok(Self {
            file,
            resolved: Map::new(),
        })
    }

    /// Flag, then config file, then `default`. The chosen value is recorded
    /// for the run manifest.
    pub fn get<T: DeserializeOwned + serde::Serialize>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError> {
        let value = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(raw) => serde_json::from_value(raw.clone())
                    .map_err(|e| CliError::Config(format!("config key {key:?}: {e}")))?,
                None => default,
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// Like [`get`](Self::get) without a default.
    pub fn get_opt<T: DeserializeOwned + serde::Serialize>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(Value::Null) | None => None,
                Some(raw) => Some(
                    serde_json::from_value(raw.clone())
                        .map_err(|e| CliError::Config(format!("config key {key:?}: {e}")))?,
                ),
            },
        };
        self.record(key, &value);
        Ok(value)
    }

    /// A boolean switch: set by the flag, or by the file when the flag is off.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        self.get(key, flag.then_some(true), false)
    }

    pub fn record<T: serde::Serialize>(&mut self, key: &str, value: &T) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    /// Threads from flag, then `DEBAYES_THREADS`, then file, then the core count.
    pub fn threads(&mut self, flag: Option<usize>) -> Result<usize, CliError> {
        let env = match std::env::var("DEBAYES_THREADS") {
            Ok(s) if !s.trim().is_empty() => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Config(format!("DEBAYES_THREADS must be a positive integer, got {s:?}")))?,
            ),
            _ => None,
        };
        let default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let threads = self.get("threads", flag.or(env), default)?;
        if threads == 0 {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        Ok(threads)
    }

    /// Resolved settings, with the command name and crate version.
    pub fn manifest(&self, command: &str) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(command));
        m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
        for (k, v) in &self.resolved {
            m.insert(k.clone(), v.clone());
        }
        m
    }
}
