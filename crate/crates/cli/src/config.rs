//! Run configuration: flat `key=value` text with section prefixes, or a
//! JSON object (nested objects flatten to dotted keys). Unknown keys are
//! rejected, and every run echoes its fully resolved configuration into the
//! output directory so it can be replayed with `--config`.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| ConfigError(format!("bad JSON config: {e}")))?;
            let mut values = BTreeMap::new();
            flatten_json("", &value, &mut values)?;
            return Ok(RunConfig { values });
        }
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {line:?}", idx + 1)))?;
            values.insert(key.trim().to_string(), val.trim().to_string());
        }
        Ok(RunConfig { values })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    /// Fails when the config holds keys outside the allowed set.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError(format!(
                    "unknown config key {key:?}; known keys: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        match self.values.get(key) {
            Some(v) => v.clone(),
            None => {
                self.set(key, default);
                default.to_string()
            }
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| ConfigError(format!("{key} must be a number, got {v:?}"))),
            None => {
                self.set(key, default);
                Ok(default)
            }
        }
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| ConfigError(format!("{key} must be an integer, got {v:?}"))),
            None => {
                self.set(key, default);
                Ok(default)
            }
        }
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.values.get(key) {
            Some(v) => v.parse().map_err(|_| ConfigError(format!("{key} must be an integer, got {v:?}"))),
            None => {
                self.set(key, default);
                Ok(default)
            }
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.values.get(key).map(|s| s.as_str()) {
            Some("true") | Some("1") | Some("on") => Ok(true),
            Some("false") | Some("0") | Some("off") => Ok(false),
            Some(v) => Err(ConfigError(format!("{key} must be a boolean, got {v:?}"))),
            None => {
                self.set(key, default);
                Ok(default)
            }
        }
    }

    /// Comma-separated positive integers.
    pub fn usize_list_or(&mut self, key: &str, default: &str) -> Result<Vec<usize>, ConfigError> {
        let raw = self.str_or(key, default);
        raw.split(',')
            .map(|s| s.trim().parse().map_err(|_| ConfigError(format!("{key}: bad integer {s:?}"))))
            .collect()
    }

    /// Serializes as sorted `key=value` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Writes the resolved configuration into the run's output directory.
    pub fn echo(&self, out_dir: &Path) -> std::io::Result<()> {
        std::fs::write(out_dir.join("config.txt"), self.render())
    }
}

fn flatten_json(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, String>) -> Result<(), ConfigError> {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, out)?;
            }
            Ok(())
        }
        serde_json::Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
            Ok(())
        }
        serde_json::Value::Number(n) => {
            out.insert(prefix.to_string(), n.to_string());
            Ok(())
        }
        serde_json::Value::Bool(b) => {
            out.insert(prefix.to_string(), b.to_string());
            Ok(())
        }
        other => Err(ConfigError(format!("unsupported JSON value at {prefix}: {other}"))),
    }
}
