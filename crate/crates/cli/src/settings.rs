//! Flat `key=value` configuration with `[section]` headers. Keys are stored
//! as `section.key`; command-line flags override file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value, got '{line}'", lineno + 1))
            })?;
            if section.is_empty() {
                return Err(CliError::Usage(format!(
                    "config line {}: key '{}' outside any [section]",
                    lineno + 1,
                    key.trim()
                )));
            }
            settings.set(&format!("{section}.{}", key.trim()), value.trim());
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    pub fn set_opt<T: ToString>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v.to_string());
        }
    }

    /// Applies `section.key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .filter(|(k, _)| k.contains('.'))
                .ok_or_else(|| CliError::Usage(format!("--set expects section.key=value, got '{o}'")))?;
            self.set(k.trim(), v.trim());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("invalid value '{v}' for {key}")))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| CliError::Usage(format!("invalid list entry '{s}' for {key}")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Entries of one section, without the section prefix.
    pub fn section(&self, name: &str) -> impl Iterator<Item = (&str, &str)> {
        let prefix = format!("{name}.");
        self.values
            .iter()
            .filter_map(move |(k, v)| k.strip_prefix(&prefix).map(|k| (k, v.as_str())))
    }

    /// Canonical text form: sorted keys grouped by section.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (k, v) in &self.values {
            let (section, key) = k.split_once('.').unwrap_or(("", k));
            if section != current {
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{key}={v}\n"));
        }
        out
    }
}
