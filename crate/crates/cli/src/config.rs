//! Flat `key = value` experiment configs.
//!
//! One assignment per line, `#` starts a comment, keys are lowercase with
//! underscores. Every command declares the keys it accepts and anything else
//! is rejected, so a typo fails loudly instead of silently using a default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    pairs: BTreeMap<String, String>,
    source: Option<PathBuf>,
}

impl Config {
    /// Config with no assignments; every lookup falls back to its default.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!(
                    "{}:{}: empty key",
                    path.display(),
                    lineno + 1
                )));
            }
            if pairs.insert(key.clone(), value).is_some() {
                return Err(CliError::Config(format!(
                    "{}:{}: duplicate key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        Ok(Self { pairs, source: Some(path.to_path_buf()) })
    }

    /// Rejects keys outside the command's accepted set.
    pub fn allow_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .pairs
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown config key(s) {}; accepted keys: {}",
                unknown.join(", "),
                allowed.join(", ")
            )))
        }
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing required config key {key:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, raw: &str) -> Result<T, CliError> {
        raw.parse().map_err(|_| {
            CliError::Config(format!(
                "config key {key:?}: cannot parse {raw:?} as {}",
                std::any::type_name::<T>()
            ))
        })
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => self.parse(key, raw),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.require(key)?;
        self.parse(key, raw)
    }

    pub fn u32(&self, key: &str, default: u32) -> Result<u32, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => self.parse(key, raw),
        }
    }

    pub fn require_u32(&self, key: &str) -> Result<u32, CliError> {
        let raw = self.require(key)?;
        self.parse(key, raw)
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => self.parse(key, raw),
        }
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, CliError> {
        let raw = self.require(key)?;
        self.parse(key, raw)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated float list; `None` when the key is absent.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in raw.split(',') {
            out.push(self.parse(key, item.trim())?);
        }
        Ok(Some(out))
    }

    pub fn u32_list(&self, key: &str) -> Result<Option<Vec<u32>>, CliError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in raw.split(',') {
            out.push(self.parse(key, item.trim())?);
        }
        Ok(Some(out))
    }

    /// `key = value` lines in key order, for report metadata echoes.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}
