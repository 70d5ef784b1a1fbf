//! `key = value` run configuration, one pair per line, `#` starts a comment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::Invalid;

#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
    base: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, Invalid> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, allowed, base)
    }

    pub fn parse(text: &str, allowed: &[&str], base: PathBuf) -> Result<Self, Invalid> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !allowed.contains(&k) {
                return Err(Invalid(format!("line {}: unknown key '{k}'", lineno + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Invalid(format!("line {}: duplicate key '{k}'", lineno + 1)));
            }
        }
        Ok(Self { entries, base })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Invalid> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Invalid(format!("invalid value '{v}' for '{key}'")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, Invalid> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, Invalid> {
        self.get(key)?
            .ok_or_else(|| Invalid(format!("missing required key '{key}'")))
    }

    /// Comma-separated list of numbers.
    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>, Invalid> {
        match self.raw(key) {
            None | Some("") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Invalid(format!("invalid number '{}' in '{key}'", x.trim())))
                })
                .collect(),
        }
    }

    /// Path value, relative to the directory of the config file.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| self.base.join(v))
    }
}
