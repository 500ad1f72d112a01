//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments run to the end of the line
//! version = 1
//! seed = 20240601
//! L = 100, 1000, 10000
//! ```
//!
//! A file must declare `version = 1`. Values given with `--set key=value`
//! override the file. Every key must be consumed by the command; leftovers
//! are reported as errors so typos never pass silently.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "ASHT_OUT_DIR";

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", idx + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", idx + 1)));
            }
            if values.insert(k.clone(), v).is_some() {
                return Err(CliError::Config(format!("line {}: key `{k}` given twice", idx + 1)));
            }
        }
        let version = values
            .remove("version")
            .ok_or_else(|| CliError::Config(format!("config must declare `version = {CONFIG_VERSION}`")))?;
        if version.parse::<u32>().ok() != Some(CONFIG_VERSION) {
            return Err(CliError::Config(format!(
                "unsupported config version `{version}` (this build reads version {CONFIG_VERSION})"
            )));
        }
        Ok(Self {
            values,
            used: RefCell::default(),
        })
    }

    /// Load a file (if given) and apply `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{o}`")))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn parse_value<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
        v.parse::<T>()
            .map_err(|_| CliError::Config(format!("key `{key}`: cannot parse `{v}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.raw(key) {
            Some(v) => Self::parse_value(key, v),
            None => Ok(default),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        match self.raw(key) {
            Some(v) => Self::parse_value(key, v),
            None => Err(CliError::Config(format!("missing required key `{key}`"))),
        }
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key).map(|v| Self::parse_value(key, v)).transpose()
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> CliResult<Vec<T>> {
        match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Self::parse_value(key, s))
                .collect(),
            None => Ok(default),
        }
    }

    /// Root seed of a randomized pipeline; never defaulted.
    pub fn seed(&self) -> CliResult<u64> {
        self.optional("seed")?
            .ok_or_else(|| CliError::Config("missing `seed`: randomized commands need an explicit root seed".into()))
    }

    pub fn path(&self, key: &str) -> CliResult<PathBuf> {
        self.require::<String>(key).map(PathBuf::from)
    }

    /// Output directory: command-line flag, then environment override, then
    /// the `out_dir` key, then the working directory.
    pub fn out_dir(&self, flag: Option<&Path>) -> CliResult<PathBuf> {
        let from_key = self.optional::<String>("out_dir")?;
        if let Some(p) = flag {
            return Ok(p.to_path_buf());
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV) {
            return Ok(PathBuf::from(p));
        }
        Ok(from_key.map_or_else(|| PathBuf::from("."), PathBuf::from))
    }

    /// Fail on keys no command asked for.
    pub fn check_all_used(&self) -> CliResult<()> {
        let used = self.used.borrow();
        let unused: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown keys for this command: {}",
                unused.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_keys() {
        let c = Config::parse("version = 1\n# comment\nseed = 7 # trailing\nL = 1, 2,3\n").unwrap();
        assert_eq!(c.seed().unwrap(), 7);
        assert_eq!(c.list::<f64>("L", vec![]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(c.get("W", 6usize).unwrap(), 6);
        c.check_all_used().unwrap();
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Config::parse("seed = 1\n").is_err());
        assert!(Config::parse("version = 2\n").is_err());
        assert!(Config::parse("version = 1\nnonsense\n").is_err());
        assert!(Config::parse("version = 1\na = 1\na = 2\n").is_err());
    }

    #[test]
    fn missing_seed_and_unknown_keys() {
        let c = Config::parse("version = 1\ntypo = 3\n").unwrap();
        assert!(c.seed().is_err());
        assert!(c.check_all_used().is_err());
        let c = Config::parse("version = 1\nW = six\n").unwrap();
        assert!(c.get("W", 6usize).is_err());
    }
}
