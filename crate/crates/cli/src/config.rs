//! Flat key=value config files with command-line override.
//!
//! A config file holds one `key=value` pair per line (`#` starts a
//! comment). Flags win over config entries, config entries win over
//! defaults. Keys match the long flag names with `-` replaced by `_`.
//! Unknown keys are usage errors so typos do not silently fall back to
//! defaults.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::{CliError, CliResult};

pub struct ConfigOverlay {
    entries: BTreeMap<String, String>,
    consumed: RefCell<Vec<String>>,
}

impl ConfigOverlay {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Run(format!("cannot read config {}: {e}", path.display())))?;
            for (no, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    CliError::Usage(format!(
                        "config line {} is not key=value: `{line}`",
                        no + 1
                    ))
                })?;
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self {
            entries,
            consumed: RefCell::new(Vec::new()),
        })
    }

    fn lookup(&self, key: &str) -> Option<&str> {
        self.consumed.borrow_mut().push(key.to_string());
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Flag value, else config entry, else default.
    pub fn pick<T: FromStr + Clone>(&self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        Ok(self.pick_opt(key, flag)?.unwrap_or(default))
    }

    /// Flag value, else config entry, else `None`.
    pub fn pick_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        if flag.is_some() {
            self.consumed.borrow_mut().push(key.to_string());
            return Ok(flag);
        }
        match self.lookup(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key `{key}` has bad value `{raw}`"))),
            None => Ok(None),
        }
    }

    /// Like [`Self::pick_opt`] for clap `ValueEnum` types.
    pub fn pick_enum<T: clap::ValueEnum + Clone + Copy>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        if flag.is_some() {
            self.consumed.borrow_mut().push(key.to_string());
            return Ok(flag);
        }
        match self.lookup(key) {
            Some(raw) => T::from_str(raw, true)
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key `{key}` has bad value `{raw}`"))),
            None => Ok(None),
        }
    }

    /// Rejects config keys that no flag consumed.
    pub fn finish(&self) -> CliResult<()> {
        let consumed = self.consumed.borrow();
        for key in self.entries.keys() {
            if !consumed.iter().any(|k| k == key) {
                return Err(CliError::Usage(format!("unknown config key `{key}`")));
            }
        }
        Ok(())
    }
}
