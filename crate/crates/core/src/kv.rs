//! Flat `key=value` text files used for models, controllers and simulation settings.
//!
//! Blank lines and lines starting with `#` are ignored. Keys must be unique.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct KvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    entries: Vec<(String, String, usize)>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self, KvError> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let Some((k, v)) = s.split_once('=') else {
                return Err(KvError {
                    line,
                    message: format!("expected key=value, found {s:?}"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(KvError {
                    line,
                    message: "empty key".into(),
                });
            }
            if let Some((_, _, first)) = entries.iter().find(|e| e.0 == k) {
                return Err(KvError {
                    line,
                    message: format!("duplicate key {k:?} (first on line {first})"),
                });
            }
            entries.push((k.to_string(), v.to_string(), line));
        }
        Ok(Self { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    pub fn get_str(&self, key: &str) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .find(|e| e.0 == key)
            .map(|e| (e.1.as_str(), e.2))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, KvError> {
        match self.get_str(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| !x.is_nan())
                .map(Some)
                .ok_or_else(|| KvError {
                    line,
                    message: format!("{key}: not a number: {v:?}"),
                }),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, KvError> {
        self.get_f64(key)?.ok_or_else(|| KvError {
            line: self.entries.last().map_or(0, |e| e.2),
            message: format!("missing required key {key:?}"),
        })
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, KvError> {
        match self.get_str(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<u64>().map(Some).map_err(|_| KvError {
                line,
                message: format!("{key}: not an unsigned integer: {v:?}"),
            }),
        }
    }

    /// Fails on the first key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), KvError> {
        match self
            .entries
            .iter()
            .find(|e| !allowed.contains(&e.0.as_str()))
        {
            Some((k, _, line)) => Err(KvError {
                line: *line,
                message: format!("unknown key {k:?}"),
            }),
            None => Ok(()),
        }
    }

    /// Error positioned at `key`'s line, or at line 0 when absent.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> KvError {
        KvError {
            line: self.get_str(key).map_or(0, |e| e.1),
            message: message.into(),
        }
    }
}

/// Renders `key=value` lines using shortest round-trip decimal formatting.
pub fn render(pairs: &[(&str, f64)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}
