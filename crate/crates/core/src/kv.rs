//! Minimal `key = value` text format used by scenario and experiment files.
//!
//! One entry per line, `#` starts a comment, and each key may appear only
//! once. Keys are case-sensitive, so `n` (sample size) and `N` (replicates)
//! are distinct.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Entry {
    pub line: usize,
    pub value: String,
    used: std::cell::Cell<bool>,
}

/// Parsed entries by key.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    entries: BTreeMap<String, Entry>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Spec {
                    line,
                    key: content.to_string(),
                    message: "expected 'key = value'".into(),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Spec {
                    line,
                    key,
                    message: "empty key".into(),
                });
            }
            let entry = Entry {
                line,
                value: value.trim().to_string(),
                used: std::cell::Cell::new(false),
            };
            if entries.insert(key.clone(), entry).is_some() {
                return Err(Error::Spec {
                    line,
                    key,
                    message: "duplicate key".into(),
                });
            }
        }
        Ok(Self { entries })
    }

    /// Raw value of the first present alias.
    pub fn raw(&self, aliases: &[&str]) -> Option<(&str, &Entry)> {
        aliases.iter().find_map(|a| {
            self.entries.get_key_value(*a).map(|(k, e)| {
                e.used.set(true);
                (k.as_str(), e)
            })
        })
    }

    /// Parses the value of the first present alias with `f`.
    pub fn get_with<T, F>(&self, aliases: &[&str], f: F) -> Result<Option<T>>
    where
        F: FnOnce(&str) -> std::result::Result<T, String>,
    {
        match self.raw(aliases) {
            None => Ok(None),
            Some((key, e)) => f(&e.value).map(Some).map_err(|message| Error::Spec {
                line: e.line,
                key: key.to_string(),
                message,
            }),
        }
    }

    pub fn get<T>(&self, aliases: &[&str]) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get_with(aliases, |v| v.parse::<T>().map_err(|e| format!("'{v}': {e}")))
    }

    pub fn require<T>(&self, aliases: &[&str]) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        self.get(aliases)?.ok_or_else(|| Error::Spec {
            line: 0,
            key: aliases[0].to_string(),
            message: "missing required key".into(),
        })
    }

    /// Fails on the first key no caller asked for.
    pub fn reject_unused(&self) -> Result<()> {
        match self.entries.iter().find(|(_, e)| !e.used.get()) {
            Some((k, e)) => Err(Error::Spec {
                line: e.line,
                key: k.clone(),
                message: "unknown key".into(),
            }),
            None => Ok(()),
        }
    }
}

/// Splits `a, b(c, d), e` on top-level commas.
pub fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

/// Parses `name(arg1, arg2, ...)` or a bare `name`.
pub fn call_syntax(s: &str) -> std::result::Result<(String, Vec<f64>), String> {
    let s = s.trim();
    match s.split_once('(') {
        None => Ok((s.to_ascii_lowercase(), Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("missing ')' in '{s}'"))?;
            let args = inner
                .split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|e| format!("bad number '{}' in '{s}': {e}", a.trim()))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((name.trim().to_ascii_lowercase(), args))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let f = KvFile::parse("# header\nn = 100\n  t = 0.5 # change\nN = 7\n").unwrap();
        assert_eq!(f.require::<usize>(&["n"]).unwrap(), 100);
        assert_eq!(f.require::<f64>(&["t"]).unwrap(), 0.5);
        assert_eq!(f.require::<usize>(&["N"]).unwrap(), 7);
        assert!(f.reject_unused().is_ok());
    }

    #[test]
    fn errors_name_the_key() {
        let f = KvFile::parse("n = abc").unwrap();
        match f.require::<usize>(&["n"]).unwrap_err() {
            Error::Spec { key, line, .. } => {
                assert_eq!(key, "n");
                assert_eq!(line, 1);
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            KvFile::parse("n = 1\nn = 2").unwrap_err(),
            Error::Spec { line: 2, .. }
        ));
        assert!(matches!(
            KvFile::parse("just words").unwrap_err(),
            Error::Spec { line: 1, .. }
        ));
        let f = KvFile::parse("bogus = 1").unwrap();
        assert!(matches!(f.reject_unused().unwrap_err(), Error::Spec { key, .. } if key == "bogus"));
    }

    #[test]
    fn call_syntax_and_splitting() {
        assert_eq!(
            split_top_level("exp(1), normal(0, 1)"),
            vec!["exp(1)".to_string(), "normal(0, 1)".to_string()]
        );
        assert_eq!(call_syntax("normal(0, 2)").unwrap(), ("normal".into(), vec![0.0, 2.0]));
        assert_eq!(call_syntax("independence").unwrap(), ("independence".into(), vec![]));
        assert!(call_syntax("exp(1").is_err());
    }
}
