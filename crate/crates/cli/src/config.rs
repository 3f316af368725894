//! Resolved run configuration: the flat "key = value" file written next to
//! every command's outputs, sufficient to reproduce the run.

use std::collections::BTreeMap;
use std::fmt::Display;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedConfig {
    entries: Vec<(String, String)>,
}

impl ResolvedConfig {
    pub fn new() -> ResolvedConfig {
        ResolvedConfig::default()
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        debug_assert!(
            !self.entries.iter().any(|(k, _)| k == key),
            "duplicate config key {key}"
        );
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ResolvedConfig, CliError> {
        let mut entries = Vec::new();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Data(format!("config line {}: expected \"key = value\"", i + 1))
            })?;
            let k = k.trim().to_string();
            let v = v.trim().to_string();
            if seen.insert(k.clone(), ()).is_some() {
                return Err(CliError::Data(format!("config line {}: duplicate key {k:?}", i + 1)));
            }
            entries.push((k, v));
        }
        Ok(ResolvedConfig { entries })
    }

    /// Checks every key against the set a command understands; unknown keys
    /// are rejected just like unknown flags.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), CliError> {
        for (k, _) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown config key {k:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips() {
        let mut c = ResolvedConfig::new();
        c.set("model", "dsaw");
        c.set("dim", 16);
        c.set("lr", 0.05);
        let text = c.to_text();
        assert_eq!(text, "model = dsaw\ndim = 16\nlr = 0.05\n");
        assert_eq!(ResolvedConfig::from_text(&text).unwrap(), c);
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        assert!(ResolvedConfig::from_text("a = 1\na = 2\n").is_err());
        assert!(ResolvedConfig::from_text("just words\n").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let c = ResolvedConfig::from_text("dim = 4\nbogus = 1\n").unwrap();
        assert!(c.check_keys(&["dim"]).is_err());
        assert!(c.check_keys(&["dim", "bogus"]).is_ok());
    }
}
