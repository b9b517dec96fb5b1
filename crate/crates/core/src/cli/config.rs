//! Flat INI-style configuration: `key = value`, optional `[section]` headers
//! that prefix keys as `section.key`, `#` and `;` comments.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

const KNOWN_KEYS: &[&str] = &[
    "enable",
    "disable",
    "strict.tx_origin_all_uses",
    "strict.balance_neq",
    "deprecated.extra",
    "format",
    "min_impact",
    "jobs",
    "fetch.api_base_url",
    "fetch.cache_dir",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileConfig {
    pub values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, ConfigError> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError {
                    line: i + 1,
                    message: format!("unknown key `{key}`"),
                });
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    /// Comma-separated list; missing key is empty.
    pub fn list(&self, key: &str) -> Vec<String> {
        self.get(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default()
    }

    pub fn flag(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(false),
            Some(v) => match v.as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(ConfigError {
                    line: 0,
                    message: format!("`{key}` must be a boolean, got `{v}`"),
                }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = FileConfig::parse("[strict]\ntx_origin_all_uses = true\n").unwrap();
        let b = FileConfig::parse("# c\nstrict.tx_origin_all_uses=true").unwrap();
        assert_eq!(a, b);
        assert!(a.flag("strict.tx_origin_all_uses").unwrap());
        assert!(!a.flag("strict.balance_neq").unwrap());
    }

    #[test]
    fn lists_and_errors() {
        let c = FileConfig::parse("disable = D20, deprecated-apis\n").unwrap();
        assert_eq!(c.list("disable"), vec!["D20", "deprecated-apis"]);
        assert_eq!(FileConfig::parse("x\n").unwrap_err().line, 1);
        assert_eq!(FileConfig::parse("\nbogus = 1").unwrap_err().line, 2);
    }
}
