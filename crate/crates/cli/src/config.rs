//! Flat key-value configuration: one `section.key = value` per line,
//! `#` comments. CLI flags override file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory of the config file; relative paths resolve against it.
    base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Validation(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let key = key.trim();
            if !key.contains('.') {
                return Err(CliError::Validation(format!(
                    "config line {}: keys are `section.key`, got `{key}`",
                    i + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self {
            values,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    CliError::Validation(format!("config `{key}`: `{v}` is not a number"))
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    CliError::Validation(format!("config `{key}`: `{v}` is not an integer"))
                })
            })
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.get(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                other => Err(CliError::Validation(format!(
                    "config `{key}`: `{other}` is not a boolean"
                ))),
            })
            .transpose()
    }

    /// Path value resolved against the config file's directory.
    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|v| {
            let p = Path::new(v);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                self.base_dir.join(p)
            }
        })
    }

    /// All keys under `section.` as (key-suffix, value) pairs, in key order.
    pub fn section(&self, section: &str) -> Vec<(String, String)> {
        let prefix = format!("{section}.");
        self.values
            .iter()
            .filter_map(|(k, v)| {
                k.strip_prefix(&prefix)
                    .map(|suffix| (suffix.to_string(), v.clone()))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_overrides() {
        let text = "# comment\n\
                    curve.path = data/curve.csv\n\
                    mc.samples = 100000\n\
                    mc.seed = 7\n\
                    budget.wg = 0.87\n\
                    budget.det = 0.75\n";
        let mut cfg = Config::parse(text, Path::new("/tmp/conf")).unwrap();
        assert_eq!(cfg.get_u64("mc.samples").unwrap(), Some(100000));
        assert_eq!(
            cfg.get_path("curve.path").unwrap(),
            PathBuf::from("/tmp/conf/data/curve.csv")
        );
        cfg.set("mc.seed", "9".into());
        assert_eq!(cfg.get_u64("mc.seed").unwrap(), Some(9));
        let budget = cfg.section("budget");
        assert_eq!(budget.len(), 2);
        assert_eq!(budget[0].0, "det");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("justakey\n", Path::new(".")).is_err());
        assert!(Config::parse("nodot = 3\n", Path::new(".")).is_err());
        let cfg = Config::parse("mc.samples = many\n", Path::new(".")).unwrap();
        assert!(cfg.get_u64("mc.samples").is_err());
    }
}
