//! Flat `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored. Keys
//! are the long flag names without the leading dashes (`ref = 1024`,
//! `resolutions = 4,8,16`, `paper-scale = true`).

use std::path::Path;

use crate::CliError;

/// Settings in file order, as `(line number, key, value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub entries: Vec<(usize, String, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    n + 1
                )));
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", n + 1)));
            }
            entries.push((n + 1, key.to_string(), value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let c = ConfigFile::parse("# study\nref = 512 # fine\n\n  resolutions=4,8 \n").unwrap();
        assert_eq!(
            c.entries,
            vec![
                (2, "ref".to_string(), "512".to_string()),
                (4, "resolutions".to_string(), "4,8".to_string())
            ]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("ref 512").is_err());
        assert!(ConfigFile::parse(" = 3").is_err());
    }
}
