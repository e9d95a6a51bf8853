//! Flat `key = value` config files plus CLI-over-config-over-default
//! precedence, with the provenance of every resolved value recorded for the
//! manifest.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {} is not 'key = value': {raw}", lineno + 1))?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }
}

/// One resolved parameter: value plus where it came from.
#[derive(Debug, Clone)]
pub struct Resolved<T> {
    pub value: T,
    pub source: &'static str,
}

/// Resolve precedence: CLI flag > config file > built-in default.
pub fn resolve<T: Clone + std::str::FromStr>(
    cli: Option<T>,
    config: &ConfigFile,
    key: &str,
    default: T,
) -> Result<Resolved<T>, String> {
    if let Some(v) = cli {
        return Ok(Resolved {
            value: v,
            source: "cli",
        });
    }
    if let Some(raw) = config.entries.get(key) {
        let value = raw
            .parse::<T>()
            .map_err(|_| format!("config key '{key}': cannot parse '{raw}'"))?;
        return Ok(Resolved {
            value,
            source: "config",
        });
    }
    Ok(Resolved {
        value: default,
        source: "default",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_with_precedence() {
        let cfg = ConfigFile::parse("# comment\nn = 2\nk=1\n t_end = 12.5 \n").unwrap();
        assert_eq!(cfg.entries["n"], "2");
        let r = resolve(None, &cfg, "t_end", 50.0f64).unwrap();
        assert_eq!(r.value, 12.5);
        assert_eq!(r.source, "config");
        let r = resolve(Some(3.0f64), &cfg, "t_end", 50.0).unwrap();
        assert_eq!(r.value, 3.0);
        assert_eq!(r.source, "cli");
        let r = resolve::<f64>(None, &cfg, "dt_safety", 0.4).unwrap();
        assert_eq!(r.source, "default");
        assert!(ConfigFile::parse("garbage line").is_err());
    }
}
