//! Config-file merging and validation.
//!
//! Config files are line-based `key = value` text with `#` comments. Keys
//! mirror the long flag names of the subcommand. Flags win over file
//! values; unknown keys abort before any computation.

use std::collections::BTreeMap;
use std::path::Path;

pub struct FileConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<Vec<String>>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self {
            values: BTreeMap::new(),
            consumed: Default::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config line {} is not `key = value`: `{raw}`",
                    lineno + 1
                ));
            };
            let key = key.trim().to_string();
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(format!("config key `{key}` given twice"));
            }
        }
        Ok(Self {
            values,
            consumed: Default::default(),
        })
    }

    /// Resolve one option: the CLI flag wins, then the file value, then the
    /// default. Parse failures name the key.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, String> {
        self.consumed.borrow_mut().push(key.to_string());
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
            None => Ok(default),
        }
    }

    /// Same, with no default: stays `None` unless given somewhere.
    pub fn resolve_opt<T: std::str::FromStr>(
        &self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, String> {
        self.consumed.borrow_mut().push(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| format!("config key `{key}`: cannot parse `{raw}`")),
            None => Ok(None),
        }
    }

    /// After resolving every known key, reject leftovers.
    pub fn finish(&self) -> Result<(), String> {
        let consumed = self.consumed.borrow();
        for key in self.values.keys() {
            if !consumed.iter().any(|c| c == key) {
                return Err(format!("unknown config key `{key}`"));
            }
        }
        Ok(())
    }
}

pub fn require_positive(name: &str, value: f64) -> Result<f64, String> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{name}` must be positive and finite, got {value}"))
    }
}

pub fn require_min_u32(name: &str, value: u32, min: u32) -> Result<u32, String> {
    if value >= min {
        Ok(value)
    } else {
        Err(format!("`{name}` must be at least {min}, got {value}"))
    }
}

/// Parse a comma-separated triple "a,b,c".
pub fn parse_triple(name: &str, raw: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("`{name}` needs three comma-separated numbers, got `{raw}`"));
    }
    let mut out = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| format!("`{name}`: cannot parse `{p}`"))?;
    }
    Ok(out)
}

/// Parse a comma-separated list of positive reals.
pub fn parse_list(name: &str, raw: &str) -> Result<Vec<f64>, String> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{name}`: cannot parse `{p}`"))
        })
        .collect()
}
