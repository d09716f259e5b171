//! Flat sectioned key-value config files:
//!
//! ```text
//! [tau-scan]
//! beta = 0.3
//! q = 4, 4.5, 5, 5.5, 6
//! tau_levels = 4..10
//! ```
//!
//! One section per subcommand; `#` starts a comment.

use std::collections::BTreeMap;

pub type Section = BTreeMap<String, String>;

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, Section>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(ConfigError(format!(
                        "line {}: malformed section header",
                        lineno + 1
                    )));
                }
                let name = line[1..line.len() - 1].trim().to_string();
                if name.is_empty() {
                    return Err(ConfigError(format!(
                        "line {}: empty section name",
                        lineno + 1
                    )));
                }
                sections.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected key = value",
                    lineno + 1
                )));
            };
            let section = current.clone().ok_or_else(|| {
                ConfigError(format!("line {}: key outside any section", lineno + 1))
            })?;
            sections
                .get_mut(&section)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { sections })
    }

    pub fn section(&self, name: &str) -> Result<&Section, ConfigError> {
        self.sections
            .get(name)
            .ok_or_else(|| ConfigError(format!("missing section [{name}]")))
    }
}

pub fn get_str<'a>(s: &'a Section, key: &str) -> Result<&'a str, ConfigError> {
    s.get(key)
        .map(|v| v.as_str())
        .ok_or_else(|| ConfigError(format!("missing key '{key}'")))
}

pub fn get_str_or<'a>(s: &'a Section, key: &str, default: &'a str) -> &'a str {
    s.get(key).map(|v| v.as_str()).unwrap_or(default)
}

pub fn get_f64_or(s: &Section, key: &str, default: f64) -> Result<f64, ConfigError> {
    match s.get(key) {
        Some(v) => parse_f64(v, key),
        None => Ok(default),
    }
}

pub fn get_usize_or(s: &Section, key: &str, default: usize) -> Result<usize, ConfigError> {
    match s.get(key) {
        Some(v) => v
            .parse()
            .map_err(|_| ConfigError(format!("key '{key}' is not an integer"))),
        None => Ok(default),
    }
}

fn parse_f64(v: &str, key: &str) -> Result<f64, ConfigError> {
    let v = v.trim();
    if v == "inf" {
        return Ok(f64::INFINITY);
    }
    v.parse()
        .map_err(|_| ConfigError(format!("key '{key}' is not a number: '{v}'")))
}

/// Comma-separated float list; `inf` allowed.
pub fn get_f64_list(s: &Section, key: &str) -> Result<Vec<f64>, ConfigError> {
    get_str(s, key)?
        .split(',')
        .map(|p| parse_f64(p, key))
        .collect()
}

/// Comma-separated integer list.
pub fn get_usize_list(s: &Section, key: &str) -> Result<Vec<usize>, ConfigError> {
    get_str(s, key)?
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| ConfigError(format!("key '{key}' has a non-integer entry: '{p}'")))
        })
        .collect()
}

/// Inclusive integer range `a..b`.
pub fn get_range(s: &Section, key: &str) -> Result<Vec<u32>, ConfigError> {
    let v = get_str(s, key)?;
    let Some((a, b)) = v.split_once("..") else {
        return Err(ConfigError(format!("key '{key}' must look like a..b")));
    };
    let a: u32 = a
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}' range start is not an integer")))?;
    let b: u32 = b
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}' range end is not an integer")))?;
    if b < a {
        return Err(ConfigError(format!("key '{key}' range is reversed")));
    }
    Ok((a..=b).collect())
}
