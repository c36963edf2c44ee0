//! Config ingestion: file, dotted overrides, durations and validation.

use std::path::PathBuf;

use clap::Args;
use storedlight::{validate_config, ExperimentConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML (or .json) experiment configuration; built-in defaults if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dotted-path override in file units, e.g. `medium.tau_storage_ms=2.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    /// Loads the file (or defaults) and applies the overrides in order.
    pub fn load(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for item in &self.set {
            let (key, value) = parse_assignment(item)?;
            cfg = cfg.with_override(key, value)?;
        }
        Ok(cfg)
    }
}

/// `key=value`, where the value is read as JSON when possible (numbers,
/// arrays, booleans) and as a plain string otherwise.
pub fn parse_assignment(item: &str) -> CliResult<(&str, serde_json::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{item}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(CliError::Usage(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    Ok((key, value))
}

/// A duration as typed: `value`·10^`exp10` seconds. Conversions are a single
/// multiplication or division by a power of ten, so `5us` is exactly 5 µs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Duration {
    value: f64,
    exp10: i32,
}

impl Duration {
    /// The duration in units of 10^`exp10` s.
    pub fn in_unit(self, exp10: i32) -> f64 {
        let k = self.exp10 - exp10;
        if k >= 0 {
            self.value * 10f64.powi(k)
        } else {
            self.value / 10f64.powi(-k)
        }
    }
}

/// Duration with a unit suffix (`s`, `ms`, `us`/`µs`, `ns`).
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let split = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .ok_or_else(|| format!("duration `{s}` needs a unit (s, ms, us, ns)"))?;
    let (num, unit) = s.split_at(split);
    let value: f64 = num.parse().map_err(|_| format!("bad number in duration `{s}`"))?;
    let exp10 = match unit.trim() {
        "s" => 0,
        "ms" => -3,
        "us" | "µs" | "μs" => -6,
        "ns" => -9,
        other => return Err(format!("unknown time unit `{other}`")),
    };
    if value.is_finite() {
        Ok(Duration { value, exp10 })
    } else {
        Err(format!("duration `{s}` is not finite"))
    }
}

/// Fails with exit 1 on violations; returns the warnings otherwise.
pub fn require_valid(cfg: &ExperimentConfig) -> CliResult<Vec<String>> {
    let report = validate_config(cfg);
    if report.is_valid() {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        Ok(report.warnings)
    } else {
        Err(CliError::Validation(report.violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        let secs = |s: &str| parse_duration(s).unwrap().in_unit(0);
        assert_eq!(secs("5us"), 5e-6);
        assert_eq!(secs("3ms"), 3e-3);
        assert_eq!(secs("2.5 s"), 2.5);
        assert_eq!(secs("1e3ns"), 1e-6);
        assert_eq!(secs("5µs"), 5e-6);
        assert_eq!(parse_duration("5us").unwrap().in_unit(-6), 5.0);
        assert_eq!(parse_duration("0.3ms").unwrap().in_unit(-6), 300.0);
        assert!(parse_duration("5").is_err());
        assert!(parse_duration("5 min").is_err());
    }

    #[test]
    fn assignments() {
        let (k, v) = parse_assignment("medium.od_fiber=4.5").unwrap();
        assert_eq!((k, v), ("medium.od_fiber", serde_json::json!(4.5)));
        let (_, v) = parse_assignment("protocol.interface_distances_mm=[0, 1]").unwrap();
        assert_eq!(v, serde_json::json!([0, 1]));
        let (_, v) = parse_assignment("species=Rb87").unwrap();
        assert_eq!(v, serde_json::json!("Rb87"));
        assert!(parse_assignment("no_equals").is_err());
        assert!(parse_assignment("=3").is_err());
    }
}
