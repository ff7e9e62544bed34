use std::collections::BTreeMap;
use std::path::Path;

use lpconv_core::opnorm::TruncationSchedule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::params::parse_real;

/// A config file: zero or more `[[experiment]]` blocks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub experiment: Vec<ExperimentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Numeric values are decimal strings (`"3"`, `"4/3"`, `"1e-6"`, `"inf"`).
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub seed: u64,
    /// Output path prefix, relative to the output directory. Defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Overrides for [`TruncationSchedule`]; absent fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_squarings: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_budget: Option<usize>,
}

impl ScheduleSpec {
    pub fn resolve(&self, seed: u64, dense_limit: usize, location: &str) -> Result<TruncationSchedule, CliError> {
        let mut s = TruncationSchedule { seed, dense_limit, ..Default::default() };
        if let Some(r) = &self.radii {
            s.radii = r.clone();
        }
        if let Some(tol) = &self.tol {
            s.tol = parse_real(tol).map_err(|m| CliError::parse(format!("{location} schedule.tol"), m))?;
        }
        s.max_iter = self.max_iter.unwrap_or(s.max_iter);
        s.window = self.window.unwrap_or(s.window);
        s.starts = self.starts.unwrap_or(s.starts);
        s.l2_squarings = self.l2_squarings.unwrap_or(s.l2_squarings);
        s.l2_budget = self.l2_budget.unwrap_or(s.l2_budget);
        s.validate().map_err(|e| CliError::parse(format!("{location} schedule"), e.to_string()))?;
        Ok(s)
    }
}

impl Config {
    pub fn parse(text: &str, origin: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::parse(origin, e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(&origin, e.to_string()))?;
        Config::parse(&text, &origin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse("[[experiment]]\nname = \"duality\"\ngruop = \"z\"\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("gruop"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn numeric_params_must_be_strings() {
        assert!(Config::parse("[[experiment]]\nname = \"duality\"\nparams = { p = 3 }\n", "cfg").is_err());
        let c = Config::parse("[[experiment]]\nname = \"duality\"\nparams = { p = \"3\" }\n", "cfg").unwrap();
        assert_eq!(c.experiment[0].params["p"], "3");
    }

    #[test]
    fn empty_file() {
        assert!(Config::parse("", "cfg").unwrap().experiment.is_empty());
    }

    #[test]
    fn schedule_overrides() {
        let s = ScheduleSpec { radii: Some(vec![1, 3]), tol: Some("1e-10".into()), ..Default::default() };
        let t = s.resolve(5, 64, "x").unwrap();
        assert_eq!((t.radii, t.tol, t.seed, t.starts), (vec![1, 3], 1e-10, 5, 16));
        let bad = ScheduleSpec { radii: Some(vec![3, 1]), ..Default::default() };
        assert!(bad.resolve(0, 64, "x").is_err());
    }
}
