use std::collections::BTreeMap;

use lpconv_core::funcalg::{parse_exponent, RandomMode};
use lpconv_core::rdlab::Family;
use lpconv_core::{Group, GroupFunction, C64};

use crate::error::CliError;
use crate::registry::ExperimentInfo;

/// Decimal, `a/b` or `inf`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let bad = || format!("expected a decimal number, got `{s}`");
    let v = match t {
        "inf" | "infinity" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        _ => match t.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                a / b
            }
            None => t.parse().map_err(|_| bad())?,
        },
    };
    if v.is_nan() {
        return Err(bad());
    }
    Ok(v)
}

/// Typed access to one block's `params`, with registry defaults.
pub struct Params<'a> {
    info: &'static ExperimentInfo,
    map: &'a BTreeMap<String, String>,
    location: String,
}

impl<'a> Params<'a> {
    pub fn new(info: &'static ExperimentInfo, map: &'a BTreeMap<String, String>, location: &str) -> Result<Self, CliError> {
        if let Some(k) = map.keys().find(|k| !info.accepts(k)) {
            return Err(CliError::parse(location, format!("unknown parameter `{k}` for experiment `{}`", info.name)));
        }
        if let Some(k) = info.required.iter().find(|k| !map.contains_key(**k)) {
            return Err(CliError::parse(location, format!("missing required parameter `{k}`")));
        }
        Ok(Params { info, map, location: location.to_string() })
    }

    pub fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::parse(format!("{} params.{key}", self.location), msg.to_string())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str).or_else(|| self.info.default_of(key))
    }

    fn need(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).ok_or_else(|| self.err(key, "missing"))
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        parse_real(self.need(key)?).map_err(|m| self.err(key, m))
    }

    pub fn opt_real(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|s| parse_real(s).map_err(|m| self.err(key, m))).transpose()
    }

    pub fn exponent(&self, key: &str) -> Result<f64, CliError> {
        parse_exponent(self.need(key)?).map_err(|e| self.err(key, e))
    }

    pub fn count(&self, key: &str) -> Result<usize, CliError> {
        let s = self.need(key)?;
        s.trim().parse().map_err(|_| self.err(key, format!("expected a non-negative integer, got `{s}`")))
    }

    pub fn opt_count(&self, key: &str) -> Result<Option<usize>, CliError> {
        if self.has(key) { self.count(key).map(Some) } else { Ok(None) }
    }

    pub fn counts(&self, key: &str) -> Result<Vec<usize>, CliError> {
        let s = self.need(key)?;
        let v: Vec<usize> = s
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| self.err(key, format!("expected integers, got `{s}`"))))
            .collect::<Result<_, _>>()?;
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(self.err(key, "values must be strictly increasing"));
        }
        Ok(v)
    }

    pub fn reals(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.need(key)?.split(',').map(|x| parse_real(x).map_err(|m| self.err(key, m))).collect()
    }

    pub fn text(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn mode(&self, key: &str) -> Result<RandomMode, CliError> {
        match self.need(key)?.trim() {
            "nonneg" | "non_neg" => Ok(RandomMode::NonNeg),
            "real" => Ok(RandomMode::Real),
            "complex" => Ok(RandomMode::Complex),
            other => Err(self.err(key, format!("unknown mode `{other}` (nonneg, real, complex)"))),
        }
    }

    pub fn density(&self, key: &str) -> Result<f64, CliError> {
        let d = self.real(key)?;
        if !(d > 0.0 && d <= 1.0) {
            return Err(self.err(key, format!("density {d} outside (0, 1]")));
        }
        Ok(d)
    }

    pub fn families(&self, key: &str) -> Result<Vec<Family>, CliError> {
        self.need(key)?.split(',').map(|s| s.parse::<Family>().map_err(|e| self.err(key, e))).collect()
    }

    /// Kernel syntax: `identity`, `delta:<g>`, `ball:<n>`, `sphere:<n>` or
    /// explicit entries `<g>=<re>[:<im>] | <g>=...`. The optional `scale`
    /// parameter multiplies the result.
    pub fn kernel(&self, key: &str, group: &Group) -> Result<GroupFunction, CliError> {
        let s = self.need(key)?.trim();
        let lab = |e: lpconv_core::LabError| self.err(key, e);
        let count = |n: &str| n.trim().parse::<usize>().map_err(|_| self.err(key, format!("bad radius `{n}`")));
        let f = if s == "identity" || s == "e" {
            GroupFunction::identity(group)
        } else if let Some(g) = s.strip_prefix("delta:") {
            GroupFunction::delta(group, &group.parse_element(g).map_err(lab)?).map_err(lab)?
        } else if let Some(n) = s.strip_prefix("ball:") {
            GroupFunction::ball_indicator(group, count(n)?).map_err(lab)?
        } else if let Some(n) = s.strip_prefix("sphere:") {
            GroupFunction::sphere_indicator(group, count(n)?).map_err(lab)?
        } else {
            let mut entries = Vec::new();
            for part in s.split('|') {
                let (g, v) = part
                    .rsplit_once('=')
                    .ok_or_else(|| self.err(key, format!("entry `{}` is not `<element>=<value>`", part.trim())))?;
                let (re, im) = match v.split_once(':') {
                    Some((a, b)) => (parse_real(a), parse_real(b)),
                    None => (parse_real(v), Ok(0.0)),
                };
                let c = C64::new(re.map_err(|m| self.err(key, m))?, im.map_err(|m| self.err(key, m))?);
                entries.push((group.parse_element(g.trim()).map_err(lab)?, c));
            }
            GroupFunction::from_entries(group, entries).map_err(lab)?
        };
        match self.opt_real("scale")? {
            Some(c) if c != 1.0 => Ok(f.scale(C64::new(c, 0.0))),
            _ => Ok(f),
        }
    }

    /// Both `c` and `d`, or neither.
    pub fn given_fit(&self) -> Result<Option<(f64, f64)>, CliError> {
        match (self.opt_real("c")?, self.opt_real("d")?) {
            (Some(c), Some(d)) => Ok(Some((c, d))),
            (None, None) => Ok(None),
            _ => Err(self.err("c", "give both `c` and `d` or neither")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::lookup;

    fn map(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn reals() {
        assert_eq!(parse_real("4/3").unwrap(), 4.0 / 3.0);
        assert_eq!(parse_real(" 1e-6 ").unwrap(), 1e-6);
        assert_eq!(parse_real("inf").unwrap(), f64::INFINITY);
        assert!(parse_real("x").is_err());
        assert!(parse_real("0/0").is_err());
    }

    #[test]
    fn defaults_and_unknown_keys() {
        let info = lookup("duality").unwrap();
        let m = map(&[("p", "3")]);
        let p = Params::new(info, &m, "b").unwrap();
        assert_eq!(p.count("samples").unwrap(), 50);
        assert_eq!(p.exponent("p").unwrap(), 3.0);
        let m = map(&[("p", "3"), ("smaples", "2")]);
        let e = Params::new(info, &m, "b").err().unwrap();
        assert!(e.to_string().contains("smaples"));
        assert!(Params::new(info, &map(&[]), "b").is_err());
    }

    #[test]
    fn kernels() {
        let info = lookup("idempotent").unwrap();
        let z = Group::parse("z").unwrap();
        let m = map(&[("kernel", "(0)=1 | (1)=0.1 | (-1)=1/10")]);
        let f = Params::new(info, &m, "b").unwrap().kernel("kernel", &z).unwrap();
        assert_eq!(f.support_len(), 3);
        assert_eq!(f.get(&z.parse_element("(-1)").unwrap()), C64::new(0.1, 0.0));
        let m = map(&[("kernel", "ball:1"), ("scale", "1/3")]);
        let f = Params::new(info, &m, "b").unwrap().kernel("kernel", &z).unwrap();
        assert!((f.l1() - 1.0).abs() < 1e-15);
        let m = map(&[("kernel", "delta:(2)")]);
        assert_eq!(Params::new(info, &m, "b").unwrap().kernel("kernel", &z).unwrap().support_radius(), 2);
    }
}
