use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Hölder-conjugate exponents `1/p + 1/q = 1`, with `inf` paired to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(LabError::Parse(format!("exponent {p} outside [1, inf]")));
        }
        Ok(ExponentPair { p, q: conjugate(p) })
    }

    /// Parse `"3"`, `"1.5"`, `"4/3"` or `"inf"`.
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_exponent(s)?)
    }

    pub fn dual(self) -> Self {
        ExponentPair { p: self.q, q: self.p }
    }

    pub fn is_endpoint(self) -> bool {
        self.p == 1.0 || self.p.is_infinite()
    }
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn parse_exponent(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || LabError::Parse(format!("cannot read exponent `{s}`"));
    let v = match s {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        _ => match s.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| bad())?;
                let b: f64 = b.trim().parse().map_err(|_| bad())?;
                a / b
            }
            None => s.parse().map_err(|_| bad())?,
        },
    };
    if v.is_nan() || v < 1.0 {
        return Err(LabError::Parse(format!("exponent `{s}` outside [1, inf]")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(ExponentPair::new(1.0).unwrap().q, f64::INFINITY);
        assert_eq!(ExponentPair::parse("inf").unwrap().q, 1.0);
        assert!((ExponentPair::parse("4/3").unwrap().q - 4.0).abs() < 1e-12);
        assert_eq!(ExponentPair::new(2.0).unwrap().q, 2.0);
        assert!(ExponentPair::new(0.5).is_err());
        assert!(ExponentPair::parse("x").is_err());
    }
}
