use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use super::{BallLimits, Form, Group, Kind};
use crate::error::{LabError, Result};

/// Group family descriptor, written as in experiment configs:
/// `free:2`, `zd:2`, `heisenberg`, `cyclic:12`, `sym:3`, `alt:4`,
/// `dihedral:4`, `q8`, `trivial`, `cayley:<n>:<row-major table>` and
/// `product:<spec>,<spec>,...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    Free(usize),
    FreeAbelian(usize),
    Heisenberg,
    Cyclic(usize),
    Symmetric(usize),
    Alternating(usize),
    Dihedral(usize),
    Quaternion8,
    CayleyTable { order: usize, table: Vec<u32> },
    Product(Vec<GroupSpec>),
}

impl GroupSpec {
    pub fn build(&self) -> Result<Group> {
        Group::from_spec(self, BallLimits::default())
    }
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| LabError::Parse(format!("{what}: expected a non-negative integer, got `{s}`")))
}

impl FromStr for GroupSpec {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("product:") {
            let factors = rest.split(',').map(str::parse).collect::<Result<Vec<GroupSpec>>>()?;
            if factors.is_empty() {
                return Err(LabError::Parse("empty product".into()));
            }
            return Ok(GroupSpec::Product(factors));
        }
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| arg.ok_or_else(|| LabError::Parse(format!("`{what}` needs a parameter, e.g. `{what}:2`")));
        let spec = match head {
            "free" => GroupSpec::Free(parse_count(need("free")?, "free rank")?),
            "zd" => GroupSpec::FreeAbelian(parse_count(need("zd")?, "zd rank")?),
            "z" if arg.is_none() => GroupSpec::FreeAbelian(1),
            "heisenberg" if arg.is_none() => GroupSpec::Heisenberg,
            "cyclic" => GroupSpec::Cyclic(parse_count(need("cyclic")?, "cyclic order")?),
            "sym" => GroupSpec::Symmetric(parse_count(need("sym")?, "sym degree")?),
            "alt" => GroupSpec::Alternating(parse_count(need("alt")?, "alt degree")?),
            "dihedral" => GroupSpec::Dihedral(parse_count(need("dihedral")?, "dihedral n")?),
            "q8" | "quaternion8" if arg.is_none() => GroupSpec::Quaternion8,
            "trivial" if arg.is_none() => GroupSpec::Cyclic(1),
            "cayley" => {
                let (n, entries) = need("cayley")?
                    .split_once(':')
                    .ok_or_else(|| LabError::Parse("cayley spec is `cayley:<n>:<entries>`".into()))?;
                let order = parse_count(n, "cayley order")?;
                let table = entries
                    .split_whitespace()
                    .map(|e| parse_count(e, "cayley entry").map(|v| v as u32))
                    .collect::<Result<Vec<_>>>()?;
                GroupSpec::CayleyTable { order, table }
            }
            _ => return Err(LabError::Parse(format!("unknown group family `{s}`"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Free(k) => write!(f, "free:{k}"),
            GroupSpec::FreeAbelian(d) => write!(f, "zd:{d}"),
            GroupSpec::Heisenberg => f.write_str("heisenberg"),
            GroupSpec::Cyclic(n) => write!(f, "cyclic:{n}"),
            GroupSpec::Symmetric(n) => write!(f, "sym:{n}"),
            GroupSpec::Alternating(n) => write!(f, "alt:{n}"),
            GroupSpec::Dihedral(n) => write!(f, "dihedral:{n}"),
            GroupSpec::Quaternion8 => f.write_str("q8"),
            GroupSpec::CayleyTable { order, table } => {
                let entries: Vec<String> = table.iter().map(|x| x.to_string()).collect();
                write!(f, "cayley:{order}:{}", entries.join(" "))
            }
            GroupSpec::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "product:{}", parts.join(","))
            }
        }
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(super) fn parse_element_form(group: &Group, s: &str) -> Result<Form> {
    let bad = || LabError::Parse(format!("cannot parse element `{s}` of {}", group.descriptor()));
    match &group.0.kind {
        Kind::Free { .. } => {
            if s == "e" {
                return Ok(SmallVec::new());
            }
            s.chars()
                .map(|c| {
                    if c.is_ascii_lowercase() {
                        Ok((c as u8 - b'a') as i32 + 1)
                    } else if c.is_ascii_uppercase() {
                        Ok(-((c as u8 - b'A') as i32 + 1))
                    } else {
                        Err(bad())
                    }
                })
                .collect()
        }
        Kind::FreeAbelian { .. } | Kind::Heisenberg => {
            let inner = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(bad)?;
            inner
                .split(',')
                .map(|t| t.trim().parse::<i32>().map_err(|_| bad()))
                .collect()
        }
        Kind::Finite(_) => {
            let k = s.strip_prefix('#').ok_or_else(bad)?.parse::<i32>().map_err(|_| bad())?;
            Ok(SmallVec::from_slice(&[k]))
        }
        Kind::Product(fs) => {
            let inner = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
            let parts = split_top_level(inner);
            if parts.len() != fs.len() {
                return Err(bad());
            }
            let mut out = SmallVec::new();
            for (f, p) in fs.iter().zip(parts) {
                let part = parse_element_form(f, p.trim())?;
                out.push(part.len() as i32);
                out.extend_from_slice(&part);
            }
            Ok(out)
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ';' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}
