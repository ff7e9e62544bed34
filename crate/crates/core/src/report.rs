//! Check outcomes shared by the experiment modules.

use serde::{Deserialize, Serialize};

/// Relative slack on sound-direction inequality checks.
pub const SOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        }
    }
}

/// `lower <= factor * upper`, the only direction a bracket can certify.
pub fn sound_le(lower: f64, factor: f64, upper: f64) -> bool {
    lower <= factor * upper * (1.0 + SOUND_SLACK)
}

/// One sampled comparison. `lower` is a certified lower bound on the left
/// side, `upper` a certified upper bound on the right side, `factor` the
/// constant of the inequality being tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub group: String,
    #[serde(with = "crate::numfmt::ext")]
    pub p: f64,
    #[serde(with = "crate::numfmt::ext")]
    pub q: f64,
    pub radius: usize,
    #[serde(with = "crate::numfmt::ext")]
    pub lower: f64,
    #[serde(with = "crate::numfmt::ext")]
    pub upper: f64,
    #[serde(with = "crate::numfmt::ext")]
    pub factor: f64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

impl Row {
    /// Row whose verdict is the sound-direction test `lower <= factor * upper`.
    pub fn sound(group: &str, p: f64, radius: usize, lower: f64, upper: f64, factor: f64) -> Row {
        let verdict = if sound_le(lower, factor, upper) { Verdict::Pass } else { Verdict::Fail };
        Row {
            group: group.to_string(),
            p,
            q: crate::funcalg::ExponentPair::new(p).map_or(f64::NAN, |e| e.q),
            radius,
            lower,
            upper,
            factor,
            verdict,
            label: String::new(),
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Row {
        self.label = label.into();
        self
    }

    /// Downgrade a passing row to a warning.
    pub fn warn_if(mut self, cond: bool) -> Row {
        if cond && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Warn;
        }
        self
    }

    pub fn fail_if(mut self, cond: bool) -> Row {
        if cond {
            self.verdict = Verdict::Fail;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub rows: Vec<Row>,
    /// Check-specific inputs, parameters and estimates.
    pub detail: serde_json::Value,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            verdict: Verdict::Pass,
            rows: Vec::new(),
            detail: serde_json::Value::Null,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Row) {
        self.verdict = self.verdict.max(row.verdict);
        self.rows.push(row);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{}: {msg}", self.check);
        self.verdict = self.verdict.max(Verdict::Warn);
        self.notes.push(msg);
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::error!("{}: {msg}", self.check);
        self.verdict = Verdict::Fail;
        self.notes.push(msg);
    }

    pub fn set_detail<T: Serialize>(&mut self, detail: &T) {
        self.detail = serde_json::to_value(detail).expect("detail serializes");
    }

    /// Merge another report's rows, notes and verdict.
    pub fn absorb(&mut self, other: CheckReport) {
        self.verdict = self.verdict.max(other.verdict);
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }
}
