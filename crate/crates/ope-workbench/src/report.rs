//! Machine-readable reports: per-check verdicts with exact residuals.
//!
//! Truncated computation must never report a false failure, so every check
//! lands in one of three verdicts: `pass` and `fail` are exact statements
//! about the window given, and `inconclusive` means the window was too small
//! to decide.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<String>,
}

impl CheckResult {
    pub fn pass(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            verdict: Verdict::Pass,
            residual: None,
            window: None,
        }
    }

    pub fn fail(name: impl Into<String>, residual: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            verdict: Verdict::Fail,
            residual: Some(residual.into()),
            window: None,
        }
    }

    pub fn inconclusive(name: impl Into<String>, why: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            verdict: Verdict::Inconclusive,
            residual: Some(why.into()),
            window: None,
        }
    }

    pub fn with_window(mut self, w: impl Into<String>) -> Self {
        self.window = Some(w.into());
        self
    }
}

/// Top-level report emitted by every CLI command.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub command: String,
    pub inputs: std::collections::BTreeMap<String, String>,
    pub verdicts: Vec<CheckResult>,
    /// Milliseconds per phase; excluded from determinism comparisons.
    pub timings: std::collections::BTreeMap<String, u128>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            inputs: Default::default(),
            verdicts: Vec::new(),
            timings: Default::default(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<String>) {
        self.inputs.insert(key.to_string(), value.into());
    }

    pub fn push(&mut self, check: CheckResult) {
        self.verdicts.push(check);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|c| c.verdict == Verdict::Fail)
    }

    /// Process exit code: 0 all pass, 2 any fail, 3 inconclusive only.
    pub fn exit_code(&self) -> i32 {
        if self.any_fail() {
            2
        } else if self.all_pass() {
            0
        } else {
            3
        }
    }

    /// Serialization with timing fields zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> String {
        let mut clone = self.clone();
        clone.timings.clear();
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let mut r = Report::new("x");
        assert_eq!(r.exit_code(), 0);
        r.push(CheckResult::pass("a"));
        assert_eq!(r.exit_code(), 0);
        r.push(CheckResult::inconclusive("b", "window too small"));
        assert_eq!(r.exit_code(), 3);
        r.push(CheckResult::fail("c", "residual 1"));
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn json_round_trip_is_identity() {
        let mut r = Report::new("uea verify");
        r.input("file", "vir.json");
        r.push(CheckResult::pass("vacuum").with_window("[-4,6)"));
        r.push(CheckResult::fail("locality", "nonzero at (1,2)"));
        let s = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        let s2 = serde_json::to_string(&back).unwrap();
        assert_eq!(s, s2);
    }
}
