//! Numeric results with provenance.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Combines verdicts: any failure fails, otherwise any inconclusive part
    /// makes the whole inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Finiteness verdict for integrals and series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Finiteness {
    Finite,
    Divergent,
}

/// A point estimate with its uncertainty, reference value and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub seed: Option<u64>,
    pub reference: Option<f64>,
    pub verdict: Verdict,
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn new(name: impl Into<String>, estimate: f64) -> Self {
        EstimateReport {
            name: name.into(),
            estimate,
            std_error: 0.0,
            replicates: 0,
            seed: None,
            reference: None,
            verdict: Verdict::Pass,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_mc(mut self, std_error: f64, replicates: u64, seed: u64) -> Self {
        self.std_error = std_error;
        self.replicates = replicates;
        self.seed = Some(seed);
        self
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// `|estimate - reference|` in units of the standard error.
    pub fn z_score(&self) -> Option<f64> {
        let r = self.reference?;
        if self.std_error > 0.0 {
            Some((self.estimate - r).abs() / self.std_error)
        } else if self.estimate == r {
            Some(0.0)
        } else {
            Some(f64::INFINITY)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_combination() {
        use Verdict::*;
        assert_eq!(Pass.and(Pass), Pass);
        assert_eq!(Pass.and(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.and(Fail), Fail);
    }

    #[test]
    fn verdict_serializes_upper_case() {
        let s = serde_json::to_string(&Verdict::Inconclusive).unwrap();
        assert_eq!(s, "\"INCONCLUSIVE\"");
    }
}
