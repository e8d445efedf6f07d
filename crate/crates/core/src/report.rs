//! Pass/fail records shared by every check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
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

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One statistic compared against a target or bound.
///
/// `rule` states the tolerance in words, e.g. `"|stat - target| <= 3 se"` or
/// `"stat <= target"`. Metadata keys are sorted so serialized reports are
/// byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub name: String,
    pub statistic: f64,
    pub target: f64,
    pub standard_error: Option<f64>,
    pub verdict: Verdict,
    pub rule: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

impl DiagnosticsReport {
    pub fn new(name: impl Into<String>, statistic: f64, target: f64, verdict: Verdict, rule: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statistic,
            target,
            standard_error: None,
            verdict,
            rule: rule.into(),
            metadata: BTreeMap::new(),
        }
    }

    /// Two-sided `|statistic - target| <= k · se + slack`.
    pub fn within_se(name: impl Into<String>, statistic: f64, target: f64, se: f64, k: f64, slack: f64) -> Self {
        let ok = (statistic - target).abs() <= k * se + slack;
        let rule = if slack > 0.0 {
            format!("|stat - target| <= {k} se + {slack:e}")
        } else {
            format!("|stat - target| <= {k} se")
        };
        let mut r = Self::new(name, statistic, target, Verdict::from_bool(ok && statistic.is_finite()), rule);
        r.standard_error = Some(se);
        r
    }

    /// One-sided `statistic <= bound`.
    pub fn at_most(name: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Self::new(
            name,
            statistic,
            bound,
            Verdict::from_bool(statistic <= bound),
            "stat <= target",
        )
    }

    /// One-sided `statistic >= bound`.
    pub fn at_least(name: impl Into<String>, statistic: f64, bound: f64) -> Self {
        Self::new(
            name,
            statistic,
            bound,
            Verdict::from_bool(statistic >= bound),
            "stat >= target",
        )
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), v);
        self
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.standard_error = Some(se);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}
