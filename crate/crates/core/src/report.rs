//! Check reports and their JSON form.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::chart::JetRegime;
use crate::sampling::{mean, stddev};

/// Version of the report JSON schema in `schema/report.schema.json`.
pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inapplicable => "inapplicable",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            "inapplicable" => Ok(Verdict::Inapplicable),
            other => Err(format!("unknown verdict '{other}'")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Constants {
    #[serde(rename = "C")]
    pub hamilton: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "Lambda")]
    pub big_lambda: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub target: String,
    pub samples: usize,
    pub residual_max: f64,
    pub residual_mean: f64,
    pub residual_stddev: f64,
    pub tolerance: f64,
    pub regime: JetRegime,
    pub verdict: Verdict,
    pub constants: Constants,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Residual at each sample, aligned with `points`.
    #[serde(skip)]
    pub per_sample: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<Vec<f64>>,
}

impl CheckReport {
    /// Report whose verdict is `pass` iff every residual is within `tolerance`.
    pub fn from_residuals(
        check: &str,
        target: &str,
        residuals: Vec<f64>,
        tolerance: f64,
        regime: JetRegime,
    ) -> CheckReport {
        let residual_max = residuals
            .iter()
            .fold(0.0f64, |m, &r| if r.is_nan() { f64::INFINITY } else { m.max(r) });
        let verdict = if residual_max <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckReport {
            check: check.to_string(),
            target: target.to_string(),
            samples: residuals.len(),
            residual_max,
            residual_mean: mean(&residuals),
            residual_stddev: stddev(&residuals),
            tolerance,
            regime,
            verdict,
            constants: Constants::default(),
            details: BTreeMap::new(),
            notes: Vec::new(),
            per_sample: residuals,
            points: Vec::new(),
        }
    }

    pub fn inapplicable(
        check: &str,
        target: &str,
        tolerance: f64,
        regime: JetRegime,
        reason: impl Into<String>,
    ) -> CheckReport {
        let mut r = CheckReport::from_residuals(check, target, Vec::new(), tolerance, regime);
        r.verdict = Verdict::Inapplicable;
        r.notes.push(reason.into());
        r
    }

    /// Marks an evaluated report inapplicable, keeping its statistics.
    pub fn mark_inapplicable(mut self, reason: impl Into<String>) -> CheckReport {
        self.verdict = Verdict::Inapplicable;
        self.notes.push(reason.into());
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> CheckReport {
        self.details.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> CheckReport {
        self.notes.push(note.into());
        self
    }

    pub fn with_points(mut self, points: Vec<Vec<f64>>) -> CheckReport {
        self.points = points;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Collection of reports for one target.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub target: String,
    pub seed: u32,
    pub samples: usize,
    pub reports: Vec<CheckReport>,
    /// Expected verdicts that differ from the computed ones.
    pub mismatches: Vec<Mismatch>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub check: String,
    pub expected: Verdict,
    pub actual: Verdict,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
