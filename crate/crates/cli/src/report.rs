use std::io;
use std::path::Path;

use serde::Serialize;

/// Direction of a tolerance test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `value <= tolerance`.
    Upper,
    /// Passes when `value >= tolerance`.
    Lower,
}

impl Bound {
    pub fn admits(self, value: f64, tolerance: f64) -> bool {
        match self {
            Bound::Upper => value <= tolerance,
            Bound::Lower => value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub criterion: u8,
    pub paper_ref: String,
    /// `None` when the computation itself failed; serialized as `null`.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A recorded quantity without a pass flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Informational {
    pub name: String,
    pub criterion: u8,
    pub paper_ref: String,
    pub informational: bool,
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionSummary {
    pub id: u8,
    pub name: String,
    pub checks: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSettings {
    pub grid: [usize; 3],
    #[serde(rename = "box")]
    pub box_side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub seed: u64,
    pub rng: String,
    pub settings: ReportSettings,
    pub criteria: Vec<CriterionSummary>,
    pub checks: Vec<Check>,
    pub informational: Vec<Informational>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    /// Pretty JSON with fields in declaration order and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

pub fn summarize(checks: &[Check]) -> Summary {
    let passed = checks.iter().filter(|c| c.pass).count();
    Summary { checks: checks.len(), passed, failed: checks.len() - passed, pass: passed == checks.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(pass: bool) -> Check {
        Check {
            name: "x".into(),
            criterion: 1,
            paper_ref: "r".into(),
            value: Some(1.0),
            tolerance: 1.0,
            bound: Bound::Upper,
            pass,
            error: None,
        }
    }

    #[test]
    fn bounds() {
        assert!(Bound::Upper.admits(1.0, 1.0));
        assert!(!Bound::Upper.admits(f64::NAN, 1.0));
        assert!(Bound::Lower.admits(2.0, 1.0));
        assert!(!Bound::Lower.admits(0.5, 1.0));
        assert!(!Bound::Upper.admits(1e-30, 0.0));
        assert!(Bound::Upper.admits(0.0, 0.0));
    }

    #[test]
    fn summary_counts() {
        let s = summarize(&[check(true), check(false), check(true)]);
        assert_eq!((s.checks, s.passed, s.failed, s.pass), (3, 2, 1, false));
        assert!(summarize(&[]).pass);
    }

    #[test]
    fn check_json_shape() {
        let json = serde_json::to_string(&check(true)).unwrap();
        assert_eq!(
            json,
            r#"{"name":"x","criterion":1,"paper_ref":"r","value":1.0,"tolerance":1.0,"bound":"upper","pass":true}"#
        );
    }
}
