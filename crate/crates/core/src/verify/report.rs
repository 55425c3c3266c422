//! Check reports: per-sample sides, margins and a verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::GridSpec;

/// Default constant `c` of the discretization tolerance `c (dx + dt) scale`.
pub const DEFAULT_TOLERANCE_CONSTANT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypothesis of the checked statement does not hold.
    Skipped,
    /// Not enough resolvable data to decide.
    Inconclusive,
}

/// One evaluated instance of an inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Sample {
    pub fn new(label: &str, params: &[(&str, f64)], lhs: f64, rhs: f64) -> Self {
        Self {
            label: label.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

/// How a report's tolerance was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    /// Constant `c` in `c (dx + dt) scale`.
    pub constant: f64,
    pub dx: f64,
    pub dt: f64,
    pub scale: f64,
    pub value: f64,
}

impl Tolerance {
    pub fn grid(spec: &GridSpec, constant: f64, scale: f64) -> Self {
        Self::new(constant, spec.dx_max(), spec.dt(), scale)
    }

    pub fn new(constant: f64, dx: f64, dt: f64, scale: f64) -> Self {
        Self {
            constant,
            dx,
            dt,
            scale,
            value: constant * (dx + dt) * scale,
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    pub tolerance: Tolerance,
    /// Sample minimizing the margin.
    pub worst: Option<Sample>,
    /// Samples that were degenerate on the grid and left out.
    pub skipped_samples: usize,
    pub samples: Vec<Sample>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl CheckReport {
    /// Builds a report whose verdict is `Pass` iff every margin is at least
    /// `-tolerance`; `Inconclusive` without samples.
    pub fn from_samples(name: &str, samples: Vec<Sample>, tolerance: Tolerance) -> Self {
        let worst = samples
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .cloned();
        let verdict = match &worst {
            None => Verdict::Inconclusive,
            Some(w) if w.margin >= -tolerance.value => Verdict::Pass,
            Some(_) => Verdict::Fail,
        };
        Self {
            name: name.into(),
            verdict,
            tolerance,
            worst,
            skipped_samples: 0,
            samples,
            notes: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn with_details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.worst.as_ref().map(|w| w.margin)
    }

    /// One CSV row per sample: label, the union of parameter names (sorted),
    /// lhs, rhs, margin.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let keys: BTreeSet<&str> = self
            .samples
            .iter()
            .flat_map(|s| s.params.keys().map(String::as_str))
            .collect();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["label"];
        header.extend(keys.iter().copied());
        header.extend(["lhs", "rhs", "margin"]);
        out.write_record(&header)?;
        for s in &self.samples {
            let mut row = vec![s.label.clone()];
            row.extend(
                keys.iter()
                    .map(|k| s.params.get(*k).map(|v| fmt_f64(*v)).unwrap_or_default()),
            );
            row.extend([fmt_f64(s.lhs), fmt_f64(s.rhs), fmt_f64(s.margin)]);
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Shortest round-trip formatting; `inf`, `-inf`, `NaN` spelled out.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_follows_min_margin() {
        let s = vec![
            Sample::new("a", &[("k", 0.0)], 1.0, 2.0),
            Sample::new("a", &[("k", 1.0)], 2.0, 1.96),
        ];
        let tol = Tolerance::new(1.0, 0.05, 0.0, 1.0);
        let r = CheckReport::from_samples("t", s.clone(), tol);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.min_margin().unwrap() + 0.04).abs() < 1e-12);
        let r = CheckReport::from_samples("t", s, Tolerance::zero());
        assert_eq!(r.verdict, Verdict::Fail);
        let r = CheckReport::from_samples("t", vec![], Tolerance::zero());
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn csv_has_one_row_per_sample() {
        let s = vec![
            Sample::new("a", &[("k", 0.5), ("r", 1.0)], 1.0, 2.0),
            Sample::new("b", &[("s", -1.0)], 0.0, f64::INFINITY),
        ];
        let r = CheckReport::from_samples("t", s, Tolerance::zero());
        let text = r.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "label,k,r,s,lhs,rhs,margin");
        assert_eq!(lines[1], "a,0.5,1.0,,1.0,2.0,1.0");
        assert_eq!(lines[2], "b,,,-1.0,0.0,inf,inf");
    }
}
