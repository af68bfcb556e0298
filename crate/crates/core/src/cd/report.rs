use std::collections::BTreeMap;

use serde::Serialize;

use crate::num::{ser_f64, ser_f64_map};

/// A sampled constraint and its margin `LHS − RHS`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub kind: String,
    #[serde(serialize_with = "ser_f64_map")]
    pub params: BTreeMap<String, f64>,
    #[serde(serialize_with = "ser_f64")]
    pub margin: f64,
}

impl Witness {
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Outcome of a sampled inequality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub passed: bool,
    #[serde(serialize_with = "ser_f64")]
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
    pub tolerance: f64,
    pub samples: usize,
    pub notes: Vec<String>,
}

impl CheckReport {
    /// The most violated constraint, if any was sampled.
    pub fn worst(&self) -> Option<&Witness> {
        self.witnesses.first()
    }

    /// Combines reports, tagging each witness with `key = label`.
    ///
    /// The combined tolerance is the smallest tolerance among failing parts,
    /// or the largest overall when every part passed.
    pub fn merge(parts: Vec<(f64, CheckReport)>, key: &str, max_witnesses: usize) -> CheckReport {
        let failing = parts
            .iter()
            .filter(|(_, r)| !r.passed)
            .map(|(_, r)| r.tolerance)
            .fold(f64::INFINITY, f64::min);
        let tolerance = if failing.is_finite() {
            failing
        } else {
            parts.iter().map(|(_, r)| r.tolerance).fold(0.0, f64::max)
        };
        let mut b = ReportBuilder::new(tolerance, max_witnesses);
        for (label, r) in parts {
            b.samples += r.samples;
            b.notes
                .extend(r.notes.into_iter().map(|n| format!("{key} {label}: {n}")));
            if r.worst_margin < b.worst {
                b.worst = r.worst_margin;
            }
            for mut w in r.witnesses {
                w.params.insert(key.to_string(), label);
                b.push(w);
            }
        }
        b.finish()
    }
}

pub struct ReportBuilder {
    tolerance: f64,
    max_witnesses: usize,
    worst: f64,
    samples: usize,
    witnesses: Vec<Witness>,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub fn new(tolerance: f64, max_witnesses: usize) -> Self {
        Self {
            tolerance,
            max_witnesses,
            worst: f64::INFINITY,
            samples: 0,
            witnesses: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn record(&mut self, kind: &str, params: &[(&str, f64)], margin: f64) {
        self.samples += 1;
        let margin = if margin.is_nan() {
            f64::NEG_INFINITY
        } else {
            margin
        };
        if margin < self.worst {
            self.worst = margin;
        }
        let w = Witness {
            kind: kind.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            margin,
        };
        self.push(w);
    }

    fn push(&mut self, w: Witness) {
        if self.witnesses.len() == self.max_witnesses
            && self
                .witnesses
                .last()
                .is_some_and(|last| last.margin <= w.margin)
        {
            return;
        }
        let pos = self.witnesses.partition_point(|x| x.margin <= w.margin);
        self.witnesses.insert(pos, w);
        self.witnesses.truncate(self.max_witnesses);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish(self) -> CheckReport {
        CheckReport {
            passed: self.worst >= -self.tolerance,
            worst_margin: self.worst,
            witnesses: self.witnesses,
            tolerance: self.tolerance,
            samples: self.samples,
            notes: self.notes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_most_violated() {
        let mut b = ReportBuilder::new(1e-9, 2);
        for (i, m) in [0.5, -1.0, 0.1, -2.0, 3.0].iter().enumerate() {
            b.record("x", &[("i", i as f64)], *m);
        }
        let r = b.finish();
        assert!(!r.passed);
        assert_eq!(r.worst_margin, -2.0);
        assert_eq!(
            r.witnesses.iter().map(|w| w.margin).collect::<Vec<_>>(),
            vec![-2.0, -1.0]
        );
        assert_eq!(r.samples, 5);
    }

    #[test]
    fn empty_report_passes() {
        let r = ReportBuilder::new(1e-9, 3).finish();
        assert!(r.passed);
        assert_eq!(r.worst_margin, f64::INFINITY);
    }
}
