//! Per-k pass/fail series shared by the sequence checks and the verification suites.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Row {
    pub k: i64,
    #[serde(with = "lenient")]
    pub value_ln: f64,
    #[serde(with = "lenient_opt")]
    pub bound_ln: Option<f64>,
    pub pass: bool,
    /// Rows below a detected threshold are reported but not asserted.
    #[serde(default = "yes")]
    pub asserted: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn yes() -> bool {
    true
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for Row {
    fn eq(&self, o: &Self) -> bool {
        self.k == o.k
            && same(self.value_ln, o.value_ln)
            && match (self.bound_ln, o.bound_ln) {
                (Some(a), Some(b)) => same(a, b),
                (a, b) => a.is_none() && b.is_none(),
            }
            && self.pass == o.pass
            && self.asserted == o.asserted
            && self.extra == o.extra
            && self.error == o.error
    }
}

/// JSON has no infinities or NaN; those are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod lenient {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Num {
        F(f64),
        S(String),
    }

    impl Num {
        pub(super) fn get<E: serde::de::Error>(self) -> Result<f64, E> {
            match self {
                Num::F(x) => Ok(x),
                Num::S(s) => match s.as_str() {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::custom(format!("not a number: {s}"))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Num::deserialize(d)?.get()
    }
}

mod lenient_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::lenient::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<super::lenient::Num>::deserialize(d)?.map(|n| n.get()).transpose()
    }
}

impl Row {
    pub fn new(k: i64, value_ln: f64, bound_ln: Option<f64>, pass: bool) -> Self {
        Row { k, value_ln, bound_ln, pass, asserted: true, extra: BTreeMap::new(), error: None }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.extra.insert(key.to_string(), value);
        }
        self
    }
}

/// A named suite-level condition that is not a per-row comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub unasserted: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub suite: String,
    pub rows: Vec<Row>,
    pub detected_threshold: Option<i64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub thresholds: BTreeMap<String, Option<i64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    /// Set when the suite could not run at all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Summary,
}

impl SeriesReport {
    pub fn new(suite: &str) -> Self {
        SeriesReport {
            suite: suite.to_string(),
            rows: Vec::new(),
            detected_threshold: None,
            thresholds: BTreeMap::new(),
            checks: Vec::new(),
            error: None,
            summary: Summary { passed: 0, failed: 0, unasserted: 0, ok: true },
        }
    }

    pub fn failed(suite: &str, error: String) -> Self {
        let mut r = SeriesReport::new(suite);
        r.error = Some(error);
        r.finish()
    }

    pub fn check(&mut self, name: &str, pass: bool) {
        self.checks.push(Check { name: name.to_string(), pass });
    }

    /// Sorts rows by k and recomputes the summary.
    pub fn finish(mut self) -> Self {
        self.rows.sort_by_key(|r| r.k);
        let (mut passed, mut failed, mut unasserted) = (0, 0, 0);
        for r in &self.rows {
            if !r.asserted {
                unasserted += 1;
            } else if r.pass {
                passed += 1;
            } else {
                failed += 1;
            }
        }
        let ok = failed == 0 && self.checks.iter().all(|c| c.pass) && !self.has_errors();
        self.summary = Summary { passed, failed, unasserted, ok };
        self
    }

    pub fn ok(&self) -> bool {
        self.summary.ok
    }

    /// True if the suite or any row hit a computational error.
    pub fn has_errors(&self) -> bool {
        self.error.is_some() || self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV rows `suite,k,value_ln,bound_ln,pass` (no header).
    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                let bound = r.bound_ln.map(|b| b.to_string()).unwrap_or_default();
                format!("{},{},{},{},{}", self.suite, r.k, r.value_ln, bound, r.pass)
            })
            .collect()
    }
}

pub const CSV_HEADER: &str = "suite,k,value_ln,bound_ln,pass";

/// Smallest k from which `pred` holds for every later row (rows sorted by k).
pub fn detect_threshold<T>(rows: &[(i64, T)], pred: impl Fn(&T) -> bool) -> Option<i64> {
    let mut threshold = None;
    for (k, v) in rows.iter().rev() {
        if pred(v) {
            threshold = Some(*k);
        } else {
            break;
        }
    }
    threshold
}
