//! The output record shared by every command, and its JSON and CSV encodings.

use std::collections::BTreeMap;
use std::fmt::Display;

use eulerian_core::boundary::Check;
use eulerian_core::Rational;
use serde::Serialize;

/// How decimals are printed; stated in every record.
pub const DECIMAL_FORMAT: &str = "scientific, 6 fractional digits";

/// Always `numerator/denominator`, including integral values.
pub fn rat(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn dec(x: f64) -> String {
    if x == 0.0 {
        return "0.000000e0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.6e}")
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    /// Cells as strings. Tables whose last column name ends in `...` are
    /// ragged: that column and everything after it hold one triangle row.
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CheckOut {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl From<Check> for CheckOut {
    fn from(c: Check) -> Self {
        CheckOut { name: c.name.into(), passed: c.passed, detail: c.detail }
    }
}

#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct Payload {
    pub tables: Vec<Table>,
    pub checks: Vec<CheckOut>,
    /// Membership verdict for commands that take a candidate array.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OutputRecord {
    pub command: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    pub parameters: BTreeMap<String, String>,
    pub decimal_format: &'static str,
    pub payload: Payload,
    /// Every check in the payload passed.
    pub passed: bool,
}

impl OutputRecord {
    pub fn new(command: &str) -> Self {
        OutputRecord {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            seed: None,
            rng: None,
            parameters: BTreeMap::new(),
            decimal_format: DECIMAL_FORMAT,
            payload: Payload::default(),
            passed: true,
        }
    }

    pub fn seeded(command: &str, seed: u64) -> Self {
        let mut r = Self::new(command);
        r.seed = Some(seed);
        r.rng = Some(eulerian_core::sampler::RNG_ALGORITHM);
        r
    }

    pub fn param(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.payload.tables.push(table);
        self
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.payload.checks.push(CheckOut { name: name.into(), passed, detail: detail.into() });
        self.passed &= passed;
        self
    }

    pub fn checks(&mut self, checks: impl IntoIterator<Item = Check>) -> &mut Self {
        for c in checks {
            self.passed &= c.passed;
            self.payload.checks.push(c.into());
        }
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// `meta` key/value rows, then one section per table headed
    /// `table,<name>` and its column row, then a `checks` section.
    pub fn to_csv(&self) -> anyhow::Result<String> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(["meta", "key", "value"])?;
        let opt = |x: Option<String>| x.unwrap_or_default();
        let mut meta = vec![
            ("command".to_string(), self.command.clone()),
            ("version".into(), self.version.into()),
            ("seed".into(), opt(self.seed.map(|s| s.to_string()))),
            ("rng".into(), opt(self.rng.map(str::to_string))),
            ("decimal_format".into(), self.decimal_format.into()),
            ("passed".into(), self.passed.to_string()),
        ];
        meta.extend(self.parameters.iter().map(|(k, v)| (format!("parameters.{k}"), v.clone())));
        if let Some(v) = &self.payload.verdict {
            meta.push(("verdict".into(), v.clone()));
        }
        for (k, v) in meta {
            w.write_record(["meta", &k, &v])?;
        }
        for t in &self.payload.tables {
            w.write_record(["table", &t.name])?;
            w.write_record(&t.columns)?;
            for row in &t.rows {
                w.write_record(row)?;
            }
        }
        if !self.payload.checks.is_empty() {
            w.write_record(["checks"])?;
            w.write_record(["name", "passed", "detail"])?;
            for c in &self.payload.checks {
                w.write_record([c.name.as_str(), if c.passed { "true" } else { "false" }, c.detail.as_str()])?;
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use eulerian_core::arith::{int, ratio};

    #[test]
    fn rationals_keep_denominator() {
        assert_eq!(rat(&ratio(2, 4)), "1/2");
        assert_eq!(rat(&int(3)), "3/1");
        assert_eq!(rat(&ratio(-1, 10)), "-1/10");
    }

    #[test]
    fn decimals() {
        assert_eq!(dec(0.0), "0.000000e0");
        assert_eq!(dec(-0.0), "0.000000e0");
        assert_eq!(dec(0.25), "2.500000e-1");
        assert_eq!(dec(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn failed_check_clears_passed() {
        let mut r = OutputRecord::new("x");
        r.check("a", true, "").check("b", false, "no");
        assert!(!r.passed);
        assert!(r.to_json().contains("\"passed\": false"));
    }

    #[test]
    fn csv_has_sections() {
        let mut r = OutputRecord::new("triangle");
        r.param("rows", 2);
        let mut t = Table::new("eulerian", &["n", "k=0..."]);
        t.push(vec!["1".into(), "1".into()]);
        t.push(vec!["2".into(), "1".into(), "1".into()]);
        r.table(t);
        let csv = r.to_csv().unwrap();
        assert!(csv.contains("meta,parameters.rows,2\n"));
        assert!(csv.contains("table,eulerian\nn,k=0...\n1,1\n2,1,1\n"));
    }
}
