//! Tabular reports rendered as CSV or JSON.
//!
//! A report is a fixed list of columns plus rows of JSON values. CSV output
//! starts with `version` and `group` and ends with `seed` and
//! `max_elements`, so every file carries the configuration that produced
//! it. JSON objects have sorted keys. Neither format contains timings.

use std::io::Write;

use arbor_core::Rational;
use serde_json::{Map, Value};

use crate::cli::Format;

/// Bumped whenever a column is added, removed or changes meaning.
pub const FORMAT_VERSION: u32 = 1;

pub struct Report {
    pub command: &'static str,
    pub group: String,
    pub seed: u64,
    pub max_elements: u64,
    /// Command parameters echoed into the JSON `config` object.
    pub params: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    /// Extra JSON-only data.
    pub summary: Map<String, Value>,
}

impl Report {
    pub fn new(command: &'static str, group: &str, seed: u64, max_elements: u64) -> Report {
        Report {
            command,
            group: group.to_string(),
            seed,
            max_elements,
            params: Map::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => {
                let text = serde_json::to_string_pretty(&self.to_json())?;
                writeln!(out, "{text}")
            }
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["version", "group"];
        header.extend(&self.columns);
        header.extend(["seed", "max_elements"]);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![FORMAT_VERSION.to_string(), self.group.clone()];
            record.extend(row.iter().map(cell));
            record.push(self.seed.to_string());
            record.push(self.max_elements.to_string());
            w.write_record(&record)?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        let mut config = self.params.clone();
        config.insert("group".into(), self.group.clone().into());
        config.insert("seed".into(), self.seed.into());
        config.insert("max_elements".into(), self.max_elements.into());
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.clone()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut top = Map::new();
        top.insert("version".into(), FORMAT_VERSION.into());
        top.insert("command".into(), self.command.into());
        top.insert("config".into(), Value::Object(config));
        top.insert("rows".into(), Value::Array(rows));
        if !self.summary.is_empty() {
            top.insert("summary".into(), Value::Object(self.summary.clone()));
        }
        Value::Object(top)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

/// Integers beyond `u64` are written as decimal strings.
pub fn int(x: u128) -> Value {
    u64::try_from(x).map_or_else(|_| Value::String(x.to_string()), Value::from)
}

/// Always `num/den`, also for integers.
pub fn ratio(r: &Rational) -> Value {
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

pub fn opt_ratio(r: &Option<Rational>) -> Value {
    r.as_ref().map_or(Value::Null, ratio)
}

/// Shortest round-trip decimal of an `f64`.
pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("enumerate", "grigorchuk", 0, 10);
        r.columns = vec!["k", "order", "ratio"];
        r.push(vec![1.into(), int(2), ratio(&Rational::new(1, 1))]);
        r.push(vec![2.into(), int(u128::MAX), Value::Null]);
        r
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "version,group,k,order,ratio,seed,max_elements");
        assert_eq!(lines[1], "1,grigorchuk,1,2,1/1,0,10");
        assert_eq!(lines[2], format!("1,grigorchuk,2,{},,0,10", u128::MAX));
    }

    #[test]
    fn json_keys_are_sorted() {
        let text = serde_json::to_string(&sample().to_json()).unwrap();
        let c = text.find("\"command\"").unwrap();
        let r = text.find("\"rows\"").unwrap();
        let v = text.find("\"version\"").unwrap();
        assert!(c < r && r < v);
    }
}
