use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One evaluation: what was asked, what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    pub version: String,
    pub seed: Option<u64>,
}

impl RunRecord {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
        }
    }

    pub fn input(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), v.into());
        self
    }

    /// Non-finite numbers become `null`.
    pub fn output(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.outputs.insert(key.to_string(), v.into());
        self
    }

    /// `log_alpha`, `alpha` and `alpha_underflow` from a log-probability.
    pub fn log_alpha(&mut self, ln_alpha: f64) -> &mut Self {
        let alpha = ln_alpha.exp();
        self.output("log_alpha", ln_alpha)
            .output("alpha", alpha)
            .output("alpha_underflow", alpha == 0.0 && ln_alpha.is_finite())
    }

    fn columns(&self) -> Vec<(String, String)> {
        let mut cols = vec![
            ("command".to_string(), self.command.clone()),
            ("version".to_string(), self.version.clone()),
            (
                "seed".to_string(),
                self.seed.map(|s| s.to_string()).unwrap_or_default(),
            ),
        ];
        for (k, v) in &self.inputs {
            cols.push((format!("in.{k}"), cell(v)));
        }
        for (k, v) in &self.outputs {
            cols.push((format!("out.{k}"), cell(v)));
        }
        cols
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes records as JSON lines or as CSV with a header taken from the
/// first record.
pub struct Sink<W: Write> {
    out: W,
    format: Format,
    header: Option<Vec<String>>,
}

impl<W: Write> Sink<W> {
    pub fn new(out: W, format: Format) -> Self {
        Self {
            out,
            format,
            header: None,
        }
    }

    pub fn write(&mut self, record: &RunRecord) -> std::io::Result<()> {
        match self.format {
            Format::Json => {
                serde_json::to_writer(&mut self.out, record)?;
                self.out.write_all(b"\n")
            }
            Format::Csv => {
                let cols = record.columns();
                let mut w = csv::Writer::from_writer(&mut self.out);
                if self.header.is_none() {
                    let names: Vec<String> = cols.iter().map(|(k, _)| k.clone()).collect();
                    w.write_record(&names)?;
                    self.header = Some(names);
                }
                let header = self.header.as_ref().expect("set above");
                let lookup: BTreeMap<_, _> = cols.into_iter().collect();
                let row: Vec<&str> = header
                    .iter()
                    .map(|k| lookup.get(k).map(String::as_str).unwrap_or(""))
                    .collect();
                w.write_record(row)?;
                w.flush()?;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut r = RunRecord::new("alpha");
        r.input("x1", 3.5).log_alpha(-2.0);
        r.seed = Some(7);
        let s = serde_json::to_string(&r).unwrap();
        let back: RunRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn underflow_flag() {
        let mut r = RunRecord::new("alpha");
        r.log_alpha(-800.0);
        assert_eq!(r.outputs["alpha"], Value::from(0.0));
        assert_eq!(r.outputs["alpha_underflow"], Value::Bool(true));
        r.log_alpha(f64::NEG_INFINITY);
        assert_eq!(r.outputs["log_alpha"], Value::Null);
        assert_eq!(r.outputs["alpha_underflow"], Value::Bool(false));
    }
}
