use serde_json::{json, Map, Value};

use crate::args::Format;

/// Everything a command produces, in all three renderings.
#[derive(Debug, Default)]
pub struct Report {
    pub text: Vec<String>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub records: Vec<Value>,
}

impl Report {
    pub fn line(&mut self, s: impl Into<String>) {
        self.text.push(s.into());
    }

    pub fn row(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn record(&mut self, v: Value) {
        self.records.push(v);
    }
}

/// Identifies the tool, model and parameters behind a run.
pub struct Meta<'a> {
    pub command: &'static str,
    pub model: &'a str,
    pub params: &'a Value,
}

impl Meta<'_> {
    fn summary(&self) -> String {
        let params = match self.params {
            Value::Object(m) => m
                .iter()
                .map(|(k, v)| match v {
                    Value::String(s) => format!("{k}={s}"),
                    other => format!("{k}={other}"),
                })
                .collect::<Vec<_>>()
                .join(" "),
            other => other.to_string(),
        };
        format!("model: {} [{params}] | qbd2d {}", self.model, env!("CARGO_PKG_VERSION"))
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn render(report: &Report, format: Format, meta: &Meta) -> Result<String, String> {
    match format {
        Format::Text => {
            let mut out = report.text.join("\n");
            out.push('\n');
            out.push_str(&meta.summary());
            out.push('\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.header).map_err(|e| e.to_string())?;
            for row in &report.rows {
                w.write_record(row).map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            String::from_utf8(bytes).map_err(|e| e.to_string())
        }
        Format::Jsonl => {
            let mut out = String::new();
            for record in &report.records {
                let mut m = Map::new();
                m.insert("tool".into(), json!("qbd2d"));
                m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
                m.insert("command".into(), json!(meta.command));
                m.insert("model".into(), json!(meta.model));
                m.insert("params".into(), meta.params.clone());
                if let Value::Object(fields) = record {
                    m.extend(fields.clone());
                }
                out.push_str(&serde_json::to_string(&Value::Object(m)).map_err(|e| e.to_string())?);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_then_rows() {
        let mut r = Report { header: vec!["a", "b"], ..Report::default() };
        r.row(vec![num(0.1), num(1e-12)]);
        let meta = Meta { command: "t", model: "m", params: &json!({}) };
        assert_eq!(render(&r, Format::Csv, &meta).unwrap(), "a,b\n0.1,0.000000000001\n");
    }

    #[test]
    fn jsonl_records_carry_metadata() {
        let mut r = Report::default();
        r.record(json!({ "x": 1 }));
        let params = json!({ "l1": 0.1 });
        let meta = Meta { command: "drift", model: "m", params: &params };
        let line = render(&r, Format::Jsonl, &meta).unwrap();
        let v: Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["tool"], "qbd2d");
        assert_eq!(v["model"], "m");
        assert_eq!(v["params"]["l1"], 0.1);
        assert_eq!(v["x"], 1);
    }
}
