//! Output records and their JSON, CSV and human renderings.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Member lists longer than this are replaced by their size and hash.
pub const MAX_LISTED_MEMBERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tolerance {
    Exact,
    #[serde(rename = "float-1e-9")]
    Float,
    Statistical,
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub tool_version: &'static str,
    pub command: String,
    pub config_canonical: String,
    pub seed: u64,
    pub tolerance: Tolerance,
    pub result: Value,
}

/// A member list, or its size and FNV-1a hash when it is too long to print.
pub fn members_value(members: &[i128]) -> Value {
    if members.len() <= MAX_LISTED_MEMBERS {
        serde_json::json!(members)
    } else {
        serde_json::json!({
            "elided": true,
            "count": members.len(),
            "fnv1a": format!("{:016x}", bsl_core::numeric::fnv1a_i128(members)),
        })
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_rows(record: &Record) -> (Vec<String>, Vec<Vec<String>>) {
    let prefix = vec![record.tool_version.to_string(), record.config_canonical.clone(), record.seed.to_string()];
    let mut header: Vec<String> = ["tool_version", "config_canonical", "seed"].iter().map(|s| s.to_string()).collect();
    let table: Option<&Vec<Value>> = match &record.result {
        Value::Array(rows) if rows.iter().all(Value::is_object) => Some(rows),
        Value::Object(m) => m.get("rows").and_then(Value::as_array).filter(|r| r.iter().all(Value::is_object)),
        _ => None,
    };
    let mut out = Vec::new();
    match table {
        Some(rows) => {
            let mut keys: Vec<String> = Vec::new();
            for r in rows {
                for k in r.as_object().expect("object row").keys() {
                    if !keys.contains(k) {
                        keys.push(k.clone());
                    }
                }
            }
            header.extend(keys.iter().cloned());
            for r in rows {
                let obj = r.as_object().expect("object row");
                let mut row = prefix.clone();
                row.extend(keys.iter().map(|k| obj.get(k).map(cell).unwrap_or_default()));
                out.push(row);
            }
        }
        None => {
            header.extend(["key".to_string(), "value".to_string()]);
            let empty = Map::new();
            let obj = record.result.as_object().unwrap_or(&empty);
            if obj.is_empty() {
                let mut row = prefix.clone();
                row.extend(["result".to_string(), cell(&record.result)]);
                out.push(row);
            }
            for (k, v) in obj {
                let mut row = prefix.clone();
                row.extend([k.clone(), cell(v)]);
                out.push(row);
            }
        }
    }
    (header, out)
}

fn human(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match x {
                    Value::Object(_) | Value::Array(_) if x.to_string().len() > 60 => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        human(x, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", cell(x))),
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                match x {
                    Value::Object(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        human(x, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", cell(x))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", cell(other))),
    }
}

pub fn render(record: &Record, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(record).expect("record serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let (header, rows) = csv_rows(record);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            for r in rows {
                w.write_record(&r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
        }
        Format::Human => {
            let mut s = format!("{} ({}) seed {}\n", record.command, record.tool_version, record.seed);
            human(&record.result, 1, &mut s);
            s
        }
    }
}
