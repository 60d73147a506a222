//! Result files. Only the first line of `records.jsonl` and of `summary.csv`
//! carries a timestamp; everything else is a function of the settings.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub struct Run {
    pub command: String,
    pub settings: Value,
    pub summary: Value,
    pub records: Vec<Value>,
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

impl Run {
    pub fn summary_document(&self) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "settings": self.settings,
            "summary": self.summary,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let ts = timestamp();

        let mut f = BufWriter::new(fs::File::create(dir.join("records.jsonl"))?);
        writeln!(f, "{}", json!({"header": {"command": self.command, "generated_unix": ts}}))?;
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        f.flush()?;

        let mut doc = serde_json::to_string_pretty(&self.summary_document())?;
        doc.push('\n');
        fs::write(dir.join("summary.json"), doc)?;

        let mut rows = Vec::new();
        flatten("", &self.summary, &mut rows);
        let mut f = BufWriter::new(fs::File::create(dir.join("summary.csv"))?);
        writeln!(f, "# {} generated_unix={ts}", self.command)?;
        writeln!(f, "key,value")?;
        for (k, v) in rows {
            writeln!(f, "{},{}", csv_field(&k), csv_field(&v))?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Dotted-path rows for every scalar in `v`.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_paths() {
        let mut rows = Vec::new();
        flatten("", &json!({"a": {"b": [1, "x,y"]}, "c": null}), &mut rows);
        assert_eq!(
            rows,
            vec![
                ("a.b.0".to_string(), "1".to_string()),
                ("a.b.1".to_string(), "x,y".to_string()),
                ("c".to_string(), String::new()),
            ]
        );
        assert_eq!(csv_field("x,y"), "\"x,y\"");
    }
}
