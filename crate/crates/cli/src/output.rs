use std::io::Write;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};

use crate::Format;

/// Collects the seed and run metadata and prints the final result.
pub struct Output {
    format: Format,
    pub trace: bool,
    with_meta: bool,
    start: Instant,
    seed: Option<u64>,
    meta: Map<String, Value>,
}

impl Output {
    pub fn new(format: Format, trace: bool, with_meta: bool) -> Self {
        Output {
            format,
            trace,
            with_meta,
            start: Instant::now(),
            seed: None,
            meta: Map::new(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn meta(&mut self, key: &str, value: Value) {
        self.meta.insert(key.to_string(), value);
    }

    pub fn trace_line(&self, line: Value) {
        eprintln!("{line}");
    }

    pub fn finish(mut self, mut v: Value) {
        if let Value::Object(obj) = &mut v {
            if let Some(s) = self.seed {
                obj.insert("seed".into(), s.into());
            }
            if self.with_meta {
                let ts = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                self.meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
                self.meta.insert("timestamp".into(), ts.into());
                self.meta
                    .insert("elapsed_ms".into(), (self.start.elapsed().as_secs_f64() * 1e3).into());
                obj.insert("meta".into(), Value::Object(std::mem::take(&mut self.meta)));
            }
        }
        self.print(&v);
    }

    /// Write `v` to stdout. A closed pipe is not an error.
    pub fn print(&self, v: &Value) {
        let mut body = match self.format {
            Format::Json => serde_json::to_string(v).expect("values serialize"),
            Format::Text => {
                let mut lines = Vec::new();
                flatten("", v, &mut lines);
                lines.join("\n")
            }
        };
        body.push('\n');
        let _ = std::io::stdout().lock().write_all(body.as_bytes());
    }
}

/// `path: value` lines. Objects are expanded; arrays of scalars or of
/// arrays stay on one line as compact JSON, arrays of objects are indexed.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<String>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(obj) => {
            for (k, x) in obj {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(items) if items.iter().any(Value::is_object) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        Value::Array(items) if prefix.ends_with("cycles") && items.iter().all(Value::is_array) => {
            for (i, x) in items.iter().enumerate() {
                out.push(format!("{prefix}.{i}: {x}"));
            }
        }
        Value::String(s) => out.push(format!("{prefix}: {s}")),
        other => out.push(format!("{prefix}: {other}")),
    }
}
