//! Deterministic artifact assembly: every float carries 17 significant
//! digits so a reader recovers the exact bits, JSON reports always open with
//! a schema tag, and output goes to a file or stdout unchanged.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

/// 17 significant digits; round-trips every finite f64.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

/// Ordered JSON object builder. `report()` starts with the schema tag.
pub struct JsonObj {
    entries: Vec<(String, String)>,
}

impl JsonObj {
    pub fn report() -> Self {
        let mut o = JsonObj { entries: Vec::new() };
        o.raw("schema", "1");
        o
    }

    pub fn new() -> Self {
        JsonObj { entries: Vec::new() }
    }

    pub fn raw(&mut self, key: &str, value: &str) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.raw(key, &f17(x))
    }

    pub fn int(&mut self, key: &str, n: usize) -> &mut Self {
        self.raw(key, &n.to_string())
    }

    pub fn bool(&mut self, key: &str, b: bool) -> &mut Self {
        self.raw(key, if b { "true" } else { "false" })
    }

    pub fn str(&mut self, key: &str, s: &str) -> &mut Self {
        self.raw(key, &format!("\"{}\"", json_escape(s)))
    }

    /// Top-level document: one key per line, trailing newline.
    pub fn finish(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (k, v)) in self.entries.iter().enumerate() {
            out.push_str(&format!("  \"{k}\": {v}"));
            out.push_str(if i + 1 < self.entries.len() { ",\n" } else { "\n" });
        }
        out.push_str("}\n");
        out
    }

    /// Single-line object for nesting inside arrays.
    pub fn inline(&self) -> String {
        let body: Vec<String> = self
            .entries
            .iter()
            .map(|(k, v)| format!("\"{k}\": {v}"))
            .collect();
        format!("{{{}}}", body.join(", "))
    }
}

pub fn num_array(xs: &[f64]) -> String {
    let body: Vec<String> = xs.iter().map(|&x| f17(x)).collect();
    format!("[{}]", body.join(", "))
}

pub fn int_array(ns: &[usize]) -> String {
    let body: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
    format!("[{}]", body.join(", "))
}

pub fn obj_array(items: &[String]) -> String {
    if items.is_empty() {
        return "[]".into();
    }
    format!("[\n    {}\n  ]", items.join(",\n    "))
}

pub fn csv(header: &str, rows: &[String]) -> String {
    let mut out = String::with_capacity(rows.len() * 40 + header.len() + 2);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// Quotes a CSV field only when it needs it.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes the artifact to the file when a path is given, else to stdout.
pub fn emit(out: Option<&Path>, content: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => io::stdout().write_all(content.as_bytes()),
    }
}
