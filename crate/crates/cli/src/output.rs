//! Artifact writers. Floats are printed with 17 significant digits, every
//! file names the tool version and config hash, and files are written to a
//! temporary name first and then renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Formats a float with 17 significant digits; non-finite values become `nan`, `inf`, `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn write_json_value(out: &mut String, v: &Value, indent: Option<usize>) {
    let (nl, pad, pad_in) = match indent {
        Some(d) => ("\n", "  ".repeat(d), "  ".repeat(d + 1)),
        None => ("", String::new(), String::new()),
    };
    let sep = if indent.is_some() { ": " } else { ":" };
    let deeper = indent.map(|d| d + 1);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&format!("{f:.16e}"));
                } else {
                    out.push_str("null");
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Arrays of scalars stay on one line.
            let flat = items.iter().all(|i| !i.is_array() && !i.is_object());
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat && indent.is_some() {
                        out.push(' ');
                    }
                }
                if !flat {
                    out.push_str(nl);
                    out.push_str(&pad_in);
                }
                write_json_value(out, item, if flat { None } else { deeper });
            }
            if !flat {
                out.push_str(nl);
                out.push_str(&pad);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(nl);
                out.push_str(&pad_in);
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push_str(sep);
                write_json_value(out, item, deeper);
            }
            out.push_str(nl);
            out.push_str(&pad);
            out.push('}');
        }
    }
}

/// Serializes to JSON with 17-digit floats; `pretty` selects indented output.
pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let v = serde_json::to_value(value).context("serializing report")?;
    let mut out = String::new();
    write_json_value(&mut out, &v, pretty.then_some(0));
    Ok(out)
}

/// Destination directory plus the provenance stamped into every file.
#[derive(Debug, Clone)]
pub struct ArtifactWriter {
    pub dir: PathBuf,
    pub config_hash: String,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, config_hash: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), config_hash: config_hash.to_string(), written: Vec::new() })
    }

    pub fn files(&self) -> &[String] {
        &self.written
    }

    fn write_atomic(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn stamp(&self, value: Value) -> Value {
        let mut map = Map::new();
        map.insert("tool_version".into(), Value::String(TOOL_VERSION.into()));
        map.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        match value {
            Value::Object(inner) => map.extend(inner),
            other => {
                map.insert("data".into(), other);
            }
        }
        Value::Object(map)
    }

    /// Pretty JSON object with the provenance fields added.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let v = self.stamp(serde_json::to_value(value)?);
        let mut text = to_json(&v, true)?;
        text.push('\n');
        self.write_atomic(name, &text)
    }

    /// One JSON object per line, each carrying the provenance fields.
    pub fn json_lines<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut text = String::new();
        for r in rows {
            let v = self.stamp(serde_json::to_value(r)?);
            text.push_str(&to_json(&v, false)?);
            text.push('\n');
        }
        self.write_atomic(name, &text)
    }

    /// CSV with a leading `#` provenance comment, then the header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
        let mut text = String::new();
        writeln!(text, "# tool_version={TOOL_VERSION} config_hash={}", self.config_hash)?;
        writeln!(text, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(text, "{}", cells.join(","))?;
        }
        self.write_atomic(name, &text)
    }

    /// Plain text behind a `#` provenance comment; used for formats that treat
    /// `#` lines as comments (TOML, the mesh format).
    pub fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let text = format!("# tool_version={TOOL_VERSION} config_hash={}\n{contents}", self.config_hash);
        self.write_atomic(name, &text)
    }
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => fmt_f64(*f),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let parsed: f64 = fmt_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn json_is_valid_and_round_trips() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
            n: usize,
            s: &'static str,
            bad: f64,
        }
        let r = R { a: 1.0 / 3.0, b: vec![1e-300, -2.5], n: 7, s: "x\"y", bad: f64::NAN };
        for pretty in [true, false] {
            let text = to_json(&r, pretty).unwrap();
            let back: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(back["a"].as_f64().unwrap(), 1.0 / 3.0);
            assert_eq!(back["b"][0].as_f64().unwrap(), 1e-300);
            assert_eq!(back["n"].as_u64().unwrap(), 7);
            assert!(back["bad"].is_null());
        }
    }
}
