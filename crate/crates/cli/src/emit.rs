//! Deterministic artifact emission: fixed float formatting and atomic
//! file writes (temp + rename in the target directory).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use movcone::exact::QuadExt;
use serde_json::{json, Value};

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Exact value as quad-tuple plus decimal approximation.
pub fn quad_json(q: &QuadExt) -> Value {
    let dec = q.to_f64().map(fmt_f64).unwrap_or_else(|_| "overflow".into());
    json!({ "tuple": q.to_tuple(), "dec": dec })
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    let path = dir.join(name);
    tmp.persist(&path)?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> std::io::Result<PathBuf> {
    let mut body = serde_json::to_string_pretty(value).expect("serializable");
    body.push('\n');
    write_atomic(dir, name, body.as_bytes())
}

/// CSV with a fixed header row; all cells pre-formatted strings.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<PathBuf> {
    let mut body = header.join(",");
    body.push('\n');
    for r in rows {
        body.push_str(&r.join(","));
        body.push('\n');
    }
    write_atomic(dir, name, body.as_bytes())
}
