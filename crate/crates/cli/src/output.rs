use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;

/// Version and config digest stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: &'static str,
    pub config_sha256: String,
    pub mode: String,
}

impl Provenance {
    pub fn new(config_text: &str, mode: &str) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        Self { version: spinlink::VERSION, config_sha256: hex, mode: mode.to_string() }
    }

    pub fn to_json(&self) -> Value {
        json!({ "tool": "spinlink", "version": self.version, "config_sha256": self.config_sha256, "mode": self.mode })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Appended to the output file stem when a scenario writes several tables.
    pub label: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// Twelve significant digits; plain decimal for moderate magnitudes.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

pub fn render_csv(table: &Table, provenance: &Provenance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# spinlink {}", provenance.version);
    let _ = writeln!(out, "# mode {}", provenance.mode);
    let _ = writeln!(out, "# config_sha256 {}", provenance.config_sha256);
    out.push_str(&table.columns.join(","));
    out.push('\n');
    for row in &table.rows {
        let cells: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Num(v) => format_number(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Missing => String::new(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Rounds every float in a JSON tree to twelve significant digits so JSON and
/// CSV outputs carry the same precision.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            format_number(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Where a scenario's results go: explicit path, config entry, or
/// `<dir>/<config stem>.<ext>` with `dir` from the environment.
pub fn resolve_output(
    cli_out: Option<&Path>,
    config_out: Option<&Path>,
    config_path: &Path,
    env_dir: Option<&Path>,
    format: Format,
) -> PathBuf {
    if let Some(p) = cli_out.or(config_out) {
        return p.to_path_buf();
    }
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    env_dir.unwrap_or(Path::new(".")).join(format!("{stem}.{}", format.extension()))
}

/// `results.csv` with label `N4_f5` becomes `results_N4_f5.csv`.
pub fn labelled_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{label}.{ext}"),
        None => format!("{stem}_{label}"),
    };
    base.with_file_name(name)
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
