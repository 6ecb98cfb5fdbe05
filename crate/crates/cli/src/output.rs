//! CSV/JSON data emission and the JSON metadata sidecar.
//!
//! CSV: lowercase snake_case headers, `.` decimal point, 12 significant
//! digits in scientific notation, no locale formatting. JSON mirrors the
//! same columns/rows. Data files are byte-stable for identical configs; the
//! sidecar carries the wall time and is excluded from that guarantee.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::json;

use crate::{CliError, RunConfig};

/// A rectangular table of f64 columns.
pub struct DataTable {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// 12 significant digits, scientific notation.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

impl DataTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| sig12(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|&x| sig12(x)).collect()).collect();
        let v = json!({
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&v).expect("table serialization")
    }

    pub fn write(&self, path: &Path, format: &str) -> Result<(), CliError> {
        let body = match format {
            "csv" => self.to_csv(),
            "json" => self.to_json(),
            other => return Err(CliError::usage(format!("unknown format '{other}'"))),
        };
        fs::write(path, body)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
    }
}

/// Extra per-run metadata fields.
#[derive(Default)]
pub struct MetaExtras {
    pub u0_checksum: Option<String>,
    pub failures: Vec<(usize, String)>,
    pub notes: BTreeMap<String, String>,
}

/// Write `<output>.meta.json` next to the data file: resolved config, the
/// post-2pi frequency block, versions, checksum, failures, wall time.
pub fn write_sidecar(
    output: &Path,
    command: &str,
    config: &RunConfig,
    extras: &MetaExtras,
    wall_time_s: f64,
) -> Result<(), CliError> {
    let failures: Vec<serde_json::Value> = extras
        .failures
        .iter()
        .map(|(idx, msg)| json!({"index": idx, "error": msg}))
        .collect();
    let v = json!({
        "command": command,
        "config": config.to_kv(),
        "resolved_frequencies": config.resolved_frequencies(),
        "u0_checksum": extras.u0_checksum,
        "notes": extras.notes,
        "failures": failures,
        "versions": {
            "sechsim": env!("CARGO_PKG_VERSION"),
        },
        "wall_time_s": wall_time_s,
    });
    let path = sidecar_path(output);
    fs::write(&path, serde_json::to_string_pretty(&v).expect("metadata serialization"))
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut s = output.as_os_str().to_os_string();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}
