//! Machine-readable output: a JSON convergence report per run and an
//! optional CSV dump of each solution.
//!
//! Files are written atomically (temp file in the target directory, then a
//! rename) so a crashed or interrupted run never leaves a truncated report
//! behind.
//!
//! Everything in the report is deterministic for a fixed problem,
//! scheme, and grid, with two deliberate exceptions: the `runtime_ms`
//! field of each row and the `metadata` object (timestamp). Consumers
//! comparing reports should ignore those.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use monge::discretization::GridFunction;
use serde::Serialize;

/// One grid size in a convergence report.
///
/// `n` is the number of grid cells per axis (the solve has `n - 1` interior
/// nodes per axis) and `h = width / n` the mesh spacing. The error and rate
/// columns are `null` when the problem has no exact solution, and the rate
/// columns additionally on the first row or when the sizes do not double.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub h: f64,
    pub l2: Option<f64>,
    pub rate2: Option<f64>,
    pub linf: Option<f64>,
    pub rate_inf: Option<f64>,
    pub policy_iterations: usize,
    pub wide_point_count: usize,
    pub runtime_ms: u64,
}

/// The full JSON document for one invocation.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub problem: String,
    pub scheme: String,
    /// Control-angle sample count; `null` means the per-resolution default
    /// (one sample per interior grid line).
    #[serde(rename = "M")]
    pub samples: Option<usize>,
    pub tol: f64,
    pub norm_convention: &'static str,
    pub rows: Vec<ReportRow>,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub generated_unix_ms: u128,
    pub tool_version: &'static str,
}

impl Metadata {
    pub fn now() -> Self {
        let generated_unix_ms = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        Self {
            generated_unix_ms,
            tool_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

pub const NORM_CONVENTION: &str = "area-weighted-l2";

/// Serializes the report and writes it atomically.
pub fn write_json(path: &Path, report: &Report) -> Result<(), String> {
    let mut body = serde_json::to_string_pretty(report)
        .map_err(|e| format!("cannot serialize report: {e}"))?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Dumps the interior solution values as CSV with full float precision.
///
/// Columns are `x,y,u`; rows walk the interior nodes with the x index
/// outermost, matching the solver's row-major interior ordering.
pub fn write_csv(path: &Path, u: &GridFunction<f64>) -> Result<(), String> {
    let grid = u.grid();
    let n = grid.n();
    let mut body = String::with_capacity(n * n * 64 + 8);
    body.push_str("x,y,u\n");
    for i in 1..=n {
        for j in 1..=n {
            let p = grid.node(i, j);
            let value = u.values()[grid.index(i, j)];
            body.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.x, p.y, value));
        }
    }
    write_atomic(path, body.as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let tmp: PathBuf = {
        let mut name = path.file_name().unwrap_or_default().to_os_string();
        name.push(format!(".tmp-{}", std::process::id()));
        path.with_file_name(name)
    };
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| format!("cannot write '{}': {e}", path.display()))
}
