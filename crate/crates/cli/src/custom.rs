//! Loading user-defined problems from TOML description files.
//!
//! A description file names the rectangular domain, the source density,
//! the Dirichlet boundary data, and optionally an exact solution for error
//! reporting:
//!
//! ```toml
//! name = "quadratic"            # optional, defaults to the file stem
//!
//! [domain]
//! x = [-1.0, 1.0]
//! y = [-1.0, 1.0]
//!
//! [source]
//! expr = "0.25"                 # either an expression ...
//! # mass = 3.14159              # ... or a point mass at a location
//! # at = [0.0, 0.0]
//!
//! [boundary]
//! expr = "0.25 * (x^2 + y^2)"
//!
//! [exact]                       # optional
//! expr = "0.25 * (x^2 + y^2)"
//! ```
//!
//! Expressions use the grammar of [`crate::expr`].

use std::path::Path;

use monge::grid::Domain;
use monge::problems::{Problem, SourceTerm};
use monge::Point;
use serde::Deserialize;

use crate::expr;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    name: Option<String>,
    domain: DomainSpec,
    source: SourceSpec,
    boundary: ExprSpec,
    exact: Option<ExprSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    x: [f64; 2],
    y: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSpec {
    expr: Option<String>,
    mass: Option<f64>,
    at: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExprSpec {
    expr: String,
}

/// Reads and validates a problem description file.
///
/// All failure modes — unreadable file, TOML syntax, unknown keys, malformed
/// expressions, inconsistent source specification, empty domain — surface as
/// a human-readable message naming the file.
pub fn load(path: &Path) -> Result<Problem<f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read '{}': {e}", path.display()))?;
    let file: ProblemFile =
        toml::from_str(&text).map_err(|e| format!("invalid problem file '{}': {e}", path.display()))?;

    let context = |what: &str, err: expr::ParseError| {
        format!("invalid {what} expression in '{}': {err}", path.display())
    };

    let domain = Domain::new(file.domain.x[0], file.domain.x[1], file.domain.y[0], file.domain.y[1])
        .map_err(|e| format!("invalid domain in '{}': {e}", path.display()))?;

    let source = match (file.source.expr, file.source.mass, file.source.at) {
        (Some(src), None, None) => {
            let parsed = expr::parse(&src).map_err(|e| context("source", e))?;
            SourceTerm::Function(parsed.into_field())
        }
        (None, Some(mass), Some(at)) => {
            if mass < 0.0 {
                return Err(format!(
                    "invalid source in '{}': point mass must be nonnegative, got {mass}",
                    path.display()
                ));
            }
            SourceTerm::PointMass {
                at: Point::new(at[0], at[1]),
                mass,
            }
        }
        _ => {
            return Err(format!(
                "invalid source in '{}': give either 'expr' or both 'mass' and 'at'",
                path.display()
            ))
        }
    };

    let boundary = expr::parse(&file.boundary.expr)
        .map_err(|e| context("boundary", e))?
        .into_field();

    let exact = match file.exact {
        Some(spec) => Some(expr::parse(&spec.expr).map_err(|e| context("exact", e))?.into_field()),
        None => None,
    };

    let name = file.name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "custom".to_string())
    });

    Ok(Problem::new(name, domain, source, boundary, exact))
}
