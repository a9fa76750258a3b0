//! Versioned line-oriented artifact files.
//!
//! Every artifact starts with a `#logcleaner-<kind> v<n>` header line. Only
//! version 1 exists; readers reject anything else so stale tooling fails
//! loudly instead of misreading a future format.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const VERSION: u32 = 1;

pub fn header(kind: &str) -> String {
    format!("#logcleaner-{kind} v{VERSION}")
}

/// Checks the first line of an artifact and returns the remaining lines.
pub fn check_header<'a>(
    path: &Path,
    kind: &'static str,
    content: &'a str,
) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = content.lines();
    let first = lines.next().unwrap_or("");
    if first.trim_end() != header(kind) {
        return Err(Error::Version {
            path: path.to_path_buf(),
            kind,
            expected: VERSION,
            found: first.to_string(),
        });
    }
    Ok(content
        .lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l)))
}

/// Reads the `#logcleaner-<kind> v<n>` header of a file without validating
/// the kind, for the report command's mixed-version refusal.
pub fn peek_kind_version(content: &str) -> Option<(String, u32)> {
    let first = content.lines().next()?;
    let rest = first.strip_prefix("#logcleaner-")?;
    let (kind, ver) = rest.rsplit_once(" v")?;
    Some((kind.to_string(), ver.trim().parse().ok()?))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Canonical float formatting for artifacts: shortest form that round-trips,
/// so identical values serialize to identical bytes.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

pub fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {field} `{s}`")))
}

pub fn parse_usize(path: &Path, line: usize, field: &str, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {field} `{s}`")))
}
