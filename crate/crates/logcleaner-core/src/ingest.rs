//! Raw log ingestion: header-aware line parsing and label sources.
//!
//! Three dataset families ship with built-in header layouts (HDFS, BGL,
//! Thunderbird, following the loghub conventions) plus a `generic` format
//! and a user-supplied regex. Ingestion is fail-open: a line that does not
//! fit the family layout still becomes a record, with the whole line as
//! content and no header fields.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use regex::Regex;

use crate::error::{Error, Result};
use crate::grouper::Label;

/// One raw log line. `line_index` is the 0-based position in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub line_index: usize,
    /// Raw timestamp text, uninterpreted; empty when the format has none.
    pub timestamp_text: String,
    /// Named header fields in layout order; empty when extraction failed.
    pub header_fields: Vec<(String, String)>,
    pub content: String,
}

/// Built-in header layouts plus a user-supplied pattern.
#[derive(Debug, Clone)]
pub enum DatasetFormat {
    /// `Date Time Pid Level Component: Content`
    Hdfs,
    /// `AlertTag Timestamp Date Node Time NodeRepeat Type Component Level Content`
    Bgl,
    /// `AlertTag Timestamp Date User Month Day Time Location Component Content`
    Thunderbird,
    /// Whole line is content; no header.
    Generic,
    /// Regex with a required `content` named group; every other named group
    /// becomes a header field, and a group named `timestamp` also fills
    /// `timestamp_text`.
    Custom(Regex),
}

impl DatasetFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "hdfs" => Ok(DatasetFormat::Hdfs),
            "bgl" => Ok(DatasetFormat::Bgl),
            "thunderbird" => Ok(DatasetFormat::Thunderbird),
            "generic" => Ok(DatasetFormat::Generic),
            other => Err(Error::InvalidParameter {
                name: "format",
                message: format!("unknown dataset family `{other}` (hdfs|bgl|thunderbird|generic)"),
            }),
        }
    }

    pub fn custom(pattern: &str) -> Result<Self> {
        let re = Regex::new(pattern).map_err(|e| Error::InvalidParameter {
            name: "pattern",
            message: e.to_string(),
        })?;
        if !re.capture_names().flatten().any(|n| n == "content") {
            return Err(Error::InvalidParameter {
                name: "pattern",
                message: "custom pattern needs a (?P<content>...) group".into(),
            });
        }
        Ok(DatasetFormat::Custom(re))
    }

    /// Desk-scale default line cap; the Thunderbird family conventionally
    /// operates on an initial prefix of the file.
    pub fn default_line_limit(&self) -> Option<usize> {
        match self {
            DatasetFormat::Thunderbird => Some(100_000),
            _ => None,
        }
    }

    /// Parses one line into a record. Never fails: lines that do not match
    /// the layout keep their full text as content.
    pub fn parse_line(&self, line_index: usize, line: &str) -> LogRecord {
        let fallback = |content: &str| LogRecord {
            line_index,
            timestamp_text: String::new(),
            header_fields: Vec::new(),
            content: content.to_string(),
        };
        match self {
            DatasetFormat::Generic => fallback(line),
            DatasetFormat::Hdfs => {
                let mut parts = line.splitn(6, char::is_whitespace);
                let fields: Vec<&str> = parts.by_ref().take(5).collect();
                let content = parts.next().unwrap_or("");
                if fields.len() == 5 && fields[4].ends_with(':') && !content.trim().is_empty() {
                    LogRecord {
                        line_index,
                        timestamp_text: format!("{} {}", fields[0], fields[1]),
                        header_fields: named(
                            &["date", "time", "pid", "level", "component"],
                            &fields,
                        ),
                        content: content.trim().to_string(),
                    }
                } else {
                    fallback(line)
                }
            }
            DatasetFormat::Bgl => {
                let mut parts = line.splitn(10, char::is_whitespace);
                let fields: Vec<&str> = parts.by_ref().take(9).collect();
                let content = parts.next().unwrap_or("");
                if fields.len() == 9 && !content.trim().is_empty() {
                    LogRecord {
                        line_index,
                        timestamp_text: fields[4].to_string(),
                        header_fields: named(
                            &[
                                "alert", "timestamp", "date", "node", "time", "node_repeat",
                                "type", "component", "level",
                            ],
                            &fields,
                        ),
                        content: content.trim().to_string(),
                    }
                } else {
                    fallback(line)
                }
            }
            DatasetFormat::Thunderbird => {
                let mut parts = line.splitn(10, char::is_whitespace);
                let fields: Vec<&str> = parts.by_ref().take(9).collect();
                let content = parts.next().unwrap_or("");
                if fields.len() == 9 && !content.trim().is_empty() {
                    LogRecord {
                        line_index,
                        timestamp_text: fields[1].to_string(),
                        header_fields: named(
                            &[
                                "alert", "timestamp", "date", "user", "month", "day", "time",
                                "location", "component",
                            ],
                            &fields,
                        ),
                        content: content.trim().to_string(),
                    }
                } else {
                    fallback(line)
                }
            }
            DatasetFormat::Custom(re) => match re.captures(line) {
                Some(caps) => {
                    let content = caps.name("content").map(|m| m.as_str()).unwrap_or("");
                    if content.trim().is_empty() {
                        return fallback(line);
                    }
                    let mut header_fields = Vec::new();
                    let mut timestamp_text = String::new();
                    for name in re.capture_names().flatten() {
                        if name == "content" {
                            continue;
                        }
                        if let Some(m) = caps.name(name) {
                            if name == "timestamp" {
                                timestamp_text = m.as_str().to_string();
                            }
                            header_fields.push((name.to_string(), m.as_str().to_string()));
                        }
                    }
                    LogRecord {
                        line_index,
                        timestamp_text,
                        header_fields,
                        content: content.trim().to_string(),
                    }
                }
                None => fallback(line),
            },
        }
    }
}

fn named(names: &[&str], values: &[&str]) -> Vec<(String, String)> {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| (n.to_string(), v.to_string()))
        .collect()
}

/// Reads a whole log file into records, in file order. Invalid UTF-8 is
/// replaced, not rejected; only an unreadable file is fatal.
pub fn read_records(path: &Path, format: &DatasetFormat) -> Result<Vec<LogRecord>> {
    read_records_limited(path, format, format.default_line_limit())
}

/// Like [`read_records`] but stops after `limit` lines when given.
pub fn read_records_limited(
    path: &Path,
    format: &DatasetFormat,
    limit: Option<usize>,
) -> Result<Vec<LogRecord>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let limit = limit.unwrap_or(usize::MAX);
    Ok(text
        .lines()
        .take(limit)
        .enumerate()
        .map(|(i, line)| format.parse_line(i, line.strip_suffix('\r').unwrap_or(line)))
        .collect())
}

/// How labels are stored for a dataset family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// First whitespace token of each log line is an alert tag; `-` means
    /// normal, anything else anomalous (BGL/Thunderbird convention).
    PerLinePrefix,
    /// CSV table `BlockId,Label` mapping session keys to Normal/Anomaly.
    PerSessionTable,
}

/// Ground-truth labels, either one per line or one per session key.
#[derive(Debug, Clone)]
pub enum LabelSource {
    PerLine(Vec<Label>),
    PerSession(BTreeMap<String, Label>),
}

impl LabelSource {
    pub fn len(&self) -> usize {
        match self {
            LabelSource::PerLine(v) => v.len(),
            LabelSource::PerSession(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Label for a line index; per-line sources cover every ingested line.
    pub fn line_label(&self, line_index: usize) -> Option<Label> {
        match self {
            LabelSource::PerLine(v) => v.get(line_index).copied(),
            LabelSource::PerSession(_) => None,
        }
    }

    pub fn session_label(&self, key: &str) -> Option<Label> {
        match self {
            LabelSource::PerLine(_) => None,
            LabelSource::PerSession(m) => m.get(key).copied(),
        }
    }
}

/// Loads a label source. Duplicate session keys and unknown label strings
/// are fatal; a missing session at lookup time is not (callers default to
/// normal and count the miss).
pub fn read_labels(path: &Path, kind: LabelKind) -> Result<LabelSource> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    match kind {
        LabelKind::PerLinePrefix => {
            let labels = text
                .lines()
                .map(|line| match line.split_whitespace().next() {
                    Some("-") | None => Label::Normal,
                    Some(_) => Label::Anomalous,
                })
                .collect();
            Ok(LabelSource::PerLine(labels))
        }
        LabelKind::PerSessionTable => {
            let mut map = BTreeMap::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.strip_suffix('\r').unwrap_or(line);
                if line.trim().is_empty() {
                    continue;
                }
                let (key, value) = line.split_once(',').ok_or_else(|| {
                    Error::parse(path, i, "expected `key,label` CSV row".to_string())
                })?;
                if i == 0 && key.eq_ignore_ascii_case("BlockId") {
                    continue; // header row
                }
                let label = parse_table_label(value.trim())?;
                if map.insert(key.trim().to_string(), label).is_some() {
                    return Err(Error::DuplicateSessionKey(key.trim().to_string()));
                }
            }
            Ok(LabelSource::PerSession(map))
        }
    }
}

fn parse_table_label(s: &str) -> Result<Label> {
    if s.eq_ignore_ascii_case("normal") {
        Ok(Label::Normal)
    } else if s.eq_ignore_ascii_case("anomaly") || s.eq_ignore_ascii_case("anomalous") {
        Ok(Label::Anomalous)
    } else {
        Err(Error::UnknownLabel(s.to_string()))
    }
}
