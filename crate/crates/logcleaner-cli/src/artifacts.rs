//! Artifact kinds owned by the command-line layer: per-line event
//! assignments, evaluation metrics, and inference timings. They follow the
//! same versioned-header convention as the library's artifacts.

use std::path::Path;

use logcleaner_core::artifact;
use logcleaner_core::detectors::EvalMetrics;
use logcleaner_core::template_miner::TemplateSet;

use crate::error::{CliError, Result};

/// Per-line event assignment produced by `mine`: line `i` of the log maps
/// to the event id on body line `i`. Consumed by `group`, which re-reads
/// the raw log alongside it for session keys and per-line labels.
#[derive(Debug)]
pub struct EventAssignments {
    pub events: Vec<u32>,
}

impl EventAssignments {
    pub fn to_artifact_string(&self, set: &TemplateSet) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("events"));
        out.push('\n');
        for &e in &self.events {
            out.push_str(set.event_id(e));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, set: &TemplateSet, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string(set)).map_err(CliError::from)
    }

    pub fn load(path: &Path, set: &TemplateSet) -> Result<EventAssignments> {
        let content = artifact::read_to_string(path)?;
        let mut events = Vec::new();
        for (lineno, line) in artifact::check_header(path, "events", &content)? {
            let id = line.trim();
            if id.is_empty() {
                continue;
            }
            let event = set.index_of(id).ok_or_else(|| {
                CliError::data(format!(
                    "{}:{lineno}: event id `{id}` is not in the template set",
                    path.display()
                ))
            })?;
            events.push(event);
        }
        Ok(EventAssignments { events })
    }
}

/// Evaluation result for one trained model on one dataset slice. Derived
/// ratios are stored for the reader's convenience but verified against the
/// confusion counts on load, so a hand-edited file cannot lie.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsArtifact {
    pub model: String,
    pub groups: usize,
    pub metrics: EvalMetrics,
}

impl MetricsArtifact {
    pub fn to_artifact_string(&self) -> String {
        let m = &self.metrics;
        format!(
            "{}\n#meta model {}\n#meta groups {}\ntp {}\nfp {}\ntn {}\nfn {}\nprecision {}\nrecall {}\nf1 {}\n",
            artifact::header("metrics"),
            self.model,
            self.groups,
            m.tp,
            m.fp,
            m.tn,
            m.fn_,
            artifact::fmt_f64(m.precision),
            artifact::fmt_f64(m.recall),
            artifact::fmt_f64(m.f1),
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string()).map_err(CliError::from)
    }

    pub fn load(path: &Path) -> Result<MetricsArtifact> {
        let content = artifact::read_to_string(path)?;
        let mut model = None;
        let mut groups = None;
        let mut counts = [None::<usize>; 4];
        let mut derived = [None::<f64>; 3];
        for (lineno, line) in artifact::check_header(path, "metrics", &content)? {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#meta ") {
                match rest.split_once(' ') {
                    Some(("model", v)) => model = Some(v.to_string()),
                    Some(("groups", v)) => {
                        groups = Some(artifact::parse_usize(path, lineno, "groups", v)?)
                    }
                    _ => {}
                }
                continue;
            }
            let Some((key, value)) = line.split_once(' ') else {
                return Err(CliError::data(format!(
                    "{}:{lineno}: expected `key value`",
                    path.display()
                )));
            };
            let slot = |arr: &mut [Option<usize>; 4], i: usize| -> Result<()> {
                arr[i] = Some(artifact::parse_usize(path, lineno, key, value)?);
                Ok(())
            };
            match key {
                "tp" => slot(&mut counts, 0)?,
                "fp" => slot(&mut counts, 1)?,
                "tn" => slot(&mut counts, 2)?,
                "fn" => slot(&mut counts, 3)?,
                "precision" => derived[0] = Some(artifact::parse_f64(path, lineno, key, value)?),
                "recall" => derived[1] = Some(artifact::parse_f64(path, lineno, key, value)?),
                "f1" => derived[2] = Some(artifact::parse_f64(path, lineno, key, value)?),
                other => {
                    return Err(CliError::data(format!(
                        "{}:{lineno}: unknown metrics key `{other}`",
                        path.display()
                    )))
                }
            }
        }
        let missing = |what: &str| CliError::data(format!("{}: missing `{what}`", path.display()));
        let metrics = EvalMetrics::from_counts(
            counts[0].ok_or_else(|| missing("tp"))?,
            counts[1].ok_or_else(|| missing("fp"))?,
            counts[2].ok_or_else(|| missing("tn"))?,
            counts[3].ok_or_else(|| missing("fn"))?,
        );
        for (stored, (recomputed, name)) in derived.iter().zip([
            (metrics.precision, "precision"),
            (metrics.recall, "recall"),
            (metrics.f1, "f1"),
        ]) {
            let stored = stored.ok_or_else(|| missing(name))?;
            if (stored - recomputed).abs() > 1e-9 {
                return Err(CliError::data(format!(
                    "{}: stored {name} {stored} disagrees with confusion counts ({recomputed})",
                    path.display()
                )));
            }
        }
        Ok(MetricsArtifact {
            model: model.ok_or_else(|| missing("#meta model"))?,
            groups: groups.ok_or_else(|| missing("#meta groups"))?,
            metrics,
        })
    }
}

/// Wall-clock inference timing, kept out of the metrics artifact so that
/// metrics files stay byte-identical across reruns.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingArtifact {
    pub model: String,
    /// Fastest full prediction pass over the evaluation matrix.
    pub nanos: u128,
    /// Rows in that matrix.
    pub rows: usize,
    /// Timed repetitions the fastest pass was picked from.
    pub reps: usize,
}

impl TimingArtifact {
    pub fn to_artifact_string(&self) -> String {
        format!(
            "{}\n#meta model {}\nnanos {}\nrows {}\nreps {}\n",
            artifact::header("timing"),
            self.model,
            self.nanos,
            self.rows,
            self.reps,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string()).map_err(CliError::from)
    }

    pub fn load(path: &Path) -> Result<TimingArtifact> {
        let content = artifact::read_to_string(path)?;
        let mut model = None;
        let mut nanos = None;
        let mut rows = None;
        let mut reps = None;
        for (lineno, line) in artifact::check_header(path, "timing", &content)? {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#meta ") {
                if let Some(("model", v)) = rest.split_once(' ') {
                    model = Some(v.to_string());
                }
                continue;
            }
            let Some((key, value)) = line.split_once(' ') else {
                return Err(CliError::data(format!(
                    "{}:{lineno}: expected `key value`",
                    path.display()
                )));
            };
            match key {
                "nanos" => {
                    nanos = Some(value.parse::<u128>().map_err(|_| {
                        CliError::data(format!(
                            "{}:{lineno}: invalid nanos `{value}`",
                            path.display()
                        ))
                    })?)
                }
                "rows" => rows = Some(artifact::parse_usize(path, lineno, key, value)?),
                "reps" => reps = Some(artifact::parse_usize(path, lineno, key, value)?),
                other => {
                    return Err(CliError::data(format!(
                        "{}:{lineno}: unknown timing key `{other}`",
                        path.display()
                    )))
                }
            }
        }
        let missing = |what: &str| CliError::data(format!("{}: missing `{what}`", path.display()));
        Ok(TimingArtifact {
            model: model.ok_or_else(|| missing("#meta model"))?,
            nanos: nanos.ok_or_else(|| missing("nanos"))?,
            rows: rows.ok_or_else(|| missing("rows"))?,
            reps: reps.ok_or_else(|| missing("reps"))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_assignments_round_trip() {
        let set = TemplateSet::from_event_ids(["E0".into(), "E1".into(), "E2".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.tsv");
        let assignments = EventAssignments {
            events: vec![0, 2, 2, 1, 0],
        };
        assignments.save(&set, &path).unwrap();
        let loaded = EventAssignments::load(&path, &set).unwrap();
        assert_eq!(loaded.events, assignments.events);
    }

    #[test]
    fn event_assignments_reject_foreign_ids() {
        let set = TemplateSet::from_event_ids(["E0".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.tsv");
        std::fs::write(&path, "#logcleaner-events v1\nE0\nE9\n").unwrap();
        let err = EventAssignments::load(&path, &set).unwrap_err();
        assert!(err.to_string().contains("E9"), "{err}");
    }

    #[test]
    fn metrics_round_trip_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.tsv");
        let original = MetricsArtifact {
            model: "tree".into(),
            groups: 30,
            metrics: EvalMetrics::from_counts(5, 1, 23, 1),
        };
        original.save(&path).unwrap();
        let loaded = MetricsArtifact::load(&path).unwrap();
        assert_eq!(loaded, original);

        // Forge the F1 without touching the counts: the loader notices.
        let text = original
            .to_artifact_string()
            .replace(&format!("f1 {}", artifact::fmt_f64(original.metrics.f1)), "f1 1.0");
        std::fs::write(&path, text).unwrap();
        let err = MetricsArtifact::load(&path).unwrap_err();
        assert!(err.to_string().contains("disagrees"), "{err}");
    }

    #[test]
    fn timing_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let original = TimingArtifact {
            model: "svm".into(),
            nanos: 123_456,
            rows: 30,
            reps: 5,
        };
        original.save(&path).unwrap();
        assert_eq!(TimingArtifact::load(&path).unwrap(), original);
    }

    #[test]
    fn wrong_header_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.tsv");
        std::fs::write(&path, "#logcleaner-timing v1\nnanos 5\n").unwrap();
        assert!(MetricsArtifact::load(&path).is_err());
    }
}
