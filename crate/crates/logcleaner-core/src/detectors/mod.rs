//! Anomaly detectors over event count features.
//!
//! A [`FeatureMatrix`] holds one row per group and one column per active
//! event (ascending event index), cell values are occurrence counts. All
//! detectors share the [`Model`] front: train on a matrix plus labels,
//! predict labels for a matrix of the same column layout. The external
//! detector is the exception; it scores grouped events through a
//! subprocess text protocol and refuses plain matrices.

pub mod external;
pub mod forest;
pub mod logistic;
pub mod svm;
pub mod tree;

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::artifact;
use crate::error::{Error, Result};
use crate::grouper::{DatasetView, Label};
use crate::template_miner::TemplateSet;

/// Count features: `rows[g][c]` is how often event `events[c]` occurs in
/// group `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub events: Vec<u32>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_view(view: &DatasetView) -> FeatureMatrix {
        let events = view.active_events();
        let col: HashMap<u32, usize> = events.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let rows = (0..view.len())
            .map(|g| {
                let mut row = vec![0.0; events.len()];
                for e in view.events(g) {
                    row[col[&e]] += 1.0;
                }
                row
            })
            .collect();
        FeatureMatrix { events, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.events.len()
    }
}

/// Confusion counts and derived scores; anomalous is the positive class.
/// Undefined ratios (zero denominators) are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalMetrics {
    /// Derives precision, recall, and F1 from raw confusion counts.
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> EvalMetrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalMetrics {
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Scores predictions against ground truth; lengths must match.
pub fn evaluate(predicted: &[Label], truth: &[Label]) -> Result<EvalMetrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (Label::Anomalous, Label::Anomalous) => tp += 1,
            (Label::Anomalous, Label::Normal) => fp += 1,
            (Label::Normal, Label::Normal) => tn += 1,
            (Label::Normal, Label::Anomalous) => fn_ += 1,
        }
    }
    Ok(EvalMetrics::from_counts(tp, fp, tn, fn_))
}

/// Which detector to train. Parsed from names like `logistic`, `svm`,
/// `tree`, `iforest`, `single:<event_id>`, `external:<command>`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Logistic,
    Svm,
    Tree,
    IsolationForest,
    SingleEvent(String),
    External(String),
}

impl ModelKind {
    pub fn from_name(name: &str) -> Result<ModelKind> {
        // Model names round-trip through line-oriented artifacts; an
        // embedded newline would truncate the stored command on reload.
        if name.contains('\n') || name.contains('\r') {
            return Err(Error::InvalidParameter {
                name: "model".into(),
                message: "model names must be a single line; join external commands with `;`"
                    .into(),
            });
        }
        if let Some(eid) = name.strip_prefix("single:") {
            return Ok(ModelKind::SingleEvent(eid.to_string()));
        }
        if let Some(cmd) = name.strip_prefix("external:") {
            return Ok(ModelKind::External(cmd.to_string()));
        }
        match name {
            "logistic" => Ok(ModelKind::Logistic),
            "svm" => Ok(ModelKind::Svm),
            "tree" => Ok(ModelKind::Tree),
            "iforest" => Ok(ModelKind::IsolationForest),
            other => Err(Error::InvalidParameter {
                name: "model".into(),
                message: format!(
                    "unknown model `{other}` (expected logistic, svm, tree, iforest, \
                     single:<event_id>, or external:<command>)"
                ),
            }),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelKind::Logistic => "logistic".into(),
            ModelKind::Svm => "svm".into(),
            ModelKind::Tree => "tree".into(),
            ModelKind::IsolationForest => "iforest".into(),
            ModelKind::SingleEvent(e) => format!("single:{e}"),
            ModelKind::External(c) => format!("external:{c}"),
        }
    }

    fn needs_both_classes(&self) -> bool {
        matches!(self, ModelKind::Logistic | ModelKind::Svm | ModelKind::Tree)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelCore {
    Logistic(logistic::LogisticModel),
    Svm(svm::SvmModel),
    Tree(tree::TreeModel),
    Forest(forest::ForestModel),
    SingleEvent(u32),
    External(String),
}

/// A trained detector plus the column layout it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub columns: Vec<u32>,
    pub core: ModelCore,
}

/// Trains a detector. Supervised kinds require both classes in the
/// training labels; the isolation forest ignores labels; single-event and
/// external detectors have nothing to fit.
pub fn train(
    kind: &ModelKind,
    matrix: &FeatureMatrix,
    labels: &[Label],
    seed: u64,
    set: &TemplateSet,
) -> Result<Model> {
    if matrix.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            predicted: matrix.n_rows(),
            truth: labels.len(),
        });
    }
    if kind.needs_both_classes() {
        for (class, label) in [("anomalous", Label::Anomalous), ("normal", Label::Normal)] {
            if !labels.contains(&label) {
                return Err(Error::SingleClass {
                    missing: class,
                });
            }
        }
    }
    let core = match kind {
        ModelKind::Logistic => ModelCore::Logistic(logistic::train(matrix, labels)),
        ModelKind::Svm => ModelCore::Svm(svm::train(matrix, labels, seed)),
        ModelKind::Tree => ModelCore::Tree(tree::train(matrix, labels)),
        ModelKind::IsolationForest => ModelCore::Forest(forest::train(matrix, seed)),
        ModelKind::SingleEvent(eid) => ModelCore::SingleEvent(
            set.index_of(eid)
                .ok_or_else(|| Error::UnknownEvent(eid.clone()))?,
        ),
        ModelKind::External(cmd) => ModelCore::External(cmd.clone()),
    };
    Ok(Model {
        columns: matrix.events.clone(),
        core,
    })
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match &self.core {
            ModelCore::Logistic(_) => "logistic",
            ModelCore::Svm(_) => "svm",
            ModelCore::Tree(_) => "tree",
            ModelCore::Forest(_) => "iforest",
            ModelCore::SingleEvent(_) => "single_event",
            ModelCore::External(_) => "external",
        }
    }

    /// Predicts one label per matrix row. The matrix must have the
    /// training column layout, except for the single-event detector which
    /// only needs its own column (and predicts normal when that column was
    /// removed). External detectors cannot score matrices.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<Label>> {
        if let ModelCore::External(cmd) = &self.core {
            return Err(Error::External {
                command: cmd.clone(),
                message: "external detectors score grouped events, not feature matrices".into(),
            });
        }
        if let ModelCore::SingleEvent(e) = self.core {
            let col = matrix.events.iter().position(|&x| x == e);
            return Ok(matrix
                .rows
                .iter()
                .map(|row| match col {
                    Some(c) if row[c] > 0.0 => Label::Anomalous,
                    _ => Label::Normal,
                })
                .collect());
        }
        if matrix.events.len() != self.columns.len() {
            return Err(Error::WidthMismatch {
                expected: self.columns.len(),
                got: matrix.events.len(),
            });
        }
        if matrix.events != self.columns {
            return Err(Error::InvalidInput(
                "feature columns do not match the training layout".into(),
            ));
        }
        Ok(match &self.core {
            ModelCore::Logistic(m) => logistic::predict(m, matrix),
            ModelCore::Svm(m) => svm::predict(m, matrix),
            ModelCore::Tree(m) => tree::predict(m, matrix),
            ModelCore::Forest(m) => forest::predict(m, matrix),
            ModelCore::SingleEvent(_) | ModelCore::External(_) => unreachable!(),
        })
    }

    /// Predicts for a dataset view, dispatching external detectors through
    /// the subprocess protocol and everything else through a fresh count
    /// matrix.
    pub fn predict_view(&self, view: &DatasetView, set: &TemplateSet) -> Result<Vec<Label>> {
        match &self.core {
            ModelCore::External(cmd) => external::run(cmd, view, set),
            _ => self.predict(&FeatureMatrix::from_view(view)),
        }
    }

    pub fn save(&self, set: &TemplateSet, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string(set))
    }

    pub fn to_artifact_string(&self, set: &TemplateSet) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("model"));
        out.push('\n');
        out.push_str(&format!("#kind {}\n", self.kind_name()));
        let ids: Vec<&str> = self.columns.iter().map(|&e| set.event_id(e)).collect();
        out.push_str(&format!("#columns {}\n", ids.join(" ")));
        match &self.core {
            ModelCore::Logistic(m) => logistic::write(m, &mut out),
            ModelCore::Svm(m) => svm::write(m, &mut out),
            ModelCore::Tree(m) => tree::write(m, &mut out),
            ModelCore::Forest(m) => forest::write(m, &mut out),
            ModelCore::SingleEvent(e) => {
                out.push_str(&format!("event\t{}\n", set.event_id(*e)));
            }
            ModelCore::External(cmd) => {
                out.push_str(&format!("command\t{cmd}\n"));
            }
        }
        out
    }

    pub fn load(path: &Path, set: &TemplateSet) -> Result<Model> {
        let content = artifact::read_to_string(path)?;
        let mut kind: Option<String> = None;
        let mut columns: Option<Vec<u32>> = None;
        let mut body: Vec<(usize, String)> = Vec::new();
        for (lineno, line) in artifact::check_header(path, "model", &content)? {
            if let Some(k) = line.strip_prefix("#kind ") {
                kind = Some(k.trim().to_string());
            } else if let Some(c) = line.strip_prefix("#columns") {
                columns = Some(
                    c.split_whitespace()
                        .map(|eid| {
                            set.index_of(eid)
                                .ok_or_else(|| Error::UnknownEvent(eid.to_string()))
                        })
                        .collect::<Result<Vec<u32>>>()?,
                );
            } else if !line.starts_with('#') && !line.trim().is_empty() {
                body.push((lineno, line.to_string()));
            }
        }
        let kind = kind.ok_or_else(|| Error::parse(path, 0, "missing #kind line"))?;
        let columns = columns.ok_or_else(|| Error::parse(path, 0, "missing #columns line"))?;
        let core = match kind.as_str() {
            "logistic" => ModelCore::Logistic(logistic::read(path, &body, columns.len())?),
            "svm" => ModelCore::Svm(svm::read(path, &body, columns.len())?),
            "tree" => ModelCore::Tree(tree::read(path, &body)?),
            "iforest" => ModelCore::Forest(forest::read(path, &body)?),
            "single_event" => {
                let (lineno, line) = body
                    .first()
                    .ok_or_else(|| Error::parse(path, 0, "missing event line"))?;
                let eid = line
                    .strip_prefix("event\t")
                    .ok_or_else(|| Error::parse(path, *lineno, "expected `event<TAB>id`"))?;
                ModelCore::SingleEvent(
                    set.index_of(eid)
                        .ok_or_else(|| Error::UnknownEvent(eid.to_string()))?,
                )
            }
            "external" => {
                let (lineno, line) = body
                    .first()
                    .ok_or_else(|| Error::parse(path, 0, "missing command line"))?;
                let cmd = line
                    .strip_prefix("command\t")
                    .ok_or_else(|| Error::parse(path, *lineno, "expected `command<TAB>cmd`"))?;
                ModelCore::External(cmd.to_string())
            }
            other => {
                return Err(Error::parse(path, 0, format!("unknown model kind `{other}`")));
            }
        };
        Ok(Model { columns, core })
    }
}

/// Times repeated predictions and returns them with the fastest full-pass
/// duration, which damps scheduler noise.
pub fn time_inference(
    model: &Model,
    matrix: &FeatureMatrix,
    reps: usize,
) -> Result<(Vec<Label>, Duration)> {
    let mut best = Duration::MAX;
    let mut last = model.predict(matrix)?;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        last = model.predict(matrix)?;
        let elapsed = start.elapsed();
        if elapsed < best {
            best = elapsed;
        }
    }
    Ok((last, best))
}
