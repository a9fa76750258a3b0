//! Reduction studies: how many events can be removed before detection
//! quality degrades past a tolerance `alpha`.
//!
//! Two harnesses are provided. [`retry_reduce`] walks the candidate events
//! one at a time: remove the event, retrain, and keep the removal only when
//! the resulting F1 stays at or above `(1 - alpha) * f1_max`, where
//! `f1_max` starts at the baseline F1 and is reset to the post-removal F1
//! after every accepted removal. [`cluster_reduce`] first scores every
//! event in isolation (a model trained on groups reduced to just that
//! event), splits the per-event (precision, recall, F1) triples into a
//! relevant and an irrelevant cluster with seeded k-means, drops the
//! irrelevant cluster outright, and then runs the retry loop over the
//! relevant events only.
//!
//! [`categorize_events`] turns a finished [`ReductionTrace`] into a
//! taxonomy: removals that raised F1 by more than `epsilon` are
//! anti-events, other removals are duplicative events, and everything that
//! survived (or was reinstated after a failed trial) is a key event.

pub mod kmeans;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

use crate::artifact;
use crate::detectors::{evaluate, train, EvalMetrics, FeatureMatrix, ModelKind};
use crate::error::{Error, Result};
use crate::grouper::DatasetView;
use crate::template_miner::TemplateSet;

/// Order in which candidate events are tried for removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateOrder {
    /// Most log lines first; ties fall back to ascending event id. Trying
    /// voluminous events early front-loads the potential line reduction.
    #[default]
    FrequencyDesc,
    /// Fewest log lines first; ties fall back to ascending event id.
    FrequencyAsc,
    /// Ascending event id.
    Ordinal,
}

impl CandidateOrder {
    pub fn name(self) -> &'static str {
        match self {
            CandidateOrder::FrequencyDesc => "frequency_desc",
            CandidateOrder::FrequencyAsc => "frequency_asc",
            CandidateOrder::Ordinal => "ordinal",
        }
    }

    pub fn from_name(name: &str) -> Result<CandidateOrder> {
        match name {
            "frequency_desc" => Ok(CandidateOrder::FrequencyDesc),
            "frequency_asc" => Ok(CandidateOrder::FrequencyAsc),
            "ordinal" => Ok(CandidateOrder::Ordinal),
            other => Err(Error::InvalidParameter {
                name: "order",
                message: format!(
                    "unknown candidate order `{other}` (expected frequency_desc, \
                     frequency_asc, or ordinal)"
                ),
            }),
        }
    }
}

/// Knobs shared by both reduction harnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Permissible relative F1 degradation per accepted removal, in `[0, 1)`.
    pub alpha: f64,
    /// Candidate iteration order for the retry loop.
    pub order: CandidateOrder,
    /// Seed for model training and k-means; each retrain reuses it so that
    /// metric movement is attributable to the removal, not optimizer noise.
    pub seed: u64,
    /// Leading fraction of groups used for training; the rest evaluate.
    pub split_ratio: f64,
    /// Repeat passes over reinstated candidates until a pass accepts
    /// nothing. The default single pass visits each candidate once.
    pub multi_pass: bool,
    /// Absolute F1 gain above which an accepted removal counts as an
    /// anti-event when categorizing.
    pub epsilon: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            alpha: 0.02,
            order: CandidateOrder::default(),
            seed: 42,
            split_ratio: 0.8,
            multi_pass: false,
            epsilon: 0.005,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                message: format!("alpha must be in [0, 1), got {}", self.alpha),
            });
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidParameter {
                name: "split_ratio",
                message: format!("split ratio must be in (0, 1), got {}", self.split_ratio),
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                message: format!("epsilon must be finite and non-negative, got {}", self.epsilon),
            });
        }
        Ok(())
    }
}

/// What happened to one candidate event during the retry loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepAction {
    /// The removal kept F1 at or above `(1 - alpha) * f1_max`; the event
    /// stays removed and `f1_max` is reset to the post-removal F1.
    Removed,
    /// The removal dropped F1 below the tolerance; the event is restored
    /// and the dataset view is exactly what it was before the trial.
    Reinstated,
}

impl StepAction {
    pub fn as_str(self) -> &'static str {
        match self {
            StepAction::Removed => "removed",
            StepAction::Reinstated => "reinstated",
        }
    }

    fn from_artifact_str(s: &str) -> Option<StepAction> {
        match s {
            "removed" => Some(StepAction::Removed),
            "reinstated" => Some(StepAction::Reinstated),
            _ => None,
        }
    }
}

/// One trial of the retry loop: the candidate, the verdict, the F1 the
/// surviving model had going in, and the full metrics measured with the
/// candidate removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep {
    pub event_id: u32,
    pub action: StepAction,
    /// F1 of the model on the surviving events just before this trial
    /// (the baseline F1 for the first step).
    pub f1_before: f64,
    /// Metrics measured after removing the candidate, whether or not the
    /// removal was accepted.
    pub metrics_after: EvalMetrics,
}

impl ReductionStep {
    /// F1 movement caused by removing the candidate.
    pub fn f1_delta(&self) -> f64 {
        self.metrics_after.f1 - self.f1_before
    }
}

/// Precision, recall, and F1 of a model trained and evaluated on dataset
/// views where every group keeps only this one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleEventScore {
    pub event_id: u32,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Complete record of one reduction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrace {
    /// Detector name, e.g. `tree`.
    pub model: String,
    pub alpha: f64,
    pub seed: u64,
    pub order: CandidateOrder,
    pub multi_pass: bool,
    pub split_ratio: f64,
    /// Metrics of the model trained before any removal.
    pub baseline: EvalMetrics,
    /// Every trial, in execution order.
    pub steps: Vec<ReductionStep>,
    /// `f1_max` over time: the baseline F1 followed by one entry per
    /// accepted removal. Reinstated trials never touch it.
    pub f1_max_history: Vec<f64>,
    /// Events dropped before the retry loop started (the irrelevant
    /// cluster of [`cluster_reduce`]); empty for plain [`retry_reduce`].
    pub pre_removed: Vec<u32>,
    /// Events still present at the end, ascending.
    pub surviving_events: Vec<u32>,
    /// Per-event isolation scores when the trace came from
    /// [`cluster_reduce`]; empty otherwise.
    pub single_event_scores: Vec<SingleEventScore>,
    /// Metrics of the model on the surviving events (the last accepted
    /// trial, or the baseline when nothing was removed).
    pub final_metrics: EvalMetrics,
    /// Recorded health check, see [`ReductionTrace::recompute_sound`].
    pub sound: bool,
}

impl ReductionTrace {
    /// Events removed by accepted trials, ascending. Accepted removals are
    /// permanent — later passes skip them — so one accepting step settles
    /// the matter. Does not include [`ReductionTrace::pre_removed`].
    pub fn removed_events(&self) -> Vec<u32> {
        self.steps
            .iter()
            .filter(|s| s.action == StepAction::Removed)
            .map(|s| s.event_id)
            .collect::<BTreeSet<u32>>()
            .into_iter()
            .collect()
    }

    /// Every event no longer present: accepted removals plus the
    /// pre-removed set, ascending.
    pub fn all_removed(&self) -> Vec<u32> {
        let mut out: BTreeSet<u32> = self.removed_events().into_iter().collect();
        out.extend(self.pre_removed.iter().copied());
        out.into_iter().collect()
    }

    /// The health check recorded in [`ReductionTrace::sound`]: either the
    /// final F1 is within `alpha` of the baseline, or `f1_max` never
    /// declined. Accepted removals reset `f1_max` to the new (possibly
    /// lower) F1, so a chain of barely-tolerated removals can compound
    /// below `(1 - alpha) * baseline` while each step was individually
    /// acceptable; this flag records whether that happened.
    pub fn recompute_sound(&self) -> bool {
        let within = self.final_metrics.f1 >= (1.0 - self.alpha) * self.baseline.f1;
        let monotone = self
            .f1_max_history
            .windows(2)
            .all(|w| w[1] >= w[0]);
        within || monotone
    }
}

/// Orders the active events of `view` for removal trials.
fn candidate_order(view: &DatasetView, order: CandidateOrder) -> Vec<u32> {
    let mut events = view.active_events();
    match order {
        CandidateOrder::Ordinal => {}
        CandidateOrder::FrequencyDesc => {
            events.sort_by_key(|&e| (std::cmp::Reverse(view.event_line_count(e)), e));
        }
        CandidateOrder::FrequencyAsc => {
            events.sort_by_key(|&e| (view.event_line_count(e), e));
        }
    }
    events
}

/// Trains on one view and evaluates on another with the same removals.
fn fit_once(
    train_view: &DatasetView,
    eval_view: &DatasetView,
    set: &TemplateSet,
    kind: &ModelKind,
    seed: u64,
) -> Result<EvalMetrics> {
    let matrix = FeatureMatrix::from_view(train_view);
    let model = train(kind, &matrix, &train_view.labels(), seed, set)?;
    let predicted = model.predict_view(eval_view, set)?;
    evaluate(&predicted, &eval_view.labels())
}

fn retry_core(
    start: &DatasetView,
    set: &TemplateSet,
    kind: &ModelKind,
    config: &StudyConfig,
    pre_removed: Vec<u32>,
    single_event_scores: Vec<SingleEventScore>,
) -> Result<ReductionTrace> {
    config.validate()?;
    let (train_view, eval_view) = start.split(config.split_ratio)?;
    let candidates = candidate_order(start, config.order);

    let baseline = fit_once(&train_view, &eval_view, set, kind, config.seed)?;
    let mut f1_max = baseline.f1;
    let mut f1_max_history = vec![baseline.f1];
    let mut steps: Vec<ReductionStep> = Vec::new();
    let mut final_metrics = baseline;
    let mut cur_train = train_view;
    let mut cur_eval = eval_view;
    let mut removed: BTreeSet<u32> = BTreeSet::new();

    loop {
        let mut accepted_this_pass = false;
        for &event in &candidates {
            if removed.contains(&event) {
                continue;
            }
            let trial_train = cur_train.remove_event(event);
            let trial_eval = cur_eval.remove_event(event);
            let metrics = fit_once(&trial_train, &trial_eval, set, kind, config.seed)?;
            let f1_before = final_metrics.f1;
            if metrics.f1 < (1.0 - config.alpha) * f1_max {
                // Discarding the trial views restores the exact pre-trial
                // state; removals are copy-on-write.
                steps.push(ReductionStep {
                    event_id: event,
                    action: StepAction::Reinstated,
                    f1_before,
                    metrics_after: metrics,
                });
            } else {
                cur_train = trial_train;
                cur_eval = trial_eval;
                f1_max = metrics.f1;
                f1_max_history.push(f1_max);
                final_metrics = metrics;
                removed.insert(event);
                accepted_this_pass = true;
                steps.push(ReductionStep {
                    event_id: event,
                    action: StepAction::Removed,
                    f1_before,
                    metrics_after: metrics,
                });
            }
        }
        if !(config.multi_pass && accepted_this_pass) {
            break;
        }
    }

    let surviving_events: Vec<u32> = candidates
        .iter()
        .copied()
        .filter(|e| !removed.contains(e))
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect();

    let mut trace = ReductionTrace {
        model: kind.name(),
        alpha: config.alpha,
        seed: config.seed,
        order: config.order,
        multi_pass: config.multi_pass,
        split_ratio: config.split_ratio,
        baseline,
        steps,
        f1_max_history,
        pre_removed,
        surviving_events,
        single_event_scores,
        final_metrics,
        sound: false,
    };
    trace.sound = trace.recompute_sound();
    Ok(trace)
}

/// Retry-based reduction: iterate over the active events of `view` in the
/// configured order; for each, remove it, retrain, and keep the removal
/// only when the new F1 is at least `(1 - alpha) * f1_max`. Accepted
/// removals reset `f1_max` to the new F1; rejected trials restore the view
/// exactly.
pub fn retry_reduce(
    view: &DatasetView,
    set: &TemplateSet,
    kind: &ModelKind,
    config: &StudyConfig,
) -> Result<ReductionTrace> {
    retry_core(view, set, kind, config, Vec::new(), Vec::new())
}

/// Result of [`cluster_reduce`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReduceOutcome {
    /// Isolation metrics per active event, ascending by event id.
    pub scores: Vec<SingleEventScore>,
    /// Events in the cluster whose centroid scored higher (F1, then
    /// precision, then recall).
    pub relevant: Vec<u32>,
    /// Events dropped without a retry trial.
    pub irrelevant: Vec<u32>,
    /// True when every score triple was identical, in which case
    /// clustering is meaningless and every event is kept as relevant.
    pub degenerate: bool,
    /// The retry phase run over the relevant events only; its
    /// `pre_removed` field records the irrelevant cluster.
    pub trace: ReductionTrace,
}

/// Clustering-based reduction: score every event in isolation, split the
/// (precision, recall, F1) triples into two clusters with seeded k-means,
/// discard the lower-scoring cluster, and run the retry loop over the
/// remainder.
pub fn cluster_reduce(
    view: &DatasetView,
    set: &TemplateSet,
    kind: &ModelKind,
    config: &StudyConfig,
) -> Result<ClusterReduceOutcome> {
    config.validate()?;
    let active = view.active_events();
    if active.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "events",
            message: format!(
                "clustering-based reduction needs at least 2 active events, got {}",
                active.len()
            ),
        });
    }
    let (train_view, eval_view) = view.split(config.split_ratio)?;

    // Isolation scores are independent; compute them in parallel but
    // collect in ascending event order.
    let scores: Vec<SingleEventScore> = active
        .par_iter()
        .map(|&event| -> Result<SingleEventScore> {
            let others: Vec<u32> = active.iter().copied().filter(|&x| x != event).collect();
            let solo_train = train_view.remove_events(others.iter().copied());
            let solo_eval = eval_view.remove_events(others);
            let m = fit_once(&solo_train, &solo_eval, set, kind, config.seed)?;
            Ok(SingleEventScore {
                event_id: event,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let triples: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| vec![s.precision, s.recall, s.f1])
        .collect();
    let degenerate = triples.windows(2).all(|w| w[0] == w[1]);

    let (relevant, irrelevant) = if degenerate {
        (active.clone(), Vec::new())
    } else {
        let fit = kmeans::kmeans_default(&triples, 2, config.seed)?;
        let mut sizes = [0usize; 2];
        for &a in &fit.assignment {
            sizes[a] += 1;
        }
        let winner = if sizes[0] == 0 {
            1
        } else if sizes[1] == 0 {
            0
        } else {
            let key = |c: usize| (fit.centroids[c][2], fit.centroids[c][0], fit.centroids[c][1]);
            if key(1) > key(0) {
                1
            } else {
                0
            }
        };
        let mut relevant = Vec::new();
        let mut irrelevant = Vec::new();
        for (i, &event) in active.iter().enumerate() {
            if fit.assignment[i] == winner {
                relevant.push(event);
            } else {
                irrelevant.push(event);
            }
        }
        (relevant, irrelevant)
    };

    let start = view.remove_events(irrelevant.iter().copied());
    let trace = retry_core(
        &start,
        set,
        kind,
        config,
        irrelevant.clone(),
        scores.clone(),
    )?;
    Ok(ClusterReduceOutcome {
        scores,
        relevant,
        irrelevant,
        degenerate,
        trace,
    })
}

/// Event taxonomy produced by [`categorize_events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryKind {
    /// Removal was rejected, or the event was never removed: it carries
    /// signal the detector needs.
    Key,
    /// Removing it *improved* F1 beyond `epsilon`: its presence misleads
    /// the detector. Events discarded by the relevance clustering stage
    /// also land here.
    Anti,
    /// Removed without moving F1 beyond `epsilon` in either direction: its
    /// information was redundant.
    Duplicative,
}

impl CategoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CategoryKind::Key => "key-event",
            CategoryKind::Anti => "anti-event",
            CategoryKind::Duplicative => "duplicative-event",
        }
    }

    fn from_artifact_str(s: &str) -> Option<CategoryKind> {
        match s {
            "key-event" => Some(CategoryKind::Key),
            "anti-event" => Some(CategoryKind::Anti),
            "duplicative-event" => Some(CategoryKind::Duplicative),
            _ => None,
        }
    }
}

/// One event's category plus the F1 delta that justified it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCategory {
    pub event_id: u32,
    pub category: CategoryKind,
    /// F1 movement of the decisive trial; `0` for events that never had a
    /// trial (pre-removed by clustering, or surviving untried).
    pub evidence_delta: f64,
}

/// Classifies every event covered by the trace. The decisive trial is the
/// last step touching the event; accepted removals with an F1 gain above
/// `epsilon` are anti-events, every other accepted removal is duplicative
/// (including removals that cost up to the tolerated `alpha`), reinstated
/// and surviving events are key events, and events the clustering stage
/// discarded without a trial are anti-events with zero recorded delta.
pub fn categorize_events(trace: &ReductionTrace, epsilon: f64) -> Vec<EventCategory> {
    let mut out: BTreeMap<u32, EventCategory> = BTreeMap::new();
    for &event in &trace.pre_removed {
        out.insert(
            event,
            EventCategory {
                event_id: event,
                category: CategoryKind::Anti,
                evidence_delta: 0.0,
            },
        );
    }
    let mut last_step: BTreeMap<u32, &ReductionStep> = BTreeMap::new();
    for step in &trace.steps {
        last_step.insert(step.event_id, step);
    }
    for (&event, step) in &last_step {
        let delta = step.f1_delta();
        let category = match step.action {
            StepAction::Reinstated => CategoryKind::Key,
            StepAction::Removed => {
                if delta > epsilon {
                    CategoryKind::Anti
                } else {
                    CategoryKind::Duplicative
                }
            }
        };
        out.insert(
            event,
            EventCategory {
                event_id: event,
                category,
                evidence_delta: delta,
            },
        );
    }
    for &event in &trace.surviving_events {
        out.entry(event).or_insert(EventCategory {
            event_id: event,
            category: CategoryKind::Key,
            evidence_delta: 0.0,
        });
    }
    out.into_values().collect()
}

/// A categorization run bundled with the settings that produced it, for
/// the `#logcleaner-categories v1` artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryReport {
    pub model: String,
    pub epsilon: f64,
    pub categories: Vec<EventCategory>,
}

impl CategoryReport {
    pub fn from_trace(trace: &ReductionTrace, epsilon: f64) -> CategoryReport {
        CategoryReport {
            model: trace.model.clone(),
            epsilon,
            categories: categorize_events(trace, epsilon),
        }
    }

    pub fn to_artifact_string(&self, set: &TemplateSet) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("categories"));
        out.push('\n');
        out.push_str(&format!("#meta model {}\n", self.model));
        out.push_str(&format!("#meta epsilon {}\n", artifact::fmt_f64(self.epsilon)));
        for c in &self.categories {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                set.event_id(c.event_id),
                c.category.as_str(),
                artifact::fmt_f64(c.evidence_delta)
            ));
        }
        out
    }

    pub fn save(&self, set: &TemplateSet, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string(set))
    }

    pub fn parse(path: &Path, content: &str, set: &TemplateSet) -> Result<CategoryReport> {
        let lines = artifact::check_header(path, "categories", content)?;
        let mut model: Option<String> = None;
        let mut epsilon: Option<f64> = None;
        let mut categories = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#meta ") {
                let (key, value) = rest
                    .split_once(' ')
                    .ok_or_else(|| Error::parse(path, lineno, "malformed #meta line"))?;
                match key {
                    "model" => model = Some(value.to_string()),
                    "epsilon" => epsilon = Some(artifact::parse_f64(path, lineno, "epsilon", value)?),
                    _ => {}
                }
                continue;
            }
            let mut parts = line.split('\t');
            let (id, cat, delta) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c), None) => (a, b, c),
                _ => return Err(Error::parse(path, lineno, "expected `event\\tcategory\\tdelta`")),
            };
            let event_id = set
                .index_of(id)
                .ok_or_else(|| Error::UnknownEvent(id.to_string()))?;
            let category = CategoryKind::from_artifact_str(cat)
                .ok_or_else(|| Error::parse(path, lineno, format!("unknown category `{cat}`")))?;
            let evidence_delta = artifact::parse_f64(path, lineno, "delta", delta)?;
            categories.push(EventCategory {
                event_id,
                category,
                evidence_delta,
            });
        }
        Ok(CategoryReport {
            model: model.ok_or_else(|| Error::parse(path, 0, "missing `#meta model`"))?,
            epsilon: epsilon.ok_or_else(|| Error::parse(path, 0, "missing `#meta epsilon`"))?,
            categories,
        })
    }

    pub fn load(path: &Path, set: &TemplateSet) -> Result<CategoryReport> {
        let content = artifact::read_to_string(path)?;
        Self::parse(path, &content, set)
    }
}

fn fmt_counts(m: &EvalMetrics) -> String {
    format!("{} {} {} {}", m.tp, m.fp, m.tn, m.fn_)
}

fn parse_counts(path: &Path, lineno: usize, rest: &str) -> Result<EvalMetrics> {
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::parse(path, lineno, "expected `tp fp tn fn` counts"));
    }
    let tp = artifact::parse_usize(path, lineno, "tp", parts[0])?;
    let fp = artifact::parse_usize(path, lineno, "fp", parts[1])?;
    let tn = artifact::parse_usize(path, lineno, "tn", parts[2])?;
    let fn_ = artifact::parse_usize(path, lineno, "fn", parts[3])?;
    Ok(EvalMetrics::from_counts(tp, fp, tn, fn_))
}

impl ReductionTrace {
    pub fn to_artifact_string(&self, set: &TemplateSet) -> String {
        let ids = |events: &[u32]| -> String {
            events
                .iter()
                .map(|&e| set.event_id(e).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str(&artifact::header("trace"));
        out.push('\n');
        out.push_str(&format!("#meta model {}\n", self.model));
        out.push_str(&format!("#meta alpha {}\n", artifact::fmt_f64(self.alpha)));
        out.push_str(&format!("#meta seed {}\n", self.seed));
        out.push_str(&format!("#meta order {}\n", self.order.name()));
        out.push_str(&format!("#meta multi_pass {}\n", self.multi_pass));
        out.push_str(&format!(
            "#meta split_ratio {}\n",
            artifact::fmt_f64(self.split_ratio)
        ));
        out.push_str(&format!("#meta sound {}\n", self.sound));
        out.push_str(&format!("#baseline {}\n", fmt_counts(&self.baseline)));
        out.push_str(&format!("#final {}\n", fmt_counts(&self.final_metrics)));
        let history: Vec<String> = self.f1_max_history.iter().map(|&v| artifact::fmt_f64(v)).collect();
        out.push_str(&format!("#f1_max_history {}\n", history.join(" ")));
        if !self.pre_removed.is_empty() {
            out.push_str(&format!("#pre_removed {}\n", ids(&self.pre_removed)));
        }
        out.push_str("#surviving");
        if !self.surviving_events.is_empty() {
            out.push(' ');
            out.push_str(&ids(&self.surviving_events));
        }
        out.push('\n');
        for s in &self.single_event_scores {
            out.push_str(&format!(
                "single\t{}\t{}\t{}\t{}\n",
                set.event_id(s.event_id),
                artifact::fmt_f64(s.precision),
                artifact::fmt_f64(s.recall),
                artifact::fmt_f64(s.f1)
            ));
        }
        for s in &self.steps {
            out.push_str(&format!(
                "step\t{}\t{}\t{}\t{}\n",
                set.event_id(s.event_id),
                s.action.as_str(),
                artifact::fmt_f64(s.f1_before),
                fmt_counts(&s.metrics_after)
            ));
        }
        out
    }

    pub fn save(&self, set: &TemplateSet, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string(set))
    }

    pub fn parse(path: &Path, content: &str, set: &TemplateSet) -> Result<ReductionTrace> {
        let lines = artifact::check_header(path, "trace", content)?;
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut baseline: Option<EvalMetrics> = None;
        let mut final_metrics: Option<EvalMetrics> = None;
        let mut f1_max_history: Option<Vec<f64>> = None;
        let mut pre_removed: Vec<u32> = Vec::new();
        let mut surviving: Option<Vec<u32>> = None;
        let mut single_event_scores = Vec::new();
        let mut steps = Vec::new();

        let parse_ids = |rest: &str| -> Result<Vec<u32>> {
            rest.split_whitespace()
                .map(|id| {
                    set.index_of(id)
                        .ok_or_else(|| Error::UnknownEvent(id.to_string()))
                })
                .collect()
        };

        for (lineno, raw) in lines {
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#meta ") {
                let (key, value) = rest
                    .split_once(' ')
                    .ok_or_else(|| Error::parse(path, lineno, "malformed #meta line"))?;
                meta.insert(key.to_string(), value.to_string());
            } else if let Some(rest) = line.strip_prefix("#baseline ") {
                baseline = Some(parse_counts(path, lineno, rest)?);
            } else if let Some(rest) = line.strip_prefix("#final ") {
                final_metrics = Some(parse_counts(path, lineno, rest)?);
            } else if let Some(rest) = line.strip_prefix("#f1_max_history") {
                let vals: Result<Vec<f64>> = rest
                    .split_whitespace()
                    .map(|v| artifact::parse_f64(path, lineno, "f1_max", v))
                    .collect();
                f1_max_history = Some(vals?);
            } else if let Some(rest) = line.strip_prefix("#pre_removed") {
                pre_removed = parse_ids(rest)?;
            } else if let Some(rest) = line.strip_prefix("#surviving") {
                surviving = Some(parse_ids(rest)?);
            } else if let Some(rest) = line.strip_prefix("single\t") {
                let parts: Vec<&str> = rest.split('\t').collect();
                if parts.len() != 4 {
                    return Err(Error::parse(path, lineno, "expected `single\\tevent\\tp\\tr\\tf1`"));
                }
                let event_id = set
                    .index_of(parts[0])
                    .ok_or_else(|| Error::UnknownEvent(parts[0].to_string()))?;
                single_event_scores.push(SingleEventScore {
                    event_id,
                    precision: artifact::parse_f64(path, lineno, "precision", parts[1])?,
                    recall: artifact::parse_f64(path, lineno, "recall", parts[2])?,
                    f1: artifact::parse_f64(path, lineno, "f1", parts[3])?,
                });
            } else if let Some(rest) = line.strip_prefix("step\t") {
                let parts: Vec<&str> = rest.split('\t').collect();
                if parts.len() != 4 {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected `step\\tevent\\taction\\tf1_before\\tcounts`",
                    ));
                }
                let event_id = set
                    .index_of(parts[0])
                    .ok_or_else(|| Error::UnknownEvent(parts[0].to_string()))?;
                let action = StepAction::from_artifact_str(parts[1])
                    .ok_or_else(|| Error::parse(path, lineno, format!("unknown action `{}`", parts[1])))?;
                let f1_before = artifact::parse_f64(path, lineno, "f1_before", parts[2])?;
                let metrics_after = parse_counts(path, lineno, parts[3])?;
                steps.push(ReductionStep {
                    event_id,
                    action,
                    f1_before,
                    metrics_after,
                });
            } else {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unrecognized trace line `{line}`"),
                ));
            }
        }

        let req = |key: &str| -> Result<String> {
            meta.get(key)
                .cloned()
                .ok_or_else(|| Error::parse(path, 0, format!("missing `#meta {key}`")))
        };
        let parse_bool = |key: &str, value: &str| -> Result<bool> {
            match value {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(Error::parse(
                    path,
                    0,
                    format!("`#meta {key}` must be true or false, got `{other}`"),
                )),
            }
        };
        let model = req("model")?;
        let alpha = artifact::parse_f64(path, 0, "alpha", &req("alpha")?)?;
        let seed = artifact::parse_usize(path, 0, "seed", &req("seed")?)? as u64;
        let order = CandidateOrder::from_name(&req("order")?)?;
        let multi_pass = parse_bool("multi_pass", &req("multi_pass")?)?;
        let split_ratio = artifact::parse_f64(path, 0, "split_ratio", &req("split_ratio")?)?;
        let sound = parse_bool("sound", &req("sound")?)?;

        Ok(ReductionTrace {
            model,
            alpha,
            seed,
            order,
            multi_pass,
            split_ratio,
            baseline: baseline.ok_or_else(|| Error::parse(path, 0, "missing `#baseline`"))?,
            steps,
            f1_max_history: f1_max_history
                .ok_or_else(|| Error::parse(path, 0, "missing `#f1_max_history`"))?,
            pre_removed,
            surviving_events: surviving
                .ok_or_else(|| Error::parse(path, 0, "missing `#surviving`"))?,
            single_event_scores,
            final_metrics: final_metrics.ok_or_else(|| Error::parse(path, 0, "missing `#final`"))?,
            sound,
        })
    }

    pub fn load(path: &Path, set: &TemplateSet) -> Result<ReductionTrace> {
        let content = artifact::read_to_string(path)?;
        Self::parse(path, &content, set)
    }
}
