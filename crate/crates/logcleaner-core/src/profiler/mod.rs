//! Event profiling: decide which mined events carry anomaly signal and which
//! can be dropped from the stream.
//!
//! The pipeline runs three stages over a labeled dataset:
//!
//! 1. **Frequency filter** — events whose group-level document frequency falls
//!    below a cutoff are set aside as *sporadic*.
//! 2. **Anti-event filter** — events whose mutual information with the anomaly
//!    label is at or below `theta_anti` carry no signal and are removed.
//! 3. **Duplicative separator** — remaining events are embedded as normalized
//!    co-occurrence rows of an appear graph, clustered with OPTICS plus the
//!    xi method, and each cluster keeps only its highest-MI member. Noise
//!    points are outliers (`E_r`) and always survive.
//!
//! The result is a [`ReducedEventSet`]: the full template list annotated with
//! a retain/remove decision per event, serialized with a content hash so the
//! stream filter can refuse stale or corrupted sets.

pub mod optics;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::artifact;
use crate::error::{Error, Result};
use crate::grouper::{DatasetView, Label};
use crate::template_miner::TemplateSet;

pub const DEFAULT_FREQUENCY_CUTOFF: f64 = 0.1;
pub const DEFAULT_THETA_ANTI: f64 = 0.0;
pub const DEFAULT_THETA_DUP: usize = 2;
pub const DEFAULT_XI: f64 = 0.05;
/// Absorbs float noise in the `mi <= theta_anti` comparison, which matters
/// because the default threshold is exactly zero.
pub const ANTI_TOLERANCE: f64 = 1e-12;

/// Profiling thresholds. `theta_anti = None` / `theta_dup = None` disable the
/// corresponding stage entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileConfig {
    /// Document-frequency cutoff; events present in fewer than this fraction
    /// of groups are sporadic. `0.0` disables the stage.
    pub frequency_cutoff: f64,
    /// Mutual-information threshold for anti events.
    pub theta_anti: Option<f64>,
    /// `min_samples` (and minimum cluster size) for the duplicative stage.
    pub theta_dup: Option<usize>,
    /// Steepness parameter for cluster extraction.
    pub xi: f64,
    /// Apply the small-sample bias correction to MI estimates. The corrected
    /// estimate can go negative, which only matters for thresholding.
    pub miller_madow: bool,
    /// Events that are always retained and exempt from every stage, for
    /// operators who know certain rare events are strong anomaly indicators.
    pub whitelist: Vec<u32>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            frequency_cutoff: DEFAULT_FREQUENCY_CUTOFF,
            theta_anti: Some(DEFAULT_THETA_ANTI),
            theta_dup: Some(DEFAULT_THETA_DUP),
            xi: DEFAULT_XI,
            miller_madow: false,
            whitelist: Vec::new(),
        }
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.frequency_cutoff) {
            return Err(Error::InvalidParameter {
                name: "frequency_cutoff",
                message: format!("must be in [0, 1], got {}", self.frequency_cutoff),
            });
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidParameter {
                name: "xi",
                message: format!("must be in (0, 1), got {}", self.xi),
            });
        }
        if let Some(t) = self.theta_anti {
            if !t.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "theta_anti",
                    message: format!("must be finite, got {t}"),
                });
            }
        }
        if let Some(t) = self.theta_dup {
            if t < 2 {
                return Err(Error::InvalidParameter {
                    name: "theta_dup",
                    message: format!("needs at least 2 samples per cluster, got {t}"),
                });
            }
        }
        Ok(())
    }
}

/// Mutual information between one event's presence indicator and the group
/// label, with the 2x2 contingency table it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MiScore {
    pub event_id: u32,
    /// Natural-log MI. Nonnegative for the plug-in estimate; the
    /// bias-corrected variant may dip below zero.
    pub mi: f64,
    /// `[presence][label]` counts: rows absent/present, columns
    /// normal/anomalous. Cells sum to the group count.
    pub presence_counts: [[usize; 2]; 2],
}

/// Plug-in MI over a 2x2 table in nats; zero-count cells contribute nothing.
///
/// With a binary label the per-label-value average and the single pairwise MI
/// coincide, so one number serves both readings. When `miller_madow` is set
/// the occupied-category bias correction
/// `((Kx-1) + (Ky-1) - (Kxy-1)) / 2N` is added.
pub fn mi_from_counts(c: [[usize; 2]; 2], miller_madow: bool) -> f64 {
    let n = c[0][0] + c[0][1] + c[1][0] + c[1][1];
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let row = [c[0][0] + c[0][1], c[1][0] + c[1][1]];
    let col = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            if c[x][y] == 0 {
                continue;
            }
            let p_xy = c[x][y] as f64 / nf;
            let p_x = row[x] as f64 / nf;
            let p_y = col[y] as f64 / nf;
            mi += p_xy * (p_xy / (p_x * p_y)).ln();
        }
    }
    if miller_madow {
        let kx = row.iter().filter(|&&v| v > 0).count();
        let ky = col.iter().filter(|&&v| v > 0).count();
        let kxy = c.iter().flatten().filter(|&&v| v > 0).count();
        mi += ((kx - 1) as f64 + (ky - 1) as f64 - (kxy - 1) as f64) / (2.0 * nf);
    }
    mi
}

fn contingency_for(view: &DatasetView, event: u32) -> [[usize; 2]; 2] {
    let mut c = [[0usize; 2]; 2];
    for g in 0..view.len() {
        let present = usize::from(view.events(g).any(|e| e == event));
        let anomalous = usize::from(view.label(g) == Label::Anomalous);
        c[present][anomalous] += 1;
    }
    c
}

/// Scores one event against the labels.
pub fn mutual_information(view: &DatasetView, event: u32, miller_madow: bool) -> Result<MiScore> {
    if view.is_empty() {
        return Err(Error::InvalidInput(
            "mutual information needs at least one group".into(),
        ));
    }
    if event as usize >= view.num_events() {
        return Err(Error::UnknownEvent(event.to_string()));
    }
    let c = contingency_for(view, event);
    Ok(MiScore {
        event_id: event,
        mi: mi_from_counts(c, miller_madow),
        presence_counts: c,
    })
}

/// Scores many events in one shot; the per-event work is independent, so it
/// runs in parallel while the output stays in input order.
pub fn mi_scores(view: &DatasetView, events: &[u32], miller_madow: bool) -> Result<Vec<MiScore>> {
    if view.is_empty() {
        return Err(Error::InvalidInput(
            "mutual information needs at least one group".into(),
        ));
    }
    for &e in events {
        if e as usize >= view.num_events() {
            return Err(Error::UnknownEvent(e.to_string()));
        }
    }
    Ok(events
        .par_iter()
        .map(|&e| {
            let c = contingency_for(view, e);
            MiScore {
                event_id: e,
                mi: mi_from_counts(c, miller_madow),
                presence_counts: c,
            }
        })
        .collect())
}

/// Per-event frequency diagnostics logged for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub event_id: u32,
    /// Fraction of groups containing the event.
    pub document_frequency: f64,
    /// Mean term frequency (occurrences over group length, averaged over the
    /// groups containing the event) times `ln(N / df_count)`. Purely
    /// informational; the cutoff itself operates on document frequency.
    pub tfidf_weight: f64,
}

/// Splits events into (kept, sporadic) by document frequency and reports the
/// per-event weights. Events in fewer than `cutoff` of the groups are
/// sporadic; a cutoff of zero keeps everything.
pub fn frequency_filter(
    view: &DatasetView,
    cutoff: f64,
) -> Result<(Vec<u32>, Vec<u32>, Vec<FrequencyReport>)> {
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(Error::InvalidParameter {
            name: "frequency_cutoff",
            message: format!("must be in [0, 1], got {cutoff}"),
        });
    }
    if view.is_empty() {
        return Err(Error::InvalidInput(
            "frequency filter needs at least one group".into(),
        ));
    }
    let n_events = view.num_events();
    let n_groups = view.len();
    let mut df_counts = vec![0usize; n_events];
    let mut tf_sums = vec![0.0f64; n_events];
    let mut seen = vec![false; n_events];
    for g in 0..n_groups {
        let events: Vec<u32> = view.events(g).collect();
        if events.is_empty() {
            continue;
        }
        let len = events.len() as f64;
        seen.iter_mut().for_each(|s| *s = false);
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &e in &events {
            *counts.entry(e).or_insert(0) += 1;
        }
        for (&e, &cnt) in &counts {
            if !seen[e as usize] {
                seen[e as usize] = true;
                df_counts[e as usize] += 1;
                tf_sums[e as usize] += cnt as f64 / len;
            }
        }
    }
    let mut kept = Vec::new();
    let mut sporadic = Vec::new();
    let mut reports = Vec::with_capacity(n_events);
    for e in 0..n_events {
        let df = df_counts[e] as f64 / n_groups as f64;
        let tfidf = if df_counts[e] == 0 {
            0.0
        } else {
            let idf = (n_groups as f64 / df_counts[e] as f64).ln();
            (tf_sums[e] / df_counts[e] as f64) * idf
        };
        reports.push(FrequencyReport {
            event_id: e as u32,
            document_frequency: df,
            tfidf_weight: tfidf,
        });
        if df < cutoff {
            sporadic.push(e as u32);
        } else {
            kept.push(e as u32);
        }
    }
    Ok((kept, sporadic, reports))
}

/// Partitions `candidates` into (relevant, anti) events and returns the MI
/// scores behind the decision. An event is anti when its MI is at or below
/// the threshold (plus a tiny tolerance, since the default threshold is 0).
pub fn anti_event_filter(
    view: &DatasetView,
    candidates: &[u32],
    theta_anti: f64,
    miller_madow: bool,
) -> Result<(Vec<u32>, Vec<u32>, Vec<MiScore>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "anti-event filter needs at least one candidate event".into(),
        ));
    }
    let scores = mi_scores(view, candidates, miller_madow)?;
    let mut relevant = Vec::new();
    let mut anti = Vec::new();
    for s in &scores {
        if s.mi <= theta_anti + ANTI_TOLERANCE {
            anti.push(s.event_id);
        } else {
            relevant.push(s.event_id);
        }
    }
    Ok((relevant, anti, scores))
}

/// Symmetric co-occurrence graph over a candidate event set. Two events are
/// linked by the number of groups containing both at least once; the diagonal
/// holds each event's own containment count so rows can be normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearGraph {
    /// Node ids, ascending.
    pub events: Vec<u32>,
    /// `weights[i][j]` = groups containing both `events[i]` and `events[j]`.
    pub weights: Vec<Vec<u64>>,
}

impl AppearGraph {
    pub fn weight(&self, a: u32, b: u32) -> Option<u64> {
        let i = self.events.binary_search(&a).ok()?;
        let j = self.events.binary_search(&b).ok()?;
        Some(self.weights[i][j])
    }

    /// Each row divided by its diagonal; an event contained in no group
    /// yields an all-zero row rather than NaNs.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let diag = row[i] as f64;
                if diag == 0.0 {
                    vec![0.0; row.len()]
                } else {
                    row.iter().map(|&w| w as f64 / diag).collect()
                }
            })
            .collect()
    }
}

/// Counts presence-based co-occurrence: a group contributes at most 1 to any
/// pair no matter how often either event repeats inside it.
pub fn build_appear_graph(view: &DatasetView, events: &[u32]) -> Result<AppearGraph> {
    if events.is_empty() {
        return Err(Error::InvalidInput(
            "appear graph needs at least one event".into(),
        ));
    }
    let mut nodes: Vec<u32> = events.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    for &e in &nodes {
        if e as usize >= view.num_events() {
            return Err(Error::UnknownEvent(e.to_string()));
        }
    }
    let index: HashMap<u32, usize> = nodes.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let n = nodes.len();
    let mut weights = vec![vec![0u64; n]; n];
    let mut present = Vec::new();
    for g in 0..view.len() {
        present.clear();
        for e in view.events(g) {
            if let Some(&i) = index.get(&e) {
                if !present.contains(&i) {
                    present.push(i);
                }
            }
        }
        present.sort_unstable();
        for a in 0..present.len() {
            weights[present[a]][present[a]] += 1;
            for b in (a + 1)..present.len() {
                weights[present[a]][present[b]] += 1;
                weights[present[b]][present[a]] += 1;
            }
        }
    }
    Ok(AppearGraph {
        events: nodes,
        weights,
    })
}

/// Cosine distance with the conventions the profiler needs: two zero vectors
/// are identical (distance 0), a zero vector is maximally far (distance 1)
/// from any nonzero one, and bit-identical vectors are exactly 0 so that
/// duplicate events produce genuine zero-distance points.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a == b {
        return 0.0;
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 && nb == 0.0 {
        return 0.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (na.sqrt() * nb.sqrt())).max(0.0)
}

/// Everything the duplicative stage decided, kept for reports: which events
/// clustered together, the visit order, and the reachability plot.
#[derive(Debug, Clone)]
pub struct SeparatorOutcome {
    /// Graph nodes (candidate events), ascending.
    pub nodes: Vec<u32>,
    pub retained: Vec<u32>,
    /// `(removed event, retained representative from the same cluster)`.
    pub removed: Vec<(u32, u32)>,
    /// Noise points (`E_r`), all retained.
    pub outliers: Vec<u32>,
    /// Cluster label per node, aligned with `nodes`; `None` = noise.
    pub cluster_labels: Vec<Option<usize>>,
    /// Event ids in OPTICS visit order.
    pub visit_order: Vec<u32>,
    /// Reachability aligned with `visit_order`.
    pub reachability: Vec<f64>,
}

/// Clusters near-duplicate events and keeps one representative per cluster:
/// the member with the highest MI, lowest event id on ties. Noise points are
/// outliers and always survive.
pub fn duplicative_separator(
    graph: &AppearGraph,
    mi: &[MiScore],
    theta_dup: usize,
    xi: f64,
) -> Result<SeparatorOutcome> {
    if theta_dup < 2 {
        return Err(Error::InvalidParameter {
            name: "theta_dup",
            message: format!("needs at least 2 samples per cluster, got {theta_dup}"),
        });
    }
    let nodes = graph.events.clone();
    let n = nodes.len();
    if n == 0 {
        return Ok(SeparatorOutcome {
            nodes,
            retained: Vec::new(),
            removed: Vec::new(),
            outliers: Vec::new(),
            cluster_labels: Vec::new(),
            visit_order: Vec::new(),
            reachability: Vec::new(),
        });
    }
    let mi_of: HashMap<u32, f64> = mi.iter().map(|s| (s.event_id, s.mi)).collect();
    for &e in &nodes {
        if !mi_of.contains_key(&e) {
            return Err(Error::UnknownEvent(format!("{e} (no MI score supplied)")));
        }
    }

    let rows = graph.normalized_rows();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| cosine_distance(&rows[i], &rows[j])).collect())
        .collect();
    let optics_out = optics::compute_optics(&dist, theta_dup);
    let (labels, _) = optics::extract_xi_clusters(&optics_out, theta_dup, theta_dup, xi);

    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut retained = Vec::new();
    let mut outliers = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match label {
            Some(l) => clusters.entry(*l).or_default().push(i),
            None => {
                retained.push(nodes[i]);
                outliers.push(nodes[i]);
            }
        }
    }
    let mut removed = Vec::new();
    for members in clusters.values() {
        let mut best = members[0];
        for &m in &members[1..] {
            // Strictly-greater keeps the earlier (lower-id) member on ties.
            if mi_of[&nodes[m]] > mi_of[&nodes[best]] {
                best = m;
            }
        }
        retained.push(nodes[best]);
        for &m in members {
            if m != best {
                removed.push((nodes[m], nodes[best]));
            }
        }
    }
    retained.sort_unstable();
    outliers.sort_unstable();
    removed.sort_unstable();

    let visit_order: Vec<u32> = optics_out.ordering.iter().map(|&i| nodes[i]).collect();
    let reachability = optics_out.reachability_plot();
    Ok(SeparatorOutcome {
        nodes,
        retained,
        removed,
        outliers,
        cluster_labels: labels,
        visit_order,
        reachability,
    })
}

/// Why an event was removed from the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RemovalReason {
    /// Below the document-frequency cutoff.
    Sporadic,
    /// Mutual information with the label at or below `theta_anti`.
    Anti,
    /// Near-duplicate of `representative`, which stays.
    Duplicative { representative: u32 },
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RemovalReason::Sporadic => f.write_str("sporadic"),
            RemovalReason::Anti => f.write_str("anti"),
            RemovalReason::Duplicative { .. } => f.write_str("duplicative"),
        }
    }
}

/// The profiling contract consumed by the stream filter: every event is
/// either retained or mapped to a removal reason, serialized with a content
/// hash.
#[derive(Debug, Clone)]
pub struct ReducedEventSet {
    pub templates: TemplateSet,
    /// Retained event ids, ascending.
    pub retained: Vec<u32>,
    pub removed: BTreeMap<u32, RemovalReason>,
    /// OPTICS noise events (`E_r`), a subset of `retained`.
    pub outliers: Vec<u32>,
    pub frequency_cutoff: f64,
    pub theta_anti: Option<f64>,
    pub theta_dup: Option<usize>,
    pub xi: f64,
    pub miller_madow: bool,
    pub whitelist: Vec<u32>,
    /// Fraction of events removed, as profiled.
    pub event_reduction_pct: f64,
    /// Fraction of the profiled corpus's lines belonging to removed events;
    /// replaying that corpus through the filter reproduces this number.
    pub line_reduction_pct: f64,
}

impl ReducedEventSet {
    pub fn is_retained(&self, event: u32) -> bool {
        !self.removed.contains_key(&event)
    }

    pub fn num_events(&self) -> usize {
        self.templates.len()
    }

    /// Checks the structural invariants: retained/removed partition the event
    /// ids, duplicative representatives are retained members, outliers are
    /// retained.
    pub fn validate(&self) -> Result<()> {
        let n = self.templates.len();
        if self.retained.len() + self.removed.len() != n {
            return Err(Error::InvalidInput(format!(
                "retained ({}) + removed ({}) must partition {} events",
                self.retained.len(),
                self.removed.len(),
                n
            )));
        }
        for &e in &self.retained {
            if e as usize >= n || self.removed.contains_key(&e) {
                return Err(Error::InvalidInput(format!(
                    "event {e} is both retained and removed"
                )));
            }
        }
        for (&e, reason) in &self.removed {
            if e as usize >= n {
                return Err(Error::UnknownEvent(e.to_string()));
            }
            if let RemovalReason::Duplicative { representative } = reason {
                if !self.retained.contains(representative) {
                    return Err(Error::InvalidInput(format!(
                        "duplicative event {e} names non-retained representative {representative}"
                    )));
                }
            }
        }
        for &e in &self.outliers {
            if !self.retained.contains(&e) {
                return Err(Error::InvalidInput(format!(
                    "outlier {e} is not retained"
                )));
            }
        }
        Ok(())
    }

    fn body_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("reduced"));
        out.push('\n');
        out.push_str(&format!(
            "#meta frequency_cutoff {}\n",
            artifact::fmt_f64(self.frequency_cutoff)
        ));
        match self.theta_anti {
            Some(t) => out.push_str(&format!("#meta theta_anti {}\n", artifact::fmt_f64(t))),
            None => out.push_str("#meta theta_anti none\n"),
        }
        match self.theta_dup {
            Some(t) => out.push_str(&format!("#meta theta_dup {t}\n")),
            None => out.push_str("#meta theta_dup none\n"),
        }
        out.push_str(&format!("#meta xi {}\n", artifact::fmt_f64(self.xi)));
        out.push_str(&format!("#meta miller_madow {}\n", self.miller_madow));
        if !self.whitelist.is_empty() {
            let ids: Vec<String> = self.whitelist.iter().map(|e| e.to_string()).collect();
            out.push_str(&format!("#meta whitelist {}\n", ids.join(" ")));
        }
        out.push_str(&format!(
            "#meta event_reduction_pct {}\n",
            artifact::fmt_f64(self.event_reduction_pct)
        ));
        out.push_str(&format!(
            "#meta line_reduction_pct {}\n",
            artifact::fmt_f64(self.line_reduction_pct)
        ));
        out.push_str("#outliers");
        for &e in &self.outliers {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
        for idx in 0..self.templates.len() as u32 {
            let status = match self.removed.get(&idx) {
                None => "retained".to_string(),
                Some(RemovalReason::Sporadic) => "sporadic".to_string(),
                Some(RemovalReason::Anti) => "anti".to_string(),
                Some(RemovalReason::Duplicative { representative }) => {
                    format!("dup:{}", self.templates.event_id(*representative))
                }
            };
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                self.templates.event_id(idx),
                status,
                self.templates.get(idx).template_string()
            ));
        }
        out
    }

    /// Hex SHA-256 over everything that precedes the `#hash` trailer.
    pub fn content_hash(&self) -> String {
        sha256_hex(&self.body_string())
    }

    pub fn to_artifact_string(&self) -> String {
        let body = self.body_string();
        let hash = sha256_hex(&body);
        format!("{body}#hash {hash}\n")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = artifact::read_to_string(path)?;
        Self::parse(path, &content)
    }

    /// Parses and verifies an artifact; the hash must match the bytes that
    /// precede the trailer.
    pub fn parse(path: &Path, content: &str) -> Result<Self> {
        use crate::template_miner::{parse_template_string, EventTemplate, MinerConfig};

        let hash_at = content.rfind("#hash ").ok_or_else(|| {
            Error::parse(path, 0, "missing #hash trailer".to_string())
        })?;
        if hash_at != 0 && content.as_bytes()[hash_at - 1] != b'\n' {
            return Err(Error::parse(path, 0, "malformed #hash trailer"));
        }
        let body = &content[..hash_at];
        let expected = content[hash_at + "#hash ".len()..].trim().to_string();
        let computed = sha256_hex(body);
        if computed != expected {
            return Err(Error::HashMismatch {
                path: path.to_path_buf(),
                expected,
                computed,
            });
        }

        let mut frequency_cutoff = DEFAULT_FREQUENCY_CUTOFF;
        let mut theta_anti = Some(DEFAULT_THETA_ANTI);
        let mut theta_dup = Some(DEFAULT_THETA_DUP);
        let mut xi = DEFAULT_XI;
        let mut miller_madow = false;
        let mut whitelist = Vec::new();
        let mut event_reduction_pct = 0.0;
        let mut line_reduction_pct = 0.0;
        let mut outliers: Vec<u32> = Vec::new();
        // (string id, status text, template text) per event line.
        let mut rows: Vec<(String, String, String)> = Vec::new();

        for (lineno, line) in artifact::check_header(path, "reduced", body)? {
            if let Some(meta) = line.strip_prefix("#meta ") {
                let (key, value) = meta.split_once(' ').ok_or_else(|| {
                    Error::parse(path, lineno, format!("malformed meta line `{line}`"))
                })?;
                match key {
                    "frequency_cutoff" => {
                        frequency_cutoff = artifact::parse_f64(path, lineno, key, value)?
                    }
                    "theta_anti" => {
                        theta_anti = if value == "none" {
                            None
                        } else {
                            Some(artifact::parse_f64(path, lineno, key, value)?)
                        }
                    }
                    "theta_dup" => {
                        theta_dup = if value == "none" {
                            None
                        } else {
                            Some(artifact::parse_usize(path, lineno, key, value)?)
                        }
                    }
                    "xi" => xi = artifact::parse_f64(path, lineno, key, value)?,
                    "miller_madow" => miller_madow = value == "true",
                    "whitelist" => {
                        for id in value.split_whitespace() {
                            whitelist.push(artifact::parse_usize(path, lineno, key, id)? as u32);
                        }
                    }
                    "event_reduction_pct" => {
                        event_reduction_pct = artifact::parse_f64(path, lineno, key, value)?
                    }
                    "line_reduction_pct" => {
                        line_reduction_pct = artifact::parse_f64(path, lineno, key, value)?
                    }
                    _ => {}
                }
                continue;
            }
            if let Some(ids) = line.strip_prefix("#outliers") {
                for id in ids.split_whitespace() {
                    outliers.push(artifact::parse_usize(path, lineno, "outlier", id)? as u32);
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(id), Some(status), Some(template)) => {
                    rows.push((id.to_string(), status.to_string(), template.to_string()))
                }
                _ => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected `event_id<TAB>status<TAB>template`",
                    ))
                }
            }
        }

        let templates: Vec<EventTemplate> = rows
            .iter()
            .map(|(id, _, template)| EventTemplate {
                event_id: id.clone(),
                tokens: parse_template_string(template),
                support_count: 0,
            })
            .collect();
        let templates = TemplateSet::from_templates(templates, MinerConfig::default());

        let mut retained = Vec::new();
        let mut removed = BTreeMap::new();
        for (idx, (_, status, _)) in rows.iter().enumerate() {
            let idx = idx as u32;
            match status.as_str() {
                "retained" => retained.push(idx),
                "sporadic" => {
                    removed.insert(idx, RemovalReason::Sporadic);
                }
                "anti" => {
                    removed.insert(idx, RemovalReason::Anti);
                }
                other => {
                    let rep_id = other.strip_prefix("dup:").ok_or_else(|| {
                        Error::parse(path, 0, format!("unknown status `{other}`"))
                    })?;
                    let representative = templates.index_of(rep_id).ok_or_else(|| {
                        Error::UnknownEvent(rep_id.to_string())
                    })?;
                    removed.insert(idx, RemovalReason::Duplicative { representative });
                }
            }
        }

        let set = ReducedEventSet {
            templates,
            retained,
            removed,
            outliers,
            frequency_cutoff,
            theta_anti,
            theta_dup,
            xi,
            miller_madow,
            whitelist,
            event_reduction_pct,
            line_reduction_pct,
        };
        set.validate()?;
        Ok(set)
    }
}

fn sha256_hex(s: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(s.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Full profiling result: the reduced set plus every intermediate the report
/// command wants to show.
#[derive(Debug, Clone)]
pub struct ProfileOutcome {
    pub reduced: ReducedEventSet,
    pub frequency_reports: Vec<FrequencyReport>,
    /// MI for every event, whether or not it survived.
    pub mi_scores: Vec<MiScore>,
    /// Present when the duplicative stage ran on a nonempty candidate set.
    pub separator: Option<SeparatorOutcome>,
}

/// Runs the three-stage profile over a labeled view.
pub fn profile(
    view: &DatasetView,
    templates: &TemplateSet,
    config: &ProfileConfig,
) -> Result<ProfileOutcome> {
    config.validate()?;
    if view.is_empty() {
        return Err(Error::InvalidInput("cannot profile an empty dataset".into()));
    }
    if templates.len() != view.num_events() {
        return Err(Error::InvalidInput(format!(
            "template set has {} events but the dataset was grouped over {}",
            templates.len(),
            view.num_events()
        )));
    }
    for &e in &config.whitelist {
        if e as usize >= templates.len() {
            return Err(Error::UnknownEvent(e.to_string()));
        }
    }
    let n_events = templates.len();

    let (kept, sporadic, frequency_reports) = frequency_filter(view, config.frequency_cutoff)?;
    let all_events: Vec<u32> = (0..n_events as u32).collect();
    let scores = mi_scores(view, &all_events, config.miller_madow)?;

    let whitelisted = |e: &u32| config.whitelist.contains(e);
    let kept: Vec<u32> = kept.into_iter().filter(|e| !whitelisted(e)).collect();
    let sporadic: Vec<u32> = sporadic.into_iter().filter(|e| !whitelisted(e)).collect();

    let (relevant, anti) = match config.theta_anti {
        Some(theta) if !kept.is_empty() => {
            let mut relevant = Vec::new();
            let mut anti = Vec::new();
            for &e in &kept {
                if scores[e as usize].mi <= theta + ANTI_TOLERANCE {
                    anti.push(e);
                } else {
                    relevant.push(e);
                }
            }
            (relevant, anti)
        }
        _ => (kept, Vec::new()),
    };

    let mut removed: BTreeMap<u32, RemovalReason> = BTreeMap::new();
    for &e in &sporadic {
        removed.insert(e, RemovalReason::Sporadic);
    }
    for &e in &anti {
        removed.insert(e, RemovalReason::Anti);
    }

    let mut outliers = Vec::new();
    let mut separator = None;
    match config.theta_dup {
        Some(theta) if !relevant.is_empty() => {
            let graph = build_appear_graph(view, &relevant)?;
            let sep = duplicative_separator(&graph, &scores, theta, config.xi)?;
            for &(e, rep) in &sep.removed {
                removed.insert(e, RemovalReason::Duplicative { representative: rep });
            }
            outliers = sep.outliers.clone();
            separator = Some(sep);
        }
        _ => {}
    }

    let retained: Vec<u32> = (0..n_events as u32)
        .filter(|e| !removed.contains_key(e))
        .collect();

    let line_counts = {
        let mut counts = vec![0usize; n_events];
        for g in 0..view.len() {
            for e in view.events(g) {
                counts[e as usize] += 1;
            }
        }
        counts
    };
    let total_lines: usize = line_counts.iter().sum();
    let removed_lines: usize = removed.keys().map(|&e| line_counts[e as usize]).sum();
    let event_reduction_pct = if n_events == 0 {
        0.0
    } else {
        removed.len() as f64 / n_events as f64
    };
    let line_reduction_pct = if total_lines == 0 {
        0.0
    } else {
        removed_lines as f64 / total_lines as f64
    };

    let reduced = ReducedEventSet {
        templates: templates.clone(),
        retained,
        removed,
        outliers,
        frequency_cutoff: config.frequency_cutoff,
        theta_anti: config.theta_anti,
        theta_dup: config.theta_dup,
        xi: config.xi,
        miller_madow: config.miller_madow,
        whitelist: config.whitelist.clone(),
        event_reduction_pct,
        line_reduction_pct,
    };
    reduced.validate()?;
    Ok(ProfileOutcome {
        reduced,
        frequency_reports,
        mi_scores: scores,
        separator,
    })
}

/// One row of the cumulative stage table: how much is removed when only the
/// stages up to this one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub stage: &'static str,
    pub events_removed_pct: f64,
    pub lines_removed_pct: f64,
}

/// Cumulative reduction per stage (`none`, `+tfidf`, `+anti`, `+dup`),
/// recomputed from the reduced set's removal reasons and the corpus line
/// counts. Later rows include everything earlier ones removed, so the
/// percentages never decrease.
pub fn ablation_rows(reduced: &ReducedEventSet, view: &DatasetView) -> Vec<AblationRow> {
    let n_events = reduced.num_events();
    let mut line_counts = vec![0usize; n_events];
    for g in 0..view.len() {
        for e in view.events(g) {
            if (e as usize) < n_events {
                line_counts[e as usize] += 1;
            }
        }
    }
    let total_lines: usize = line_counts.iter().sum();

    let stage_of = |reason: &RemovalReason| match reason {
        RemovalReason::Sporadic => 1,
        RemovalReason::Anti => 2,
        RemovalReason::Duplicative { .. } => 3,
    };
    let mut rows = Vec::with_capacity(4);
    for (stage_idx, stage) in ["none", "+tfidf", "+anti", "+dup"].iter().enumerate() {
        let mut events = 0usize;
        let mut lines = 0usize;
        for (&e, reason) in &reduced.removed {
            if stage_of(reason) <= stage_idx {
                events += 1;
                lines += line_counts[e as usize];
            }
        }
        rows.push(AblationRow {
            stage,
            events_removed_pct: if n_events == 0 {
                0.0
            } else {
                events as f64 / n_events as f64
            },
            lines_removed_pct: if total_lines == 0 {
                0.0
            } else {
                lines as f64 / total_lines as f64
            },
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouper::{EventGroup, LabeledDataset};
    use crate::synth;
    use proptest::prelude::*;
    use std::path::PathBuf;

    fn view_from(groups: Vec<EventGroup>, num_events: usize) -> DatasetView {
        DatasetView::from_dataset(LabeledDataset::new(groups, num_events))
    }

    /// Simple dataset builder: each entry is (events, anomalous?).
    fn view_of(shape: &[(&[u32], bool)], num_events: usize) -> DatasetView {
        let groups = shape
            .iter()
            .enumerate()
            .map(|(i, (events, anomalous))| {
                EventGroup::new(
                    format!("g{i}"),
                    events.to_vec(),
                    if *anomalous {
                        Label::Anomalous
                    } else {
                        Label::Normal
                    },
                )
            })
            .collect();
        view_from(groups, num_events)
    }

    // --- mutual information ---

    #[test]
    fn perfectly_predictive_event_has_ln2() {
        // presence (1,1,0,0) against labels (A,A,N,N).
        let view = view_of(
            &[(&[0], true), (&[0], true), (&[], false), (&[], false)],
            1,
        );
        let score = mutual_information(&view, 0, false).unwrap();
        assert!((score.mi - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(score.presence_counts, [[2, 0], [0, 2]]);
    }

    #[test]
    fn constant_event_has_exactly_zero_mi() {
        let view = view_of(
            &[(&[0], true), (&[0], false), (&[0], true), (&[0], false)],
            1,
        );
        let score = mutual_information(&view, 0, false).unwrap();
        assert_eq!(score.mi, 0.0);
    }

    #[test]
    fn independent_event_has_exactly_zero_mi() {
        // presence (1,1,0,0,1,1,0,0), labels (A,A,A,A,N,N,N,N): the joint
        // factorizes exactly, so every log ratio is log(1).
        let shape: Vec<(&[u32], bool)> = vec![
            (&[0], true),
            (&[0], true),
            (&[], true),
            (&[], true),
            (&[0], false),
            (&[0], false),
            (&[], false),
            (&[], false),
        ];
        let view = view_of(&shape, 1);
        let score = mutual_information(&view, 0, false).unwrap();
        assert_eq!(score.mi, 0.0);
    }

    #[test]
    fn contingency_counts_sum_to_group_count() {
        let view = DatasetView::from_dataset(synth::random_dataset(57, 6, 0.3, 11));
        for e in 0..6u32 {
            let s = mutual_information(&view, e, false).unwrap();
            let total: usize = s.presence_counts.iter().flatten().sum();
            assert_eq!(total, 57);
        }
    }

    #[test]
    fn mi_matches_entropy_identity_oracle() {
        // H(X) + H(Y) - H(X,Y) computed from the same table must agree with
        // the direct plug-in sum.
        let entropy = |ps: &[f64]| -> f64 {
            ps.iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum()
        };
        let tables = [
            [[5usize, 3], [2, 7]],
            [[1, 0], [0, 1]],
            [[10, 10], [10, 10]],
            [[0, 4], [4, 0]],
            [[9, 1], [0, 2]],
        ];
        for c in tables {
            let n = (c[0][0] + c[0][1] + c[1][0] + c[1][1]) as f64;
            let px = [
                (c[0][0] + c[0][1]) as f64 / n,
                (c[1][0] + c[1][1]) as f64 / n,
            ];
            let py = [
                (c[0][0] + c[1][0]) as f64 / n,
                (c[0][1] + c[1][1]) as f64 / n,
            ];
            let pxy: Vec<f64> = c.iter().flatten().map(|&v| v as f64 / n).collect();
            let oracle = entropy(&px) + entropy(&py) - entropy(&pxy);
            let got = mi_from_counts(c, false);
            assert!(
                (got - oracle).abs() < 1e-10,
                "table {c:?}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn miller_madow_correction_full_table() {
        // All four cells occupied: correction is (1 + 1 - 3) / 2N = -1/(2N).
        let c = [[5usize, 3], [2, 7]];
        let plain = mi_from_counts(c, false);
        let corrected = mi_from_counts(c, true);
        assert!((corrected - (plain - 1.0 / 34.0)).abs() < 1e-15);
    }

    #[test]
    fn miller_madow_correction_sparse_table() {
        // Row marginal zero: Kx = 1, Ky = 2, Kxy = 2 -> (0 + 1 - 1)/2N = 0.
        let c = [[0usize, 0], [4, 6]];
        assert_eq!(mi_from_counts(c, true), mi_from_counts(c, false));
    }

    proptest! {
        #[test]
        fn mi_nonnegative_and_label_symmetric(
            a in 0usize..30, b in 0usize..30, c in 0usize..30, d in 0usize..30
        ) {
            prop_assume!(a + b + c + d > 0);
            let mi = mi_from_counts([[a, b], [c, d]], false);
            prop_assert!(mi >= -1e-12, "negative mi {mi}");
            // Renaming the label values permutes columns and must not change MI.
            let swapped = mi_from_counts([[b, a], [d, c]], false);
            prop_assert!((mi - swapped).abs() < 1e-12);
        }
    }

    // --- frequency filter ---

    #[test]
    fn rare_event_is_sporadic() {
        // Event 1 in 1 of 20 groups (5%) with the default 10% cutoff.
        let mut shape: Vec<(&[u32], bool)> = vec![(&[0], false); 19];
        shape.push((&[0, 1], true));
        let view = view_of(&shape, 2);
        let (kept, sporadic, reports) = frequency_filter(&view, 0.1).unwrap();
        assert_eq!(kept, vec![0]);
        assert_eq!(sporadic, vec![1]);
        assert!((reports[1].document_frequency - 0.05).abs() < 1e-12);
    }

    #[test]
    fn zero_cutoff_keeps_everything() {
        let view = DatasetView::from_dataset(synth::random_dataset(40, 5, 0.2, 3));
        let (kept, sporadic, _) = frequency_filter(&view, 0.0).unwrap();
        assert_eq!(kept.len(), 5);
        assert!(sporadic.is_empty());
    }

    #[test]
    fn known_frequencies_partition_exactly() {
        // Event e appears in exactly e+1 of 10 groups, so df = (e+1)/10.
        let groups: Vec<EventGroup> = (0..10)
            .map(|g| {
                let events: Vec<u32> = (0..10u32).filter(|&e| g <= e).collect();
                EventGroup::new(format!("g{g}"), events, Label::Normal)
            })
            .collect();
        let view = view_from(groups, 10);
        let (kept, sporadic, reports) = frequency_filter(&view, 0.35).unwrap();
        assert_eq!(sporadic, vec![0, 1, 2]); // df 0.1, 0.2, 0.3 < 0.35
        assert_eq!(kept, (3..10).collect::<Vec<u32>>());
        for (e, r) in reports.iter().enumerate() {
            assert!((r.document_frequency - (e + 1) as f64 / 10.0).abs() < 1e-12);
        }
        // Boundary is strict: df exactly at the cutoff stays.
        let (kept, sporadic, _) = frequency_filter(&view, 0.1).unwrap();
        assert_eq!(kept.len(), 10);
        assert!(sporadic.is_empty());
    }

    // --- anti filter ---

    #[test]
    fn always_present_event_is_anti_at_zero_threshold() {
        let view = view_of(&[(&[0, 1], true), (&[0], false), (&[0, 1], true)], 2);
        let (relevant, anti, _) = anti_event_filter(&view, &[0, 1], 0.0, false).unwrap();
        assert_eq!(anti, vec![0]);
        assert_eq!(relevant, vec![1]);
    }

    #[test]
    fn anti_filter_needs_candidates() {
        let view = view_of(&[(&[0], true)], 1);
        assert!(matches!(
            anti_event_filter(&view, &[], 0.0, false),
            Err(Error::InvalidInput(_))
        ));
    }

    // --- appear graph ---

    #[test]
    fn appear_graph_hand_example() {
        // Groups {E0,E1}, {E0,E1}, {E0}.
        let view = view_of(&[(&[0, 1], false), (&[0, 1], false), (&[0], false)], 2);
        let g = build_appear_graph(&view, &[0, 1]).unwrap();
        assert_eq!(g.weight(0, 1), Some(2));
        assert_eq!(g.weight(0, 0), Some(3));
        assert_eq!(g.weight(1, 1), Some(2));
    }

    #[test]
    fn repeats_inside_a_group_count_once() {
        let view = view_of(&[(&[0, 0, 1, 1, 1], false)], 2);
        let g = build_appear_graph(&view, &[0, 1]).unwrap();
        assert_eq!(g.weight(0, 1), Some(1));
        assert_eq!(g.weight(0, 0), Some(1));
    }

    #[test]
    fn single_event_graph_has_no_edges() {
        let view = view_of(&[(&[0], false), (&[0], false)], 1);
        let g = build_appear_graph(&view, &[0]).unwrap();
        assert_eq!(g.events, vec![0]);
        assert_eq!(g.weights, vec![vec![2]]);
    }

    #[test]
    fn graph_matches_independent_recount() {
        let view = DatasetView::from_dataset(synth::random_dataset(200, 8, 0.25, 21));
        let events: Vec<u32> = (0..8).collect();
        let g = build_appear_graph(&view, &events).unwrap();
        for &a in &events {
            for &b in &events {
                let recount = (0..view.len())
                    .filter(|&i| {
                        let evs: Vec<u32> = view.events(i).collect();
                        evs.contains(&a) && evs.contains(&b)
                    })
                    .count() as u64;
                assert_eq!(g.weight(a, b), Some(recount), "pair ({a},{b})");
                let cap = g.weight(a, a).unwrap().min(g.weight(b, b).unwrap());
                assert!(recount <= cap);
            }
        }
    }

    // --- cosine distance ---

    #[test]
    fn cosine_distance_conventions() {
        assert_eq!(cosine_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
        assert!((cosine_distance(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
        // Scale invariance.
        assert!(cosine_distance(&[1.0, 2.0], &[2.0, 4.0]) < 1e-12);
    }

    // --- duplicative separator ---

    fn plant_view() -> (DatasetView, synth::DuplicatePlant) {
        let plant = synth::duplicate_plant_corpus(3, 4, 60, 5);
        (
            DatasetView::from_dataset(plant.dataset.clone()),
            plant,
        )
    }

    #[test]
    fn planted_duplicates_recovered() {
        let (view, plant) = plant_view();
        let events: Vec<u32> = (0..view.num_events() as u32).collect();
        let scores = mi_scores(&view, &events, false).unwrap();
        let graph = build_appear_graph(&view, &events).unwrap();
        let sep = duplicative_separator(&graph, &scores, 2, DEFAULT_XI).unwrap();

        // Brute-force oracle: exact duplicates are pairs with identical
        // presence patterns.
        for &(a, b) in &plant.pairs {
            let pa: Vec<bool> = (0..view.len())
                .map(|g| view.events(g).any(|e| e == a))
                .collect();
            let pb: Vec<bool> = (0..view.len())
                .map(|g| view.events(g).any(|e| e == b))
                .collect();
            assert_eq!(pa, pb, "plant ({a},{b}) is not an exact duplicate");
        }

        assert_eq!(sep.removed.len(), plant.pairs.len());
        for &(a, b) in &plant.pairs {
            // Identical presence means identical MI, so the tie-break keeps
            // the lower id.
            assert!(sep.retained.contains(&a));
            assert!(sep.removed.contains(&(b, a)), "{b} should fold into {a}");
        }
        assert_eq!(sep.outliers, plant.independents);
    }

    #[test]
    fn representative_is_max_mi_member() {
        let (view, plant) = plant_view();
        let events: Vec<u32> = (0..view.num_events() as u32).collect();
        let graph = build_appear_graph(&view, &events).unwrap();
        // Hand the separator doctored scores that favor the higher id of the
        // first pair; the survivor must follow the scores, not the ordinal.
        let (a, b) = plant.pairs[0];
        let mut scores = mi_scores(&view, &events, false).unwrap();
        scores[b as usize].mi = scores[a as usize].mi + 1.0;
        let sep = duplicative_separator(&graph, &scores, 2, DEFAULT_XI).unwrap();
        assert!(sep.retained.contains(&b));
        assert!(sep.removed.contains(&(a, b)));
    }

    #[test]
    fn separator_rejects_small_theta() {
        let graph = AppearGraph {
            events: vec![0],
            weights: vec![vec![1]],
        };
        let scores = vec![MiScore {
            event_id: 0,
            mi: 0.5,
            presence_counts: [[0, 0], [1, 0]],
        }];
        assert!(matches!(
            duplicative_separator(&graph, &scores, 1, DEFAULT_XI),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn separator_empty_graph_is_empty() {
        let graph = AppearGraph {
            events: Vec::new(),
            weights: Vec::new(),
        };
        let sep = duplicative_separator(&graph, &[], 2, DEFAULT_XI).unwrap();
        assert!(sep.retained.is_empty() && sep.removed.is_empty() && sep.outliers.is_empty());
    }

    #[test]
    fn lone_node_is_outlier() {
        let view = view_of(&[(&[0], true), (&[0], false)], 1);
        let graph = build_appear_graph(&view, &[0]).unwrap();
        let scores = mi_scores(&view, &[0], false).unwrap();
        let sep = duplicative_separator(&graph, &scores, 2, DEFAULT_XI).unwrap();
        assert_eq!(sep.retained, vec![0]);
        assert_eq!(sep.outliers, vec![0]);
    }

    // --- profile composition ---

    #[test]
    fn profile_recovers_all_plants() {
        let (view, plant) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let reduced = &outcome.reduced;
        for &(a, b) in &plant.pairs {
            assert!(reduced.is_retained(a));
            assert_eq!(
                reduced.removed.get(&b),
                Some(&RemovalReason::Duplicative { representative: a })
            );
        }
        for &e in &plant.independents {
            assert!(reduced.is_retained(e));
            assert!(reduced.outliers.contains(&e));
        }
        assert_eq!(reduced.retained.len(), plant.pairs.len() + plant.independents.len());
    }

    #[test]
    fn disabled_stages_retain_everything() {
        let view = DatasetView::from_dataset(synth::random_dataset(30, 6, 0.3, 9));
        let templates = synth::templates_for(6);
        let config = ProfileConfig {
            frequency_cutoff: 0.0,
            theta_anti: None,
            theta_dup: None,
            ..ProfileConfig::default()
        };
        let outcome = profile(&view, &templates, &config).unwrap();
        assert_eq!(outcome.reduced.retained.len(), 6);
        assert!(outcome.reduced.removed.is_empty());
        assert_eq!(outcome.reduced.event_reduction_pct, 0.0);
    }

    #[test]
    fn whitelisted_sporadic_event_is_retained() {
        let mut shape: Vec<(&[u32], bool)> = vec![(&[0], false); 19];
        shape.push((&[0, 1], true));
        let view = view_of(&shape, 2);
        let templates = synth::templates_for(2);
        let config = ProfileConfig {
            whitelist: vec![1],
            ..ProfileConfig::default()
        };
        let outcome = profile(&view, &templates, &config).unwrap();
        assert!(outcome.reduced.is_retained(1));
        // Without the whitelist the same event is sporadic.
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        assert_eq!(
            outcome.reduced.removed.get(&1),
            Some(&RemovalReason::Sporadic)
        );
    }

    #[test]
    fn profile_stage_monotonicity() {
        for seed in [1u64, 8, 23] {
            let view = DatasetView::from_dataset(synth::random_dataset(80, 7, 0.3, seed));
            let templates = synth::templates_for(7);
            let full = profile(&view, &templates, &ProfileConfig::default()).unwrap();
            let no_dup = profile(
                &view,
                &templates,
                &ProfileConfig {
                    theta_dup: None,
                    ..ProfileConfig::default()
                },
            )
            .unwrap();
            let tfidf_only = profile(
                &view,
                &templates,
                &ProfileConfig {
                    theta_anti: None,
                    theta_dup: None,
                    ..ProfileConfig::default()
                },
            )
            .unwrap();
            let retained_full: Vec<u32> = full.reduced.retained.clone();
            let retained_anti: Vec<u32> = no_dup.reduced.retained.clone();
            let retained_tfidf: Vec<u32> = tfidf_only.reduced.retained.clone();
            assert!(retained_full.iter().all(|e| retained_anti.contains(e)));
            assert!(retained_anti.iter().all(|e| retained_tfidf.contains(e)));
            assert!(retained_tfidf.len() <= 7);
        }
    }

    #[test]
    fn profile_is_deterministic() {
        let (view, _) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let a = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let b = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        assert_eq!(
            a.reduced.to_artifact_string(),
            b.reduced.to_artifact_string()
        );
        assert_eq!(a.reduced.content_hash(), b.reduced.content_hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn profile_statuses_partition_events(seed in 0u64..500, n_groups in 4usize..40) {
            let view = DatasetView::from_dataset(synth::random_dataset(n_groups, 5, 0.3, seed));
            let templates = synth::templates_for(5);
            let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
            let r = &outcome.reduced;
            prop_assert_eq!(r.retained.len() + r.removed.len(), 5);
            for e in 0..5u32 {
                let in_retained = r.retained.contains(&e);
                let in_removed = r.removed.contains_key(&e);
                prop_assert!(in_retained != in_removed);
            }
            r.validate().unwrap();
        }
    }

    // --- artifact round trip ---

    #[test]
    fn reduced_artifact_round_trips() {
        let (view, _) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let text = outcome.reduced.to_artifact_string();
        let parsed = ReducedEventSet::parse(&PathBuf::from("mem"), &text).unwrap();
        assert_eq!(parsed.retained, outcome.reduced.retained);
        assert_eq!(parsed.removed, outcome.reduced.removed);
        assert_eq!(parsed.outliers, outcome.reduced.outliers);
        assert_eq!(parsed.theta_anti, outcome.reduced.theta_anti);
        assert_eq!(parsed.theta_dup, outcome.reduced.theta_dup);
        // Reserializing the parsed set reproduces the bytes exactly.
        assert_eq!(parsed.to_artifact_string(), text);
    }

    #[test]
    fn tampered_artifact_fails_hash_check() {
        let (view, _) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let text = outcome
            .reduced
            .to_artifact_string()
            .replacen("retained", "sporadic", 1);
        assert!(matches!(
            ReducedEventSet::parse(&PathBuf::from("mem"), &text),
            Err(Error::HashMismatch { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let (view, _) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reduced.tsv");
        outcome.reduced.save(&path).unwrap();
        let loaded = ReducedEventSet::load(&path).unwrap();
        assert_eq!(loaded.retained, outcome.reduced.retained);
        assert_eq!(loaded.removed, outcome.reduced.removed);
    }

    // --- ablation ---

    #[test]
    fn ablation_rows_are_cumulative_and_monotone() {
        let (view, _) = plant_view();
        let templates = synth::templates_for(view.num_events());
        let outcome = profile(&view, &templates, &ProfileConfig::default()).unwrap();
        let rows = ablation_rows(&outcome.reduced, &view);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].stage, "none");
        assert_eq!(rows[0].events_removed_pct, 0.0);
        assert_eq!(rows[0].lines_removed_pct, 0.0);
        for w in rows.windows(2) {
            assert!(w[1].events_removed_pct >= w[0].events_removed_pct);
            assert!(w[1].lines_removed_pct >= w[0].lines_removed_pct);
        }
        assert!(
            (rows[3].events_removed_pct - outcome.reduced.event_reduction_pct).abs() < 1e-12
        );
        assert!((rows[3].lines_removed_pct - outcome.reduced.line_reduction_pct).abs() < 1e-12);
    }
}
