//! Grouping of parsed event streams into labeled groups.
//!
//! Two strategies: session grouping (a key extracted from each line's
//! content by regex, one group per distinct key) and fixed-size windows
//! over consecutive lines. Groups carry a binary label; datasets are
//! split chronologically and wrapped in [`DatasetView`]s so that event
//! removal never copies the underlying data.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use regex::Regex;

use crate::artifact;
use crate::error::{Error, Result};
use crate::ingest::LabelSource;
use crate::template_miner::TemplateSet;

/// Binary group label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        }
    }

    pub fn from_artifact_str(s: &str) -> Option<Label> {
        match s {
            "normal" => Some(Label::Normal),
            "anomalous" => Some(Label::Anomalous),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type GroupId = String;

/// One labeled group: the event occurrences in line order, duplicates kept,
/// with the originating stream positions alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventGroup {
    pub id: GroupId,
    pub events: Vec<u32>,
    pub label: Label,
    pub line_indices: Vec<usize>,
}

impl EventGroup {
    /// Builds a group with positional line indices; grouping functions fill
    /// in real stream positions instead.
    pub fn new(id: impl Into<String>, events: Vec<u32>, label: Label) -> Self {
        let line_indices = (0..events.len()).collect();
        EventGroup {
            id: id.into(),
            events,
            label,
            line_indices,
        }
    }
}

/// Counters for records that could not be placed or labeled cleanly;
/// grouping itself never fails on them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupWarnings {
    /// Lines whose content had no session-key match; they are dropped.
    pub keyless_dropped: usize,
    /// Session keys absent from the label table; their groups default to
    /// normal.
    pub unlabeled_sessions: usize,
    /// Lines past the end of a per-line label list; treated as normal.
    pub unlabeled_lines: usize,
}

/// A grouped, labeled corpus over a fixed event universe of
/// `0..num_events`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub groups: Vec<EventGroup>,
    pub num_events: usize,
    pub warnings: GroupWarnings,
}

impl LabeledDataset {
    pub fn new(groups: Vec<EventGroup>, num_events: usize) -> Self {
        LabeledDataset {
            groups,
            num_events,
            warnings: GroupWarnings::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_lines(&self) -> usize {
        self.groups.iter().map(|g| g.events.len()).sum()
    }

    pub fn anomalous_count(&self) -> usize {
        self.groups
            .iter()
            .filter(|g| g.label == Label::Anomalous)
            .count()
    }

    pub fn save(&self, set: &TemplateSet, path: &Path) -> Result<()> {
        artifact::write_string(path, &self.to_artifact_string(set))
    }

    pub fn to_artifact_string(&self, set: &TemplateSet) -> String {
        let mut out = String::new();
        out.push_str(&artifact::header("groups"));
        out.push('\n');
        for g in &self.groups {
            let ids: Vec<&str> = g.events.iter().map(|&e| set.event_id(e)).collect();
            out.push_str(&format!("{}\t{}\t{}\n", g.id, g.label, ids.join(" ")));
        }
        out
    }

    pub fn load(path: &Path, set: &TemplateSet) -> Result<Self> {
        let content = artifact::read_to_string(path)?;
        let mut groups = Vec::new();
        for (lineno, line) in artifact::check_header(path, "groups", &content)? {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (id, label, events) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "expected `group_id<TAB>label<TAB>events`",
                    ))
                }
            };
            let label = Label::from_artifact_str(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            let events = events
                .split_whitespace()
                .map(|eid| {
                    set.index_of(eid)
                        .ok_or_else(|| Error::UnknownEvent(eid.to_string()))
                })
                .collect::<Result<Vec<u32>>>()?;
            groups.push(EventGroup::new(id, events, label));
        }
        Ok(LabeledDataset::new(groups, set.len()))
    }
}

/// First capture group when the regex has one, whole match otherwise.
pub fn extract_session_key(regex: &Regex, content: &str) -> Option<String> {
    let caps = regex.captures(content)?;
    let m = caps.get(1).or_else(|| caps.get(0))?;
    Some(m.as_str().to_string())
}

/// Groups records by session key in first-appearance order. Labels come
/// from the source: a session table is looked up by key (missing keys
/// default to normal and are counted), per-line labels taint a session
/// anomalous if any member line is anomalous.
pub fn group_by_session(
    records: &[(u32, &str)],
    key_regex: &Regex,
    labels: &LabelSource,
    num_events: usize,
) -> LabeledDataset {
    let mut order: Vec<GroupId> = Vec::new();
    let mut by_key: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut members: Vec<(Vec<u32>, Vec<usize>)> = Vec::new();
    let mut tainted: Vec<bool> = Vec::new();
    let mut warnings = GroupWarnings::default();

    for (pos, &(event, content)) in records.iter().enumerate() {
        let Some(key) = extract_session_key(key_regex, content) else {
            warnings.keyless_dropped += 1;
            continue;
        };
        let idx = *by_key.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            members.push((Vec::new(), Vec::new()));
            tainted.push(false);
            members.len() - 1
        });
        members[idx].0.push(event);
        members[idx].1.push(pos);
        if let LabelSource::PerLine(line_labels) = labels {
            match line_labels.get(pos) {
                Some(Label::Anomalous) => tainted[idx] = true,
                Some(Label::Normal) => {}
                None => warnings.unlabeled_lines += 1,
            }
        }
    }

    let groups = order
        .into_iter()
        .zip(members)
        .zip(tainted)
        .map(|((id, (events, line_indices)), taint)| {
            let label = match labels {
                LabelSource::PerSession(table) => match table.get(&id) {
                    Some(&l) => l,
                    None => {
                        warnings.unlabeled_sessions += 1;
                        Label::Normal
                    }
                },
                LabelSource::PerLine(_) => {
                    if taint {
                        Label::Anomalous
                    } else {
                        Label::Normal
                    }
                }
            };
            EventGroup {
                id,
                events,
                label,
                line_indices,
            }
        })
        .collect();

    LabeledDataset {
        groups,
        num_events,
        warnings,
    }
}

/// Groups consecutive lines into fixed-size windows (`W0`, `W1`, ...); a
/// partial final window is kept. A window is anomalous if any member line
/// is.
pub fn group_fixed(
    events: &[u32],
    labels: &[Label],
    window: usize,
    num_events: usize,
) -> Result<LabeledDataset> {
    if window == 0 {
        return Err(Error::InvalidParameter {
            name: "window".into(),
            message: "window size must be positive".into(),
        });
    }
    let mut warnings = GroupWarnings::default();
    let groups = events
        .chunks(window)
        .enumerate()
        .map(|(w, chunk)| {
            let start = w * window;
            let mut label = Label::Normal;
            for i in start..start + chunk.len() {
                match labels.get(i) {
                    Some(Label::Anomalous) => label = Label::Anomalous,
                    Some(Label::Normal) => {}
                    None => warnings.unlabeled_lines += 1,
                }
            }
            EventGroup {
                id: format!("W{w}"),
                events: chunk.to_vec(),
                label,
                line_indices: (start..start + chunk.len()).collect(),
            }
        })
        .collect();
    Ok(LabeledDataset {
        groups,
        num_events,
        warnings,
    })
}

/// Chronological split index: `floor(n * ratio)` clamped to `[1, n - 1]`
/// so both halves are non-empty. Requires `n >= 2`.
pub fn split_point(n: usize, ratio: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} group(s) into two non-empty parts"
        )));
    }
    let raw = (n as f64 * ratio).floor() as usize;
    Ok(raw.clamp(1, n - 1))
}

/// A read-only window onto a dataset: a contiguous group range plus a set
/// of removed events. Removal is copy-on-write; the groups themselves are
/// shared and never mutated, so views are cheap to fork.
#[derive(Debug, Clone)]
pub struct DatasetView {
    dataset: Arc<LabeledDataset>,
    removed: Arc<BTreeSet<u32>>,
    start: usize,
    end: usize,
}

impl DatasetView {
    pub fn new(dataset: Arc<LabeledDataset>) -> Self {
        let end = dataset.len();
        DatasetView {
            dataset,
            removed: Arc::new(BTreeSet::new()),
            start: 0,
            end,
        }
    }

    pub fn from_dataset(dataset: LabeledDataset) -> Self {
        DatasetView::new(Arc::new(dataset))
    }

    /// Group count in this view; removal never changes it.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_events(&self) -> usize {
        self.dataset.num_events
    }

    pub fn dataset(&self) -> &Arc<LabeledDataset> {
        &self.dataset
    }

    pub fn removed(&self) -> &BTreeSet<u32> {
        &self.removed
    }

    /// Events still active, ascending. This is the feature column order.
    pub fn active_events(&self) -> Vec<u32> {
        (0..self.dataset.num_events as u32)
            .filter(|e| !self.removed.contains(e))
            .collect()
    }

    pub fn group_id(&self, i: usize) -> &str {
        &self.dataset.groups[self.start + i].id
    }

    pub fn label(&self, i: usize) -> Label {
        self.dataset.groups[self.start + i].label
    }

    pub fn labels(&self) -> Vec<Label> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    /// The group's events with removed ones filtered out, order preserved.
    pub fn events(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        self.dataset.groups[self.start + i]
            .events
            .iter()
            .copied()
            .filter(move |e| !self.removed.contains(e))
    }

    pub fn total_lines(&self) -> usize {
        (0..self.len()).map(|i| self.events(i).count()).sum()
    }

    /// Occurrences of one event across the whole view.
    pub fn event_line_count(&self, event: u32) -> usize {
        (self.start..self.end)
            .map(|g| {
                self.dataset.groups[g]
                    .events
                    .iter()
                    .filter(|&&e| e == event)
                    .count()
            })
            .sum()
    }

    /// Groups in which the event occurs at least once.
    pub fn event_group_count(&self, event: u32) -> usize {
        (self.start..self.end)
            .filter(|&g| self.dataset.groups[g].events.contains(&event))
            .count()
    }

    /// Returns a view with `event` removed. Idempotent; commutes with
    /// other removals.
    pub fn remove_event(&self, event: u32) -> DatasetView {
        if self.removed.contains(&event) {
            return self.clone();
        }
        let mut removed = (*self.removed).clone();
        removed.insert(event);
        DatasetView {
            dataset: Arc::clone(&self.dataset),
            removed: Arc::new(removed),
            start: self.start,
            end: self.end,
        }
    }

    pub fn remove_events<I: IntoIterator<Item = u32>>(&self, events: I) -> DatasetView {
        let mut removed = (*self.removed).clone();
        removed.extend(events);
        DatasetView {
            dataset: Arc::clone(&self.dataset),
            removed: Arc::new(removed),
            start: self.start,
            end: self.end,
        }
    }

    /// Splits the view chronologically at [`split_point`].
    pub fn split(&self, ratio: f64) -> Result<(DatasetView, DatasetView)> {
        let cut = split_point(self.len(), ratio)?;
        let mut left = self.clone();
        let mut right = self.clone();
        left.end = self.start + cut;
        right.start = self.start + cut;
        Ok((left, right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn session_regex() -> Regex {
        Regex::new(r"(blk_-?\d+)").unwrap()
    }

    fn table(entries: &[(&str, Label)]) -> LabelSource {
        LabelSource::PerSession(
            entries
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect::<BTreeMap<_, _>>(),
        )
    }

    #[test]
    fn session_grouping_splits_by_key() {
        let records: Vec<(u32, &str)> = vec![
            (0, "Receiving block blk_1 src /a"),
            (1, "Received block blk_1 ok"),
            (0, "Receiving block blk_2 src /b"),
            (2, "Served block blk_1 to /c"),
            (1, "Received block blk_2 ok"),
            (2, "Served block blk_1 to /d"),
        ];
        let labels = table(&[("blk_1", Label::Anomalous), ("blk_2", Label::Normal)]);
        let ds = group_by_session(&records, &session_regex(), &labels, 3);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.groups[0].id, "blk_1");
        assert_eq!(ds.groups[0].events, vec![0, 1, 2, 2]);
        assert_eq!(ds.groups[0].line_indices, vec![0, 1, 3, 5]);
        assert_eq!(ds.groups[0].label, Label::Anomalous);
        assert_eq!(ds.groups[1].id, "blk_2");
        assert_eq!(ds.groups[1].events, vec![0, 1]);
        assert_eq!(ds.groups[1].label, Label::Normal);
    }

    #[test]
    fn keyless_lines_are_dropped_and_counted() {
        let records: Vec<(u32, &str)> = vec![
            (0, "Receiving block blk_1 src /a"),
            (1, "no key in this line"),
            (2, "also keyless"),
        ];
        let labels = table(&[("blk_1", Label::Normal)]);
        let ds = group_by_session(&records, &session_regex(), &labels, 3);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.total_lines(), 1);
        assert_eq!(ds.warnings.keyless_dropped, 2);
    }

    #[test]
    fn missing_table_entry_defaults_to_normal_with_warning() {
        let records: Vec<(u32, &str)> = vec![(0, "Receiving block blk_9 src /a")];
        let labels = table(&[]);
        let ds = group_by_session(&records, &session_regex(), &labels, 1);
        assert_eq!(ds.groups[0].label, Label::Normal);
        assert_eq!(ds.warnings.unlabeled_sessions, 1);
    }

    #[test]
    fn per_line_labels_taint_sessions() {
        let records: Vec<(u32, &str)> = vec![
            (0, "Receiving block blk_1 src /a"),
            (1, "Receiving block blk_2 src /b"),
            (2, "Received block blk_1 ok"),
        ];
        let labels = LabelSource::PerLine(vec![Label::Normal, Label::Anomalous, Label::Normal]);
        let ds = group_by_session(&records, &session_regex(), &labels, 3);
        assert_eq!(ds.groups[0].label, Label::Normal);
        assert_eq!(ds.groups[1].label, Label::Anomalous);
    }

    #[test]
    fn fixed_windows_partition_with_partial_tail() {
        let events: Vec<u32> = (0..250).map(|i| (i % 4) as u32).collect();
        let labels = vec![Label::Normal; 250];
        let ds = group_fixed(&events, &labels, 100, 4).unwrap();
        assert_eq!(ds.len(), 3);
        let sizes: Vec<usize> = ds.groups.iter().map(|g| g.events.len()).collect();
        assert_eq!(sizes, vec![100, 100, 50]);
        assert_eq!(ds.total_lines(), 250);
        assert_eq!(ds.groups[2].id, "W2");
    }

    #[test]
    fn one_anomalous_line_taints_its_window() {
        let events: Vec<u32> = vec![0; 10];
        let mut labels = vec![Label::Normal; 10];
        labels[7] = Label::Anomalous;
        let ds = group_fixed(&events, &labels, 5, 1).unwrap();
        assert_eq!(ds.groups[0].label, Label::Normal);
        assert_eq!(ds.groups[1].label, Label::Anomalous);
    }

    #[test]
    fn zero_window_is_rejected() {
        assert!(group_fixed(&[0], &[Label::Normal], 0, 1).is_err());
    }

    #[test]
    fn split_point_examples() {
        assert_eq!(split_point(10, 0.8).unwrap(), 8);
        assert_eq!(split_point(2, 0.8).unwrap(), 1);
        assert_eq!(split_point(2, 0.01).unwrap(), 1);
        assert_eq!(split_point(5, 0.99).unwrap(), 4);
        assert!(split_point(1, 0.8).is_err());
    }

    fn toy_dataset() -> LabeledDataset {
        LabeledDataset::new(
            vec![
                EventGroup::new("g0", vec![1, 2, 1], Label::Anomalous),
                EventGroup::new("g1", vec![0], Label::Normal),
                EventGroup::new("g2", vec![1, 1], Label::Normal),
            ],
            3,
        )
    }

    #[test]
    fn removal_filters_occurrences() {
        let view = DatasetView::from_dataset(toy_dataset());
        let after = view.remove_event(1);
        let g0: Vec<u32> = after.events(0).collect();
        assert_eq!(g0, vec![2]);
        assert_eq!(after.len(), view.len());
    }

    #[test]
    fn emptied_group_keeps_its_label() {
        let view = DatasetView::from_dataset(toy_dataset());
        let after = view.remove_event(1).remove_event(2);
        assert_eq!(after.events(0).count(), 0);
        assert_eq!(after.label(0), Label::Anomalous);
        assert_eq!(after.len(), 3);
    }

    #[test]
    fn view_split_respects_ratio() {
        let view = DatasetView::from_dataset(toy_dataset());
        let (train, eval) = view.split(0.8).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(eval.len(), 1);
        assert_eq!(eval.group_id(0), "g2");
    }

    #[test]
    fn split_then_remove_keeps_ranges() {
        let view = DatasetView::from_dataset(toy_dataset());
        let (train, _) = view.split(0.8).unwrap();
        let reduced = train.remove_event(0);
        assert_eq!(reduced.len(), 2);
        assert_eq!(reduced.events(1).count(), 0);
    }

    #[test]
    fn counts_per_event() {
        let view = DatasetView::from_dataset(toy_dataset());
        assert_eq!(view.event_line_count(1), 4);
        assert_eq!(view.event_group_count(1), 2);
        assert_eq!(view.event_line_count(0), 1);
        let after = view.remove_event(1);
        assert_eq!(after.event_line_count(1), 4, "counts ignore the filter");
        assert_eq!(after.active_events(), vec![0, 2]);
    }

    #[test]
    fn artifact_round_trip_with_empty_group() {
        let set = TemplateSet::from_event_ids(["E0".into(), "E1".into(), "E2".into()]);
        let mut ds = toy_dataset();
        ds.groups.push(EventGroup::new("hollow", vec![], Label::Anomalous));
        let f = tempfile::NamedTempFile::new().unwrap();
        ds.save(&set, f.path()).unwrap();
        let loaded = LabeledDataset::load(f.path(), &set).unwrap();
        assert_eq!(loaded.groups, ds.groups);
        assert_eq!(loaded.groups[3].label, Label::Anomalous);
    }

    #[test]
    fn load_rejects_unknown_event_id() {
        let set = TemplateSet::from_event_ids(["E0".into()]);
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "#logcleaner-groups v1\ng0\tnormal\tE0 E9\n").unwrap();
        assert!(matches!(
            LabeledDataset::load(f.path(), &set),
            Err(Error::UnknownEvent(_))
        ));
    }

    #[test]
    fn load_rejects_unknown_label() {
        let set = TemplateSet::from_event_ids(["E0".into()]);
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "#logcleaner-groups v1\ng0\tweird\tE0\n").unwrap();
        assert!(matches!(
            LabeledDataset::load(f.path(), &set),
            Err(Error::UnknownLabel(_))
        ));
    }

    proptest! {
        #[test]
        fn removal_is_idempotent_and_commutative(
            events in proptest::collection::vec(0u32..6, 0..40),
            a in 0u32..6,
            b in 0u32..6,
        ) {
            let ds = LabeledDataset::new(
                vec![EventGroup::new("g", events, Label::Normal)],
                6,
            );
            let view = DatasetView::from_dataset(ds);
            let ab: Vec<u32> = view.remove_event(a).remove_event(b).events(0).collect();
            let ba: Vec<u32> = view.remove_event(b).remove_event(a).events(0).collect();
            let aa: Vec<u32> = view.remove_event(a).remove_event(a).events(0).collect();
            let a_once: Vec<u32> = view.remove_event(a).events(0).collect();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(aa, a_once);
        }

        #[test]
        fn windows_conserve_lines(
            n in 1usize..400,
            window in 1usize..50,
        ) {
            let events: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
            let labels = vec![Label::Normal; n];
            let ds = group_fixed(&events, &labels, window, 3).unwrap();
            prop_assert_eq!(ds.total_lines(), n);
            let expected = n.div_ceil(window);
            prop_assert_eq!(ds.len(), expected);
            for g in &ds.groups[..ds.len() - 1] {
                prop_assert_eq!(g.events.len(), window);
            }
        }

        #[test]
        fn group_count_invariant_under_removal(
            removals in proptest::collection::vec(0u32..4, 0..6),
        ) {
            let ds = LabeledDataset::new(
                vec![
                    EventGroup::new("a", vec![0, 1], Label::Normal),
                    EventGroup::new("b", vec![2, 3], Label::Anomalous),
                ],
                4,
            );
            let mut view = DatasetView::from_dataset(ds);
            let before = view.len();
            let labels_before = view.labels();
            for e in removals {
                view = view.remove_event(e);
            }
            prop_assert_eq!(view.len(), before);
            prop_assert_eq!(view.labels(), labels_before);
        }
    }
}
