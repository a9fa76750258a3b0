//! End-to-end flows across module boundaries: raw log text in, reduced
//! detection pipeline out. Each test drives the public API the way the CLI
//! does — ingest, mine, group, train, profile, filter — against corpora with
//! planted structure, so regressions at a seam between modules surface here
//! even when every module's own unit tests still pass.

use std::fs;

use logcleaner_core::detectors::{self, FeatureMatrix, ModelKind};
use logcleaner_core::grouper::{self, DatasetView, Label};
use logcleaner_core::ingest::{self, DatasetFormat, LabelKind, LabelSource};
use logcleaner_core::profiler::{self, ProfileConfig, RemovalReason};
use logcleaner_core::stream_filter::StreamFilter;
use logcleaner_core::study::{self, CategoryKind, StudyConfig};
use logcleaner_core::synth;
use logcleaner_core::template_miner::{self, MinerConfig, TemplateSet};
use regex::Regex;

/// Finds the event whose template contains the given literal. The fixture's
/// print sites each carry a distinguishing constant token, so this maps
/// mined event ids (which depend on first-appearance order) back to roles.
fn event_with(set: &TemplateSet, needle: &str) -> u32 {
    let hits: Vec<u32> = (0..set.len() as u32)
        .filter(|&e| set.get(e).template_string().contains(needle))
        .collect();
    assert_eq!(hits.len(), 1, "literal {needle:?} should pin down one template, got {hits:?}");
    hits[0]
}

struct MinedHdfs {
    set: TemplateSet,
    view: DatasetView,
    contents: Vec<String>,
}

/// Writes the block-storage fixture to disk and runs ingest → mine → group.
fn build_hdfs(n_blocks: usize, seed: u64) -> MinedHdfs {
    let fix = synth::hdfs_fixture(n_blocks, seed);
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("storage.log");
    let labels_path = dir.path().join("labels.csv");
    fs::write(&log_path, fix.log_lines.join("\n") + "\n").unwrap();
    fs::write(&labels_path, &fix.labels_csv).unwrap();

    let records = ingest::read_records(&log_path, &DatasetFormat::Hdfs).unwrap();
    assert_eq!(records.len(), fix.log_lines.len());
    let (set, assignments) =
        template_miner::mine(records.iter().map(|r| r.content.as_str()), MinerConfig::default());

    let labels = ingest::read_labels(&labels_path, LabelKind::PerSessionTable).unwrap();
    let pairs: Vec<(u32, &str)> = assignments
        .iter()
        .copied()
        .zip(records.iter().map(|r| r.content.as_str()))
        .collect();
    let key = Regex::new(r"blk_\d+").unwrap();
    let dataset = grouper::group_by_session(&pairs, &key, &labels, set.len());
    assert_eq!(dataset.groups.len(), fix.n_blocks);
    assert_eq!(dataset.warnings.keyless_dropped, 0);
    assert_eq!(
        dataset.groups.iter().filter(|g| g.label == Label::Anomalous).count(),
        fix.n_anomalous
    );

    MinedHdfs {
        set,
        view: DatasetView::from_dataset(dataset),
        contents: records.into_iter().map(|r| r.content).collect(),
    }
}

fn tree_f1(view: &DatasetView, set: &TemplateSet) -> f64 {
    let (train_view, eval_view) = view.split(0.8).unwrap();
    let model = detectors::train(
        &ModelKind::Tree,
        &FeatureMatrix::from_view(&train_view),
        &train_view.labels(),
        42,
        set,
    )
    .unwrap();
    let pred = model.predict_view(&eval_view, set).unwrap();
    detectors::evaluate(&pred, &eval_view.labels()).unwrap().f1
}

#[test]
fn hdfs_corpus_end_to_end_reduction() {
    // 150 blocks means 19 anomalous, and gcd(19, 150) = 1: no random presence
    // pattern can form an exactly independent contingency table, so only the
    // three per-block constants can hit the measure-zero MI floor.
    let mined = build_hdfs(150, 42);
    let (set, view) = (&mined.set, &mined.view);

    // The fixture has exactly eight print sites; digit-bearing parameters
    // (block ids, sizes, addresses) must all have been masked away.
    assert_eq!(set.len(), 8);

    let alloc = event_with(set, "allocateBlock");
    let receiving = event_with(set, "Receiving");
    let received = event_with(set, "Received block");
    let terminating = event_with(set, "terminating");
    let verification = event_with(set, "Verification");
    let served = event_with(set, "Served");
    let exception = event_with(set, "exception");
    let corruption = event_with(set, "Unexpected");

    // Pair members first appear in the same block, in emission order.
    assert!(terminating < verification);
    assert!(exception < corruption);

    let baseline_f1 = tree_f1(view, set);
    assert_eq!(baseline_f1, 1.0, "planted error markers make the tree exact");

    let outcome = profiler::profile(view, set, &ProfileConfig::default()).unwrap();
    let reduced = &outcome.reduced;
    reduced.validate().unwrap();

    // The three per-block constants carry zero information about the label.
    for e in [alloc, receiving, received] {
        assert_eq!(reduced.removed.get(&e), Some(&RemovalReason::Anti), "event {e}");
    }
    // The responder pair shares one exact presence pattern and the serve
    // line is nearby background chatter (its co-occurrence profile differs
    // from the pair's far less than the error markers do), so the density
    // scan folds all three into one cluster represented by the highest-MI
    // member: terminating. The marker pair collapses onto exception.
    assert_eq!(
        reduced.removed.get(&verification),
        Some(&RemovalReason::Duplicative { representative: terminating })
    );
    assert_eq!(
        reduced.removed.get(&served),
        Some(&RemovalReason::Duplicative { representative: terminating })
    );
    assert_eq!(
        reduced.removed.get(&corruption),
        Some(&RemovalReason::Duplicative { representative: exception })
    );
    assert_eq!(reduced.retained, vec![terminating, exception]);
    // Every event clears the document-frequency cutoff (rarest is 12.5%).
    assert!(!reduced.removed.values().any(|r| *r == RemovalReason::Sporadic));

    // Constants dominate the line volume, so reduction is heavy.
    assert!(
        reduced.line_reduction_pct > 0.5,
        "got {}",
        reduced.line_reduction_pct
    );

    // Replaying the same corpus through the stream filter reproduces the
    // predicted reduction exactly, and every line matches a mined template.
    let filter = StreamFilter::new(reduced.clone()).unwrap();
    let input = mined.contents.join("\n") + "\n";
    let mut output = Vec::new();
    let stats = filter.filter_stream(input.as_bytes(), &mut output).unwrap();
    assert_eq!(stats.lines_in, mined.contents.len() as u64);
    assert_eq!(stats.lines_unmatched, 0);
    assert_eq!(stats.lines_in, stats.lines_out + stats.lines_dropped);
    assert_eq!(stats.lines_reduction_pct, reduced.line_reduction_pct);

    // Retraining on the filtered dataset keeps detection quality.
    let filtered = view.remove_events(reduced.removed.keys().copied());
    let post_f1 = tree_f1(&filtered, set);
    assert!(post_f1 >= 0.98 * baseline_f1, "post {post_f1} vs baseline {baseline_f1}");
}

#[test]
fn bgl_fixed_windows_single_event_detector() {
    let lines = synth::bgl_fixture(240, 7);
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("super.log");
    fs::write(&log_path, lines.join("\n") + "\n").unwrap();

    let records = ingest::read_records(&log_path, &DatasetFormat::Bgl).unwrap();
    assert_eq!(records.len(), 240);
    // Alert flag is the first header column, not part of the content.
    assert!(records.iter().all(|r| !r.content.contains("KERNDTLB")));

    let (set, assignments) =
        template_miner::mine(records.iter().map(|r| r.content.as_str()), MinerConfig::default());
    assert_eq!(set.len(), 5, "four routine bodies plus the alert body");
    let alert = event_with(&set, "TLB error interrupt");

    // Per-line labels come from the alert column of the same file.
    let labels = ingest::read_labels(&log_path, LabelKind::PerLinePrefix).unwrap();
    let LabelSource::PerLine(line_labels) = labels else {
        panic!("expected per-line labels");
    };
    assert_eq!(line_labels.iter().filter(|l| **l == Label::Anomalous).count(), 20);

    let dataset = grouper::group_fixed(&assignments, &line_labels, 8, set.len()).unwrap();
    assert_eq!(dataset.groups.len(), 30);
    let view = DatasetView::from_dataset(dataset);
    let anomalous = view.labels().iter().filter(|l| **l == Label::Anomalous).count();
    assert!(anomalous > 0 && anomalous < 30, "both classes present, got {anomalous}");

    // A window is anomalous exactly when it contains an alert line, so the
    // presence heuristic on the alert template is a perfect detector.
    let kind = ModelKind::SingleEvent(set.event_id(alert).to_string());
    let model = detectors::train(&kind, &FeatureMatrix::from_view(&view), &view.labels(), 0, &set).unwrap();
    let pred = model.predict_view(&view, &set).unwrap();
    let m = detectors::evaluate(&pred, &view.labels()).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
}

#[test]
fn retry_study_survives_only_the_last_marker() {
    let mined = build_hdfs(120, 11);
    let (set, view) = (&mined.set, &mined.view);
    let exception = event_with(set, "exception");
    let corruption = event_with(set, "Unexpected");

    let config = StudyConfig { alpha: 0.0, ..StudyConfig::default() };
    let trace = study::retry_reduce(view, set, &ModelKind::Tree, &config).unwrap();

    assert!(trace.sound);
    assert_eq!(trace.baseline.f1, 1.0);
    assert_eq!(trace.final_metrics.f1, 1.0);

    // The two error markers are mutual backups. Candidates are tried in
    // descending line-count order, so the sparser marker pair comes last;
    // removing the first marker keeps F1 at 1.0 (accepted), removing the
    // second would leave nothing predictive (reinstated). Everything else is
    // redundant alongside a surviving marker.
    assert_eq!(trace.surviving_events, vec![corruption]);
    assert!(trace.f1_max_history.iter().all(|&f| f == 1.0));

    let categories = study::categorize_events(&trace, config.epsilon);
    assert_eq!(categories.len(), set.len());
    for c in &categories {
        let expect = if c.event_id == corruption { CategoryKind::Key } else { CategoryKind::Duplicative };
        assert_eq!(c.category, expect, "event {} got {:?}", c.event_id, c.category);
    }
    let _ = exception; // the non-surviving marker is covered by the loop above
}

#[test]
fn reduced_set_round_trips_through_disk_into_the_filter() {
    let mined = build_hdfs(96, 3);
    let outcome = profiler::profile(&mined.view, &mined.set, &ProfileConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reduced.les");
    outcome.reduced.save(&path).unwrap();

    let filter = StreamFilter::from_file(&path).unwrap();
    let loaded = filter.current_set();
    assert_eq!(loaded.retained, outcome.reduced.retained);
    assert_eq!(loaded.removed, outcome.reduced.removed);
    assert_eq!(loaded.line_reduction_pct, outcome.reduced.line_reduction_pct);

    // The loaded filter classifies live lines with the loaded templates.
    let input = mined.contents.join("\n") + "\n";
    let mut output = Vec::new();
    let stats = filter.filter_stream(input.as_bytes(), &mut output).unwrap();
    assert_eq!(stats.lines_unmatched, 0);
    assert_eq!(stats.lines_reduction_pct, outcome.reduced.line_reduction_pct);
}
