//! Implementations of the nine subcommands. Each one reads and writes
//! versioned artifact files; nothing is kept between invocations, so any
//! pipeline stage can be rerun or inspected in isolation.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use logcleaner_core::artifact;
use logcleaner_core::detectors::{self, evaluate, time_inference, FeatureMatrix, Model};
use logcleaner_core::grouper::{group_by_session, group_fixed, DatasetView, LabeledDataset};
use logcleaner_core::ingest::{read_labels, read_records_limited, LabelKind, LabelSource};
use logcleaner_core::profiler::{self, ablation_rows, ReducedEventSet, RemovalReason};
use logcleaner_core::stream_filter::StreamFilter;
use logcleaner_core::study::{
    cluster_reduce, retry_reduce, CategoryReport, ReductionTrace, StudyConfig,
};
use logcleaner_core::template_miner::{self, TemplateSet};

use crate::artifacts::{EventAssignments, MetricsArtifact, TimingArtifact};
use crate::config::{RunConfig, WindowPolicy};
use crate::error::{CliError, Result};

/// Alpha values visited by `study --alpha-sweep`.
pub const ALPHA_SWEEP: [f64; 4] = [0.0, 0.01, 0.02, 0.05];

fn resolve_log(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.log
        .clone()
        .ok_or_else(|| CliError::usage("no log file given (use --log or the `log` config key)"))
}

fn read_log(cfg: &RunConfig, log: &Path) -> Result<Vec<logcleaner_core::LogRecord>> {
    let format = cfg.dataset_format()?;
    let limit = cfg.line_limit.or_else(|| format.default_line_limit());
    Ok(read_records_limited(log, &format, limit)?)
}

fn load_templates_and_groups(templates: &Path, groups: &Path) -> Result<(TemplateSet, DatasetView)> {
    let set = TemplateSet::load(templates)?;
    let dataset = LabeledDataset::load(groups, &set)?;
    Ok((set, DatasetView::from_dataset(dataset)))
}

/// Applies a reduced set's removals to a view, after checking that both
/// sides talk about the same event universe.
fn apply_reduced(view: DatasetView, set: &TemplateSet, reduced: &Path) -> Result<DatasetView> {
    let reduced = ReducedEventSet::load(reduced)?;
    if reduced.num_events() != set.len() {
        return Err(CliError::data(format!(
            "reduced set covers {} events but the template set has {}",
            reduced.num_events(),
            set.len()
        )));
    }
    Ok(view.remove_events(reduced.removed.keys().copied()))
}

fn pct(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

// --- mine -----------------------------------------------------------------

pub fn mine(cfg: &RunConfig, out_templates: &Path, out_events: &Path) -> Result<()> {
    let log = resolve_log(cfg)?;
    let records = read_log(cfg, &log)?;
    if records.is_empty() {
        return Err(CliError::data(format!("{}: no log lines to mine", log.display())));
    }
    let (set, events) = template_miner::mine(
        records.iter().map(|r| r.content.as_str()),
        cfg.miner_config(),
    );
    set.save(out_templates)?;
    EventAssignments { events }.save(&set, out_events)?;
    println!(
        "mined {} lines into {} templates ({} -> {}, {})",
        records.len(),
        set.len(),
        log.display(),
        out_templates.display(),
        out_events.display()
    );
    Ok(())
}

// --- group ----------------------------------------------------------------

pub fn group(
    cfg: &RunConfig,
    templates: &Path,
    events: &Path,
    out: &Path,
) -> Result<()> {
    let set = TemplateSet::load(templates)?;
    let assignments = EventAssignments::load(events, &set)?;
    let log = resolve_log(cfg)?;
    let records = read_log(cfg, &log)?;
    if records.len() != assignments.events.len() {
        return Err(CliError::data(format!(
            "{} has {} assignments but {} has {} lines; re-run mine",
            events.display(),
            assignments.events.len(),
            log.display(),
            records.len()
        )));
    }

    let labels = match cfg.label_kind.as_str() {
        "per-line" => read_labels(&log, LabelKind::PerLinePrefix)?,
        "per-session" => {
            let labels_path = cfg.labels.clone().ok_or_else(|| {
                CliError::usage("per-session labels need --labels or the `labels` config key")
            })?;
            read_labels(&labels_path, LabelKind::PerSessionTable)?
        }
        other => {
            return Err(CliError::usage(format!(
                "label_kind must be per-line or per-session, got `{other}`"
            )))
        }
    };

    let dataset = match cfg.window_policy()? {
        WindowPolicy::Session => {
            let regex = regex::Regex::new(&cfg.session_regex)
                .map_err(|e| CliError::usage(format!("session_regex: {e}")))?;
            let rows: Vec<(u32, &str)> = assignments
                .events
                .iter()
                .zip(&records)
                .map(|(&e, r)| (e, r.content.as_str()))
                .collect();
            group_by_session(&rows, &regex, &labels, set.len())
        }
        WindowPolicy::Fixed(window) => {
            let LabelSource::PerLine(line_labels) = &labels else {
                return Err(CliError::usage(
                    "fixed windows need per-line labels (label_kind = per-line)",
                ));
            };
            group_fixed(&assignments.events, line_labels, window, set.len())?
        }
    };

    let w = dataset.warnings;
    if w.keyless_dropped > 0 {
        eprintln!("warning: {} lines had no session key and were dropped", w.keyless_dropped);
    }
    if w.unlabeled_sessions > 0 {
        eprintln!(
            "warning: {} sessions missing from the label table default to normal",
            w.unlabeled_sessions
        );
    }
    if w.unlabeled_lines > 0 {
        eprintln!("warning: {} lines beyond the label list default to normal", w.unlabeled_lines);
    }
    dataset.save(&set, out)?;
    println!(
        "grouped {} lines into {} groups ({} anomalous) -> {}",
        dataset.total_lines(),
        dataset.len(),
        dataset.anomalous_count(),
        out.display()
    );
    Ok(())
}

// --- train ----------------------------------------------------------------

pub fn train(
    cfg: &RunConfig,
    templates: &Path,
    groups: &Path,
    reduced: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let (set, mut view) = load_templates_and_groups(templates, groups)?;
    if let Some(r) = reduced {
        view = apply_reduced(view, &set, r)?;
    }
    let kind = cfg.model_kind()?;
    let (train_view, _) = view.split(cfg.split_ratio)?;
    let matrix = FeatureMatrix::from_view(&train_view);
    let model = detectors::train(&kind, &matrix, &train_view.labels(), cfg.seed, &set)?;
    model.save(&set, out)?;
    println!(
        "trained {} on {} groups x {} events -> {}",
        model.kind_name(),
        matrix.n_rows(),
        matrix.n_cols(),
        out.display()
    );
    Ok(())
}

// --- eval -----------------------------------------------------------------

pub fn eval(
    cfg: &RunConfig,
    templates: &Path,
    groups: &Path,
    model: &Path,
    reduced: Option<&Path>,
    out: &Path,
    timing: bool,
) -> Result<()> {
    let (set, mut view) = load_templates_and_groups(templates, groups)?;
    if let Some(r) = reduced {
        view = apply_reduced(view, &set, r)?;
    }
    let model = Model::load(model, &set)?;
    let (_, eval_view) = view.split(cfg.split_ratio)?;
    let predicted = model.predict_view(&eval_view, &set)?;
    let metrics = evaluate(&predicted, &eval_view.labels())?;
    let report = MetricsArtifact {
        model: model.kind_name().to_string(),
        groups: eval_view.len(),
        metrics,
    };
    report.save(out)?;
    println!(
        "evaluated {} on {} groups: precision {:.3} recall {:.3} f1 {:.3} -> {}",
        report.model,
        report.groups,
        metrics.precision,
        metrics.recall,
        metrics.f1,
        out.display()
    );
    if timing {
        let matrix = FeatureMatrix::from_view(&eval_view);
        let reps = 5;
        let (_, best) = time_inference(&model, &matrix, reps)?;
        let timing_path = PathBuf::from(format!("{}.timing", out.display()));
        TimingArtifact {
            model: report.model.clone(),
            nanos: best.as_nanos(),
            rows: matrix.n_rows(),
            reps,
        }
        .save(&timing_path)?;
        println!(
            "inference pass over {} rows: {} -> {}",
            matrix.n_rows(),
            fmt_nanos(best.as_nanos() as f64),
            timing_path.display()
        );
    }
    Ok(())
}

// --- study ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMethod {
    Retry,
    Cluster,
}

/// Inserts a suffix before the file extension: `trace.tsv` with alpha 0.01
/// becomes `trace.alpha0.01.tsv`.
fn alpha_suffixed(path: &Path, alpha: f64) -> PathBuf {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    let name = match path.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.alpha{}.{ext}", artifact::fmt_f64(alpha)),
        None => format!("{stem}.alpha{}", artifact::fmt_f64(alpha)),
    };
    path.with_file_name(name)
}

pub fn study(
    cfg: &RunConfig,
    method: StudyMethod,
    templates: &Path,
    groups: &Path,
    out_trace: &Path,
    out_categories: Option<&Path>,
    alpha_sweep: bool,
) -> Result<()> {
    let (set, view) = load_templates_and_groups(templates, groups)?;
    let kind = cfg.model_kind()?;
    let alphas: Vec<f64> = if alpha_sweep {
        ALPHA_SWEEP.to_vec()
    } else {
        vec![cfg.alpha]
    };
    for &alpha in &alphas {
        let study_config = StudyConfig {
            alpha,
            ..cfg.study_config()
        };
        let trace = match method {
            StudyMethod::Retry => retry_reduce(&view, &set, &kind, &study_config)?,
            StudyMethod::Cluster => cluster_reduce(&view, &set, &kind, &study_config)?.trace,
        };
        let trace_path = if alpha_sweep {
            alpha_suffixed(out_trace, alpha)
        } else {
            out_trace.to_path_buf()
        };
        trace.save(&set, &trace_path)?;
        if let Some(categories) = out_categories {
            let categories_path = if alpha_sweep {
                alpha_suffixed(categories, alpha)
            } else {
                categories.to_path_buf()
            };
            CategoryReport::from_trace(&trace, study_config.epsilon)
                .save(&set, &categories_path)?;
        }
        summarize_trace(&trace, &view, set.len(), &trace_path);
    }
    Ok(())
}

fn summarize_trace(trace: &ReductionTrace, view: &DatasetView, n_events: usize, path: &Path) {
    let removed = trace.all_removed();
    let removed_lines: usize = removed.iter().map(|&e| view.event_line_count(e)).sum();
    let total_lines = view.total_lines().max(1);
    println!(
        "alpha {}: f1 {:.3} -> {:.3}, events removed {}/{} ({}), lines removed {}, sound {} -> {}",
        artifact::fmt_f64(trace.alpha),
        trace.baseline.f1,
        trace.final_metrics.f1,
        removed.len(),
        n_events,
        pct(removed.len() as f64 / n_events.max(1) as f64),
        pct(removed_lines as f64 / total_lines as f64),
        trace.sound,
        path.display()
    );
}

// --- profile --------------------------------------------------------------

pub fn profile(cfg: &RunConfig, templates: &Path, groups: &Path, out: &Path) -> Result<()> {
    let (set, view) = load_templates_and_groups(templates, groups)?;
    let outcome = profiler::profile(&view, &set, &cfg.profile_config())?;
    let reduced = &outcome.reduced;
    reduced.save(out)?;
    let count = |r: fn(&RemovalReason) -> bool| reduced.removed.values().filter(|v| r(v)).count();
    println!(
        "profiled {} events: retained {}, sporadic {}, anti {}, duplicative {}",
        reduced.num_events(),
        reduced.retained.len(),
        count(|r| matches!(r, RemovalReason::Sporadic)),
        count(|r| matches!(r, RemovalReason::Anti)),
        count(|r| matches!(r, RemovalReason::Duplicative { .. })),
    );
    println!(
        "reduction: {} of events, {} of profiled lines -> {} (hash {})",
        pct(reduced.event_reduction_pct),
        pct(reduced.line_reduction_pct),
        out.display(),
        &reduced.content_hash()[..12]
    );
    Ok(())
}

// --- filter ---------------------------------------------------------------

fn signal_path(reduced: &Path, kind: &str) -> PathBuf {
    PathBuf::from(format!("{}.{kind}", reduced.display()))
}

fn dump_stats(filter: &StreamFilter, stats_out: Option<&Path>) -> Result<()> {
    let block = filter.stats().to_text_block();
    match stats_out {
        Some(path) => fs::write(path, block)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display()))),
        None => {
            eprint!("{block}");
            Ok(())
        }
    }
}

/// Filters a raw log stream line by line against a reduced event set.
///
/// Each line is parsed with the configured dataset format and the content
/// part is matched against the set's templates; dropped lines vanish,
/// everything else is forwarded byte-identically. Between lines the filter
/// watches two signal files next to the reduced artifact: `<set>.reload`
/// re-reads the artifact (keeping the old set if the new one is invalid)
/// and `<set>.stats` dumps the counters immediately. The counters are
/// always dumped when the stream ends.
pub fn filter(
    cfg: &RunConfig,
    reduced: &Path,
    input: Option<&Path>,
    output: Option<&Path>,
    stats_out: Option<&Path>,
) -> Result<()> {
    let format = cfg.dataset_format()?;
    let stream_filter = StreamFilter::from_file(reduced)?;
    let reload_signal = signal_path(reduced, "reload");
    let stats_signal = signal_path(reduced, "stats");

    let stdin = std::io::stdin();
    let mut reader: Box<dyn BufRead> = match input {
        Some(path) => Box::new(BufReader::new(fs::File::open(path).map_err(|e| {
            CliError::data(format!("cannot open {}: {e}", path.display()))
        })?)),
        None => Box::new(stdin.lock()),
    };
    let stdout = std::io::stdout();
    // Pipes need per-line flushing so a downstream reader sees each verdict
    // promptly; file output can buffer.
    let (mut writer, line_buffered): (Box<dyn Write>, bool) = match output {
        Some(path) => (
            Box::new(BufWriter::new(fs::File::create(path).map_err(|e| {
                CliError::data(format!("cannot create {}: {e}", path.display()))
            })?)),
            false,
        ),
        None => (Box::new(stdout.lock()), true),
    };

    let mut raw = Vec::new();
    let mut line_index = 0usize;
    loop {
        raw.clear();
        let n = reader
            .read_until(b'\n', &mut raw)
            .map_err(|e| CliError::data(format!("stream read failed: {e}")))?;
        if n == 0 {
            break;
        }
        if reload_signal.exists() {
            let _ = fs::remove_file(&reload_signal);
            match stream_filter.reload(reduced) {
                Ok(()) => eprintln!(
                    "reloaded event set (hash {})",
                    &stream_filter.current_set().content_hash()[..12]
                ),
                Err(e) => eprintln!("reload failed, keeping previous set: {e}"),
            }
        }
        if stats_signal.exists() {
            let _ = fs::remove_file(&stats_signal);
            dump_stats(&stream_filter, stats_out)?;
        }
        let text = String::from_utf8_lossy(&raw);
        let content_line = text.trim_end_matches('\n').trim_end_matches('\r');
        let record = format.parse_line(line_index, content_line);
        line_index += 1;
        if stream_filter.decide(&record.content).is_emit() {
            writer
                .write_all(&raw)
                .map_err(|e| CliError::data(format!("stream write failed: {e}")))?;
            if line_buffered {
                writer
                    .flush()
                    .map_err(|e| CliError::data(format!("stream write failed: {e}")))?;
            }
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::data(format!("stream write failed: {e}")))?;
    dump_stats(&stream_filter, stats_out)
}

// --- reload ---------------------------------------------------------------

/// Validates a candidate reduced set and installs it over the live
/// artifact atomically (write-to-temp plus rename), then leaves a
/// `<live>.reload` signal file for a running `filter` to pick up. An
/// invalid candidate changes nothing.
pub fn reload(live: &Path, candidate: &Path) -> Result<()> {
    let set = ReducedEventSet::load(candidate)?;
    set.validate()?;
    let content = artifact::read_to_string(candidate)?;

    let file_name = live
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::usage(format!("{} is not a file path", live.display())))?;
    let tmp = live.with_file_name(format!("{file_name}.install"));
    fs::write(&tmp, &content)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, live).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::data(format!("cannot install over {}: {e}", live.display()))
    })?;
    fs::write(signal_path(live, "reload"), b"")
        .map_err(|e| CliError::data(format!("cannot write reload signal: {e}")))?;
    println!(
        "installed {} over {} (hash {})",
        candidate.display(),
        live.display(),
        &set.content_hash()[..12]
    );
    Ok(())
}

// --- report ---------------------------------------------------------------

#[derive(Debug, Default)]
pub struct ReportInputs {
    pub reduced: Option<PathBuf>,
    pub before: Option<PathBuf>,
    pub after: Option<PathBuf>,
    pub timing_before: Option<PathBuf>,
    pub timing_after: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub categories: Option<PathBuf>,
    pub traces: Vec<PathBuf>,
}

impl ReportInputs {
    fn all_paths(&self) -> Vec<&Path> {
        let singles = [
            &self.reduced,
            &self.before,
            &self.after,
            &self.timing_before,
            &self.timing_after,
            &self.templates,
            &self.groups,
            &self.categories,
        ];
        singles
            .into_iter()
            .filter_map(|p| p.as_deref())
            .chain(self.traces.iter().map(PathBuf::as_path))
            .collect()
    }
}

fn fmt_nanos(nanos: f64) -> String {
    if nanos < 1_000.0 {
        format!("{nanos:.0}ns")
    } else if nanos < 1_000_000.0 {
        format!("{:.1}us", nanos / 1_000.0)
    } else if nanos < 1_000_000_000.0 {
        format!("{:.1}ms", nanos / 1_000_000.0)
    } else {
        format!("{:.2}s", nanos / 1_000_000_000.0)
    }
}

/// Renders a human-readable summary from previously written artifacts.
/// Pure: it trains nothing, draws no randomness, and writes no files, so
/// the same artifacts always produce the same report.
pub fn report(inputs: &ReportInputs) -> Result<()> {
    let paths = inputs.all_paths();
    if paths.is_empty() {
        return Err(CliError::usage(
            "report needs at least one artifact (--reduced, --before/--after, \
             --timing-before/--timing-after, --trace, --categories, or \
             --templates with --groups)",
        ));
    }
    // Refuse to mix artifact versions: every input must carry a v1 header.
    for path in &paths {
        let content = artifact::read_to_string(path)?;
        match artifact::peek_kind_version(&content) {
            Some((_, v)) if v == artifact::VERSION => {}
            Some((kind, v)) => {
                return Err(CliError::data(format!(
                    "{}: {kind} artifact is v{v}, this tool reads v{}; \
                     refusing to mix versions",
                    path.display(),
                    artifact::VERSION
                )))
            }
            None => {
                return Err(CliError::data(format!(
                    "{}: not an artifact (missing #logcleaner header)",
                    path.display()
                )))
            }
        }
    }
    if !inputs.traces.is_empty() && inputs.templates.is_none() {
        return Err(CliError::usage("--trace needs --templates to resolve event ids"));
    }
    if inputs.categories.is_some() && inputs.templates.is_none() {
        return Err(CliError::usage("--categories needs --templates to resolve event ids"));
    }
    if inputs.groups.is_some() && inputs.templates.is_none() {
        return Err(CliError::usage("--groups needs --templates to resolve event ids"));
    }

    let templates = inputs
        .templates
        .as_deref()
        .map(TemplateSet::load)
        .transpose()?;

    if let Some(path) = &inputs.reduced {
        let reduced = ReducedEventSet::load(path)?;
        let count = |pred: fn(&RemovalReason) -> bool| {
            reduced.removed.values().filter(|r| pred(r)).count()
        };
        println!("== Reduction ==");
        println!(
            "events: {} total, {} retained, {} removed ({})",
            reduced.num_events(),
            reduced.retained.len(),
            reduced.removed.len(),
            pct(reduced.event_reduction_pct)
        );
        println!(
            "  sporadic {}, anti {}, duplicative {}",
            count(|r| matches!(r, RemovalReason::Sporadic)),
            count(|r| matches!(r, RemovalReason::Anti)),
            count(|r| matches!(r, RemovalReason::Duplicative { .. }))
        );
        println!("lines: {} of the profiled corpus removed", pct(reduced.line_reduction_pct));
        println!("hash: {}", reduced.content_hash());
        let retained: Vec<&str> = reduced
            .retained
            .iter()
            .map(|&e| reduced.templates.event_id(e))
            .collect();
        println!("retained: {}", retained.join(" "));
        println!();

        if let (Some(set), Some(groups_path)) = (&templates, &inputs.groups) {
            if reduced.num_events() != set.len() {
                return Err(CliError::data(format!(
                    "reduced set covers {} events but the template set has {}",
                    reduced.num_events(),
                    set.len()
                )));
            }
            let dataset = LabeledDataset::load(groups_path, set)?;
            let view = DatasetView::from_dataset(dataset);
            println!("== Stage ablation ==");
            println!("{:<8} {:>14} {:>14}", "stage", "events_removed", "lines_removed");
            for row in ablation_rows(&reduced, &view) {
                println!(
                    "{:<8} {:>14} {:>14}",
                    row.stage,
                    pct(row.events_removed_pct),
                    pct(row.lines_removed_pct)
                );
            }
            println!();
        }
    }

    let before = inputs.before.as_deref().map(MetricsArtifact::load).transpose()?;
    let after = inputs.after.as_deref().map(MetricsArtifact::load).transpose()?;
    if before.is_some() || after.is_some() {
        println!("== Detection ==");
        println!(
            "{:<8} {:<10} {:>7} {:>10} {:>8} {:>8}",
            "slice", "model", "groups", "precision", "recall", "f1"
        );
        for (name, m) in [("before", &before), ("after", &after)] {
            if let Some(m) = m {
                println!(
                    "{:<8} {:<10} {:>7} {:>10.3} {:>8.3} {:>8.3}",
                    name, m.model, m.groups, m.metrics.precision, m.metrics.recall, m.metrics.f1
                );
            }
        }
        if let (Some(b), Some(a)) = (&before, &after) {
            println!("f1 change: {:+.3}", a.metrics.f1 - b.metrics.f1);
        }
        println!();
    }

    let timing_before = inputs
        .timing_before
        .as_deref()
        .map(TimingArtifact::load)
        .transpose()?;
    let timing_after = inputs
        .timing_after
        .as_deref()
        .map(TimingArtifact::load)
        .transpose()?;
    if timing_before.is_some() || timing_after.is_some() {
        println!("== Inference time ==");
        println!(
            "{:<8} {:<10} {:>6} {:>10} {:>10}",
            "slice", "model", "rows", "total", "per_row"
        );
        for (name, t) in [("before", &timing_before), ("after", &timing_after)] {
            if let Some(t) = t {
                let per_row = t.nanos as f64 / t.rows.max(1) as f64;
                println!(
                    "{:<8} {:<10} {:>6} {:>10} {:>10}",
                    name,
                    t.model,
                    t.rows,
                    fmt_nanos(t.nanos as f64),
                    fmt_nanos(per_row)
                );
            }
        }
        if let (Some(b), Some(a)) = (&timing_before, &timing_after) {
            if a.nanos > 0 {
                println!("speedup: {:.2}x", b.nanos as f64 / a.nanos as f64);
            }
        }
        println!();
    }

    if !inputs.traces.is_empty() {
        let set = templates.as_ref().expect("checked above");
        println!("== Reduction studies ==");
        println!(
            "{:<28} {:<10} {:>6} {:>11} {:>8} {:>8} {:>6}",
            "trace", "model", "alpha", "baseline_f1", "final_f1", "removed", "sound"
        );
        for path in &inputs.traces {
            let trace = ReductionTrace::load(path, set)?;
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("trace");
            println!(
                "{:<28} {:<10} {:>6} {:>11.3} {:>8.3} {:>8} {:>6}",
                name,
                trace.model,
                artifact::fmt_f64(trace.alpha),
                trace.baseline.f1,
                trace.final_metrics.f1,
                trace.all_removed().len(),
                trace.sound
            );
        }
        println!();
    }

    if let Some(path) = &inputs.categories {
        let set = templates.as_ref().expect("checked above");
        let report = CategoryReport::load(path, set)?;
        let count = |kind: &str| {
            report
                .categories
                .iter()
                .filter(|c| c.category.as_str() == kind)
                .count()
        };
        println!("== Event categories (model {}, epsilon {}) ==", report.model, report.epsilon);
        println!(
            "key-event {}, anti-event {}, duplicative-event {}",
            count("key-event"),
            count("anti-event"),
            count("duplicative-event")
        );
        for c in &report.categories {
            println!(
                "  {:<12} {:<18} {:+.4}",
                set.event_id(c.event_id),
                c.category.as_str(),
                c.evidence_delta
            );
        }
        println!();
    }
    Ok(())
}

// --- config ---------------------------------------------------------------

/// Writes the fully resolved configuration (defaults, file, environment,
/// and flags already merged) so the run can be replayed from one file.
pub fn save_config(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.save(out)?;
    println!("wrote resolved configuration -> {}", out.display());
    Ok(())
}
