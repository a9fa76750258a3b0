//! End-to-end tests of the `logcleaner` binary: every subcommand, the
//! exit-code contract, artifact determinism, and the live-stream hot
//! reload protocol.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use logcleaner_core::profiler::{ReducedEventSet, RemovalReason};
use logcleaner_core::study::ReductionTrace;
use logcleaner_core::template_miner::TemplateSet;

fn lc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logcleaner"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("spawn logcleaner");
    assert!(
        output.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn run_code(cmd: &mut Command, expected: i32) -> Output {
    let output = cmd.output().expect("spawn logcleaner");
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Runs `mine` and `group` on the bundled HDFS fixture, returning the
/// workspace directory with `templates.tsv`, `events.tsv`, `groups.tsv`.
fn mine_and_group() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        lc().args(["mine", "--format", "hdfs"])
            .arg("--log")
            .arg(fixture("hdfs_1k.log"))
            .arg("--out-templates")
            .arg(dir.path().join("templates.tsv"))
            .arg("--out-events")
            .arg(dir.path().join("events.tsv")),
    );
    run_ok(
        lc().args(["group", "--format", "hdfs"])
            .arg("--log")
            .arg(fixture("hdfs_1k.log"))
            .arg("--labels")
            .arg(fixture("hdfs_labels.csv"))
            .arg("--templates")
            .arg(dir.path().join("templates.tsv"))
            .arg("--events")
            .arg(dir.path().join("events.tsv"))
            .arg("--out")
            .arg(dir.path().join("groups.tsv")),
    );
    dir
}

fn read_metric(path: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no `{key}` line in {}", path.display()))
        .trim()
        .parse()
        .unwrap()
}

/// Three letter-only events so that template matching can resolve raw
/// content: `evb` is removed as an anti-event, `eva` and `evc` stay.
fn drop_evb_set() -> ReducedEventSet {
    let templates =
        TemplateSet::from_event_ids(["eva".to_string(), "evb".to_string(), "evc".to_string()]);
    ReducedEventSet {
        templates,
        retained: vec![0, 2],
        removed: BTreeMap::from([(1, RemovalReason::Anti)]),
        outliers: vec![],
        frequency_cutoff: 0.1,
        theta_anti: Some(0.0),
        theta_dup: Some(2),
        xi: 0.05,
        miller_madow: false,
        whitelist: vec![],
        event_reduction_pct: 1.0 / 3.0,
        line_reduction_pct: 0.25,
    }
}

fn retain_all_set() -> ReducedEventSet {
    let mut set = drop_evb_set();
    set.retained = vec![0, 1, 2];
    set.removed = BTreeMap::new();
    set.event_reduction_pct = 0.0;
    set.line_reduction_pct = 0.0;
    set
}

#[test]
fn full_pipeline_reduces_the_fixture_without_losing_detection() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);

    run_ok(
        lc().arg("train")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--out")
            .arg(p("model.tsv")),
    );
    run_ok(
        lc().arg("eval")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--model-file")
            .arg(p("model.tsv"))
            .arg("--out")
            .arg(p("before.tsv"))
            .arg("--timing"),
    );
    run_ok(
        lc().arg("profile")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--out")
            .arg(p("reduced.les")),
    );
    run_ok(
        lc().arg("train")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--reduced")
            .arg(p("reduced.les"))
            .arg("--out")
            .arg(p("model_reduced.tsv")),
    );
    run_ok(
        lc().arg("eval")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--model-file")
            .arg(p("model_reduced.tsv"))
            .arg("--reduced")
            .arg(p("reduced.les"))
            .arg("--out")
            .arg(p("after.tsv"))
            .arg("--timing"),
    );

    let before_f1 = read_metric(&p("before.tsv"), "f1");
    let after_f1 = read_metric(&p("after.tsv"), "f1");
    assert!(before_f1 >= 0.9, "baseline f1 {before_f1}");
    assert!(
        after_f1 >= 0.98 * before_f1,
        "reduction degraded f1: {before_f1} -> {after_f1}"
    );
    let line_reduction = {
        let text = fs::read_to_string(p("reduced.les")).unwrap();
        text.lines()
            .find_map(|l| l.strip_prefix("#meta line_reduction_pct "))
            .unwrap()
            .parse::<f64>()
            .unwrap()
    };
    assert!(line_reduction >= 0.3, "only {line_reduction} of lines removed");

    let report = run_ok(
        lc().arg("report")
            .arg("--reduced")
            .arg(p("reduced.les"))
            .arg("--before")
            .arg(p("before.tsv"))
            .arg("--after")
            .arg(p("after.tsv"))
            .arg("--timing-before")
            .arg(p("before.tsv.timing"))
            .arg("--timing-after")
            .arg(p("after.tsv.timing"))
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv")),
    );
    let text = String::from_utf8_lossy(&report.stdout).to_string();
    for section in [
        "== Reduction ==",
        "== Stage ablation ==",
        "== Detection ==",
        "== Inference time ==",
        "+tfidf",
        "f1 change:",
    ] {
        assert!(text.contains(section), "report missing `{section}`:\n{text}");
    }
}

#[test]
fn repeated_runs_write_byte_identical_artifacts() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);

    // Same corpus mined again: identical templates and assignments.
    run_ok(
        lc().args(["mine", "--format", "hdfs"])
            .arg("--log")
            .arg(fixture("hdfs_1k.log"))
            .arg("--out-templates")
            .arg(p("templates2.tsv"))
            .arg("--out-events")
            .arg(p("events2.tsv")),
    );
    assert_eq!(
        fs::read(p("templates.tsv")).unwrap(),
        fs::read(p("templates2.tsv")).unwrap()
    );
    assert_eq!(fs::read(p("events.tsv")).unwrap(), fs::read(p("events2.tsv")).unwrap());

    run_ok(
        lc().arg("train")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--out")
            .arg(p("model.tsv")),
    );
    for out in ["m1.tsv", "m2.tsv"] {
        run_ok(
            lc().arg("eval")
                .arg("--templates")
                .arg(p("templates.tsv"))
                .arg("--groups")
                .arg(p("groups.tsv"))
                .arg("--model-file")
                .arg(p("model.tsv"))
                .arg("--out")
                .arg(p(out)),
        );
    }
    assert_eq!(fs::read(p("m1.tsv")).unwrap(), fs::read(p("m2.tsv")).unwrap());

    for out in ["r1.les", "r2.les"] {
        run_ok(
            lc().arg("profile")
                .arg("--templates")
                .arg(p("templates.tsv"))
                .arg("--groups")
                .arg(p("groups.tsv"))
                .arg("--out")
                .arg(p(out)),
        );
    }
    assert_eq!(fs::read(p("r1.les")).unwrap(), fs::read(p("r2.les")).unwrap());
}

#[test]
fn zero_window_is_a_usage_error() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);
    let out = run_code(
        lc().args(["group", "--format", "hdfs", "--window", "0"])
            .arg("--log")
            .arg(fixture("hdfs_1k.log"))
            .arg("--labels")
            .arg(fixture("hdfs_labels.csv"))
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--events")
            .arg(p("events.tsv"))
            .arg("--out")
            .arg(p("zero.tsv")),
        1,
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("window"), "{stderr}");
}

#[test]
fn missing_input_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    run_code(
        lc().arg("mine")
            .arg("--log")
            .arg(dir.path().join("no_such.log"))
            .arg("--out-templates")
            .arg(dir.path().join("t.tsv"))
            .arg("--out-events")
            .arg(dir.path().join("e.tsv")),
        2,
    );
}

#[test]
fn help_version_and_flag_errors_use_the_exit_code_contract() {
    run_code(lc().arg("--help"), 0);
    run_code(lc().arg("--version"), 0);
    run_code(lc().arg("frobnicate"), 1);
    // Missing required --out-templates.
    run_code(lc().args(["mine", "--log", "x.log"]), 1);
    // Out-of-range global flag caught by validation.
    run_code(
        lc().args(["--alpha", "2.0", "report", "--reduced", "nope.les"]),
        1,
    );
}

#[test]
fn filter_drops_removed_events_and_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let reduced = dir.path().join("set.les");
    drop_evb_set().save(&reduced).unwrap();
    let input = dir.path().join("input.log");
    fs::write(&input, "eva\nevb\nevc\nevb\nsomething else entirely\n").unwrap();

    run_ok(
        lc().arg("filter")
            .arg("--reduced")
            .arg(&reduced)
            .arg("--in")
            .arg(&input)
            .arg("--out")
            .arg(dir.path().join("filtered.log"))
            .arg("--stats-out")
            .arg(dir.path().join("stats.txt")),
    );

    let filtered = fs::read_to_string(dir.path().join("filtered.log")).unwrap();
    assert_eq!(filtered, "eva\nevc\nsomething else entirely\n");
    let stats = fs::read_to_string(dir.path().join("stats.txt")).unwrap();
    for line in [
        "lines_in 5",
        "lines_out 3",
        "lines_dropped 2",
        "lines_unmatched 1",
        "dropped_anti 2",
        "lines_reduction_pct 0.4",
    ] {
        assert!(stats.contains(line), "stats block missing `{line}`:\n{stats}");
    }
}

#[test]
fn reload_hot_swaps_the_set_under_a_running_filter() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live.les");
    let candidate = dir.path().join("candidate.les");
    drop_evb_set().save(&live).unwrap();
    retain_all_set().save(&candidate).unwrap();

    let mut child = lc()
        .arg("filter")
        .arg("--reduced")
        .arg(&live)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());

    // `evb` is dropped by the live set; reading the emitted `eva` proves
    // both lines have been judged by the original set.
    stdin.write_all(b"evb\neva\n").unwrap();
    stdin.flush().unwrap();
    let mut line = String::new();
    stdout.read_line(&mut line).unwrap();
    assert_eq!(line, "eva\n");

    // Install the retain-everything set; the filter is blocked reading
    // stdin, so it will notice the signal file before judging the next
    // line.
    let ack = run_ok(lc().arg("reload").arg("--live").arg(&live).arg("--with").arg(&candidate));
    assert!(String::from_utf8_lossy(&ack.stdout).contains("installed"));

    stdin.write_all(b"evb\n").unwrap();
    stdin.flush().unwrap();
    line.clear();
    stdout.read_line(&mut line).unwrap();
    assert_eq!(line, "evb\n", "the swapped-in set must retain evb");

    drop(stdin);
    let output = child.wait_with_output().unwrap();
    assert!(output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("reloaded event set"), "{stderr}");
    // Final counters: 3 lines in, 1 dropped before the swap.
    assert!(stderr.contains("lines_in 3"), "{stderr}");
    assert!(stderr.contains("lines_dropped 1"), "{stderr}");
}

#[test]
fn reload_rejects_a_corrupted_candidate_and_keeps_the_live_set() {
    let dir = tempfile::tempdir().unwrap();
    let live = dir.path().join("live.les");
    let candidate = dir.path().join("candidate.les");
    drop_evb_set().save(&live).unwrap();
    retain_all_set().save(&candidate).unwrap();
    // Flip one status byte without updating the content hash.
    let tampered = fs::read_to_string(&candidate)
        .unwrap()
        .replacen("evb\tretained", "evb\tanti", 1);
    fs::write(&candidate, tampered).unwrap();

    let live_before = fs::read(&live).unwrap();
    let out = run_code(
        lc().arg("reload").arg("--live").arg(&live).arg("--with").arg(&candidate),
        2,
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("hash"), "{stderr}");
    assert_eq!(fs::read(&live).unwrap(), live_before, "live set must be untouched");
    assert!(
        !dir.path().join("live.les.reload").exists(),
        "no reload signal after a failed install"
    );
}

#[test]
fn save_config_writes_a_replayable_settings_file() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);
    let cfg_path = p("resolved.cfg");

    run_ok(
        lc().args(["mine", "--format", "hdfs", "--seed", "9"])
            .arg("--log")
            .arg(fixture("hdfs_1k.log"))
            .arg("--save-config")
            .arg(&cfg_path)
            .arg("--out-templates")
            .arg(p("t2.tsv"))
            .arg("--out-events")
            .arg(p("e2.tsv")),
    );
    let text = fs::read_to_string(&cfg_path).unwrap();
    assert!(text.starts_with("#logcleaner-config v1\n"), "{text}");
    assert!(text.contains("seed = 9"), "{text}");
    assert!(text.contains("format = hdfs"), "{text}");
    assert!(text.contains("log = "), "{text}");

    // The written file is a complete run configuration: `group` needs only
    // the label table on top of it.
    run_ok(
        lc().arg("group")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--labels")
            .arg(fixture("hdfs_labels.csv"))
            .arg("--templates")
            .arg(p("t2.tsv"))
            .arg("--events")
            .arg(p("e2.tsv"))
            .arg("--out")
            .arg(p("g2.tsv")),
    );
}

#[test]
fn alpha_sweep_writes_one_trace_per_alpha() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);
    run_ok(
        lc().args(["study", "--method", "retry", "--alpha-sweep"])
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--out-trace")
            .arg(p("sweep.tsv")),
    );
    let set = TemplateSet::load(&p("templates.tsv")).unwrap();
    for alpha in [0.0, 0.01, 0.02, 0.05] {
        let path = p(&format!("sweep.alpha{alpha:?}.tsv"));
        let trace = ReductionTrace::load(&path, &set)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(trace.alpha, alpha);
        assert!(trace.sound, "alpha {alpha} run must record a sound trace");
    }
}

#[test]
fn cluster_study_emits_trace_and_categories() {
    let dir = mine_and_group();
    let p = |name: &str| dir.path().join(name);
    run_ok(
        lc().args(["study", "--method", "cluster"])
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--groups")
            .arg(p("groups.tsv"))
            .arg("--out-trace")
            .arg(p("trace.tsv"))
            .arg("--out-categories")
            .arg(p("cats.tsv")),
    );
    let report = run_ok(
        lc().arg("report")
            .arg("--templates")
            .arg(p("templates.tsv"))
            .arg("--trace")
            .arg(p("trace.tsv"))
            .arg("--categories")
            .arg(p("cats.tsv")),
    );
    let text = String::from_utf8_lossy(&report.stdout).to_string();
    assert!(text.contains("== Reduction studies =="), "{text}");
    assert!(text.contains("== Event categories"), "{text}");
    assert!(text.contains("key-event"), "{text}");
}

#[test]
fn report_refuses_future_artifact_versions() {
    let dir = tempfile::tempdir().unwrap();
    let v2 = dir.path().join("metrics.tsv");
    fs::write(&v2, "#logcleaner-metrics v2\ntp 1\n").unwrap();
    let out = run_code(lc().arg("report").arg("--before").arg(&v2), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("refusing to mix versions"), "{stderr}");

    let junk = dir.path().join("junk.txt");
    fs::write(&junk, "hello world\n").unwrap();
    let out = run_code(lc().arg("report").arg("--before").arg(&junk), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("not an artifact"), "{stderr}");

    // No inputs at all is a usage problem, not a data problem.
    run_code(lc().arg("report"), 1);
}
