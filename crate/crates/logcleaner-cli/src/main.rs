//! `logcleaner` — event reduction pipeline for log-based anomaly
//! detection.
//!
//! Nine subcommands cover the workflow end to end: `mine` log templates,
//! `group` lines into labeled windows, `train` and `eval` detectors, run
//! reduction `study` harnesses, `profile` a reduced event set, `filter` a
//! live stream against it (with `reload` hot-swapping the set), and
//! `report` over the written artifacts.
//!
//! Settings resolve in three layers: built-in defaults, then the `--config`
//! file, then `LOGCLEANER_*` environment variables and command-line flags.
//! Exit codes: 0 success, 1 usage error, 2 data/processing error.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{ReportInputs, StudyMethod};
use config::RunConfig;
use error::Result;

#[derive(Parser)]
#[command(
    name = "logcleaner",
    version,
    about = "Event reduction pipeline for log-based anomaly detection",
    max_term_width = 100
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Settings that override the config file (which overrides the defaults).
#[derive(Args)]
struct Overrides {
    /// Run configuration file (flat `key = value` lines)
    #[arg(long, global = true, env = "LOGCLEANER_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every randomized step (training, k-means, forests)
    #[arg(long, global = true, env = "LOGCLEANER_SEED")]
    seed: Option<u64>,

    /// Tolerated relative F1 degradation for reduction studies, in [0, 1)
    #[arg(long, global = true, env = "LOGCLEANER_ALPHA")]
    alpha: Option<f64>,

    /// Document-frequency cutoff of the sporadic stage, in [0, 1]
    #[arg(long, global = true, env = "LOGCLEANER_CUTOFF")]
    cutoff: Option<f64>,

    /// Mutual-information threshold of the anti-event stage (negative
    /// disables the stage)
    #[arg(long, global = true, env = "LOGCLEANER_THETA_ANTI", allow_hyphen_values = true)]
    theta_anti: Option<f64>,

    /// Minimum cluster size of the duplicative stage (0 disables the stage)
    #[arg(long, global = true, env = "LOGCLEANER_THETA_DUP")]
    theta_dup: Option<usize>,

    /// Grouping: `session` or a fixed window size in lines
    #[arg(long, global = true, env = "LOGCLEANER_WINDOW")]
    window: Option<String>,

    /// Detector: logistic, svm, tree, iforest, single:<event_id>, or
    /// external:<command>
    #[arg(long, global = true, env = "LOGCLEANER_MODEL")]
    model: Option<String>,

    /// Write the fully resolved configuration to this file before running
    #[arg(long, global = true, value_name = "FILE")]
    save_config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Remove-retrain-retry loop over every candidate event
    Retry,
    /// Score events in isolation, drop the irrelevant cluster, then retry
    Cluster,
}

#[derive(Subcommand)]
enum Command {
    /// Mine event templates from a raw log
    Mine {
        /// Raw log file (falls back to the `log` config key)
        #[arg(long, env = "LOGCLEANER_LOG")]
        log: Option<PathBuf>,
        /// Dataset family: hdfs, bgl, thunderbird, generic, or custom:<regex>
        #[arg(long)]
        format: Option<String>,
        /// Read at most this many lines
        #[arg(long)]
        line_limit: Option<usize>,
        /// Where to write the template set
        #[arg(long, value_name = "FILE")]
        out_templates: PathBuf,
        /// Where to write the per-line event assignments
        #[arg(long, value_name = "FILE")]
        out_events: PathBuf,
    },
    /// Group mined lines into labeled sessions or fixed windows
    Group {
        #[arg(long, value_name = "FILE")]
        templates: PathBuf,
        /// Per-line event assignments from `mine`
        #[arg(long, value_name = "FILE")]
        events: PathBuf,
        /// Raw log file (needed again for session keys and per-line labels)
        #[arg(long, env = "LOGCLEANER_LOG")]
        log: Option<PathBuf>,
        /// Session label table (`key,label` CSV)
        #[arg(long, env = "LOGCLEANER_LABELS")]
        labels: Option<PathBuf>,
        /// Label source: per-line (alert tag in the log) or per-session
        #[arg(long)]
        label_kind: Option<String>,
        /// Regex extracting the session key from line content
        #[arg(long)]
        session_regex: Option<String>,
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        line_limit: Option<usize>,
        /// Where to write the labeled groups
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train a detector on the leading split of the groups
    Train {
        #[arg(long, value_name = "FILE")]
        templates: PathBuf,
        #[arg(long, value_name = "FILE")]
        groups: PathBuf,
        /// Apply this reduced event set before training
        #[arg(long, value_name = "FILE")]
        reduced: Option<PathBuf>,
        /// Where to write the model
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Evaluate a trained detector on the trailing split of the groups
    Eval {
        #[arg(long, value_name = "FILE")]
        templates: PathBuf,
        #[arg(long, value_name = "FILE")]
        groups: PathBuf,
        /// Trained model artifact from `train` (not to be confused with the
        /// global --model, which names a detector kind)
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        /// Apply this reduced event set before evaluating
        #[arg(long, value_name = "FILE")]
        reduced: Option<PathBuf>,
        /// Where to write the metrics
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also time inference and write `<out>.timing`
        #[arg(long)]
        timing: bool,
    },
    /// Run a reduction study (how many events can go before F1 degrades)
    Study {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_name = "FILE")]
        templates: PathBuf,
        #[arg(long, value_name = "FILE")]
        groups: PathBuf,
        /// Where to write the reduction trace
        #[arg(long, value_name = "FILE")]
        out_trace: PathBuf,
        /// Also write the key/anti/duplicative event taxonomy
        #[arg(long, value_name = "FILE")]
        out_categories: Option<PathBuf>,
        /// Run once per alpha in {0, 0.01, 0.02, 0.05}, suffixing each output
        #[arg(long)]
        alpha_sweep: bool,
    },
    /// Profile anti/duplicative events and emit a reduced event set
    Profile {
        #[arg(long, value_name = "FILE")]
        templates: PathBuf,
        #[arg(long, value_name = "FILE")]
        groups: PathBuf,
        /// Where to write the reduced event set
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Filter a log stream against a reduced event set
    Filter {
        /// Reduced event set; `<set>.reload` and `<set>.stats` signal files
        /// are watched between lines
        #[arg(long, value_name = "FILE")]
        reduced: PathBuf,
        /// Input log file (default: stdin)
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Output file (default: stdout)
        #[arg(long = "out", value_name = "FILE")]
        output: Option<PathBuf>,
        /// Write the final counter block here instead of stderr
        #[arg(long, value_name = "FILE")]
        stats_out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Validate a new reduced set and hot-swap it under a running filter
    Reload {
        /// The artifact path a running `filter --reduced` is watching
        #[arg(long, value_name = "FILE")]
        live: PathBuf,
        /// Candidate artifact to validate and install
        #[arg(long = "with", value_name = "FILE")]
        candidate: PathBuf,
    },
    /// Summarize written artifacts (pure: reads files, prints text)
    Report {
        #[arg(long, value_name = "FILE")]
        reduced: Option<PathBuf>,
        /// Metrics artifact of the unreduced run
        #[arg(long, value_name = "FILE")]
        before: Option<PathBuf>,
        /// Metrics artifact of the reduced run
        #[arg(long, value_name = "FILE")]
        after: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        timing_before: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        timing_after: Option<PathBuf>,
        /// Template set, needed for --groups, --trace, and --categories
        #[arg(long, value_name = "FILE")]
        templates: Option<PathBuf>,
        /// Groups file; with --reduced and --templates adds the stage table
        #[arg(long, value_name = "FILE")]
        groups: Option<PathBuf>,
        /// Category artifact from `study --out-categories`
        #[arg(long, value_name = "FILE")]
        categories: Option<PathBuf>,
        /// Reduction trace(s) from `study`; repeatable
        #[arg(long = "trace", value_name = "FILE")]
        traces: Vec<PathBuf>,
    },
}

/// Merges defaults, the config file, and command-line/environment
/// overrides into one validated configuration.
fn resolve_config(overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = overrides.seed {
        cfg.seed = v;
    }
    if let Some(v) = overrides.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = overrides.cutoff {
        cfg.cutoff = v;
    }
    if let Some(v) = overrides.theta_anti {
        cfg.theta_anti = v;
    }
    if let Some(v) = overrides.theta_dup {
        cfg.theta_dup = v;
    }
    if let Some(v) = &overrides.window {
        cfg.window = v.clone();
    }
    if let Some(v) = &overrides.model {
        cfg.model = v.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.overrides)?;

    // Fold per-subcommand data-source flags into the configuration before
    // validating, so a bad --format fails the same way as a bad config key.
    match &cli.command {
        Command::Mine {
            log,
            format,
            line_limit,
            ..
        }
        | Command::Group {
            log,
            format,
            line_limit,
            ..
        } => {
            if let Some(v) = log {
                cfg.log = Some(v.clone());
            }
            if let Some(v) = format {
                cfg.format = v.clone();
            }
            if let Some(v) = line_limit {
                cfg.line_limit = Some(*v);
            }
        }
        Command::Filter { format, .. } => {
            if let Some(v) = format {
                cfg.format = v.clone();
            }
        }
        _ => {}
    }
    if let Command::Group {
        labels,
        label_kind,
        session_regex,
        ..
    } = &cli.command
    {
        if let Some(v) = labels {
            cfg.labels = Some(v.clone());
        }
        if let Some(v) = label_kind {
            cfg.label_kind = v.clone();
        }
        if let Some(v) = session_regex {
            cfg.session_regex = v.clone();
        }
    }
    cfg.validate()?;

    if let Some(path) = &cli.overrides.save_config {
        commands::save_config(&cfg, path)?;
    }

    match cli.command {
        Command::Mine {
            out_templates,
            out_events,
            ..
        } => commands::mine(&cfg, &out_templates, &out_events),
        Command::Group {
            templates,
            events,
            out,
            ..
        } => commands::group(&cfg, &templates, &events, &out),
        Command::Train {
            templates,
            groups,
            reduced,
            out,
        } => commands::train(&cfg, &templates, &groups, reduced.as_deref(), &out),
        Command::Eval {
            templates,
            groups,
            model_file,
            reduced,
            out,
            timing,
        } => commands::eval(
            &cfg,
            &templates,
            &groups,
            &model_file,
            reduced.as_deref(),
            &out,
            timing,
        ),
        Command::Study {
            method,
            templates,
            groups,
            out_trace,
            out_categories,
            alpha_sweep,
        } => commands::study(
            &cfg,
            match method {
                MethodArg::Retry => StudyMethod::Retry,
                MethodArg::Cluster => StudyMethod::Cluster,
            },
            &templates,
            &groups,
            &out_trace,
            out_categories.as_deref(),
            alpha_sweep,
        ),
        Command::Profile {
            templates,
            groups,
            out,
        } => commands::profile(&cfg, &templates, &groups, &out),
        Command::Filter {
            reduced,
            input,
            output,
            stats_out,
            ..
        } => commands::filter(
            &cfg,
            &reduced,
            input.as_deref(),
            output.as_deref(),
            stats_out.as_deref(),
        ),
        Command::Reload { live, candidate } => commands::reload(&live, &candidate),
        Command::Report {
            reduced,
            before,
            after,
            timing_before,
            timing_after,
            templates,
            groups,
            categories,
            traces,
        } => commands::report(&ReportInputs {
            reduced,
            before,
            after,
            timing_before,
            timing_after,
            templates,
            groups,
            categories,
            traces,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful exits; everything else a
            // clap error catches (unknown flag, missing argument, bad value)
            // is a usage problem.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use error::CliError;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let cli = Cli::try_parse_from(args).expect("flag grammar");
        let cfg = resolve_config(&cli.overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn flags_override_defaults() {
        let cfg = parse(&[
            "logcleaner",
            "--seed",
            "7",
            "--alpha",
            "0.05",
            "--model",
            "svm",
            "--window",
            "120",
            "profile",
            "--templates",
            "t",
            "--groups",
            "g",
            "--out",
            "o",
        ])
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.alpha, 0.05);
        assert_eq!(cfg.model, "svm");
        assert_eq!(cfg.window, "120");
    }

    #[test]
    fn global_flags_work_after_the_subcommand() {
        let cli = Cli::try_parse_from([
            "logcleaner",
            "profile",
            "--templates",
            "t",
            "--groups",
            "g",
            "--out",
            "o",
            "--cutoff",
            "0.2",
            "--theta-anti",
            "-1",
        ])
        .expect("global flags must parse in trailing position");
        assert_eq!(cli.overrides.cutoff, Some(0.2));
        assert_eq!(cli.overrides.theta_anti, Some(-1.0));
    }

    #[test]
    fn out_of_range_flag_is_a_usage_error() {
        let err = parse(&[
            "logcleaner",
            "--alpha",
            "1.5",
            "profile",
            "--templates",
            "t",
            "--groups",
            "g",
            "--out",
            "o",
        ])
        .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)), "{err}");
    }

    #[test]
    fn config_file_sits_between_defaults_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        let file_cfg = RunConfig {
            seed: 100,
            model: "logistic".into(),
            ..RunConfig::default()
        };
        file_cfg.save(&path).unwrap();
        let cfg = parse(&[
            "logcleaner",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
            "profile",
            "--templates",
            "t",
            "--groups",
            "g",
            "--out",
            "o",
        ])
        .unwrap();
        // Flag beats file; file beats default.
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.model, "logistic");
        assert_eq!(cfg.alpha, RunConfig::default().alpha);
    }
}
