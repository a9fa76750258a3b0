//! Online filtering middleware: drop log lines whose events were removed
//! by profiling, pass everything else through.
//!
//! A [`StreamFilter`] wraps a hash-verified [`ReducedEventSet`] and decides
//! line by line. Matching uses the set's full template inventory (removed
//! events keep their templates) so every drop is attributed to its reason.
//! Unmatched lines fail open: they are emitted and counted, because
//! dropping unknown events would blind downstream detectors to novel
//! anomalies — a rising unmatched counter is the operator's signal to
//! re-profile.
//!
//! The active set can be hot-swapped with [`StreamFilter::reload`]; the
//! swap is a single reference replacement, so any given line is judged by
//! exactly one set, never a mixture. An invalid replacement file leaves
//! the old set in place.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use crate::artifact;
use crate::error::{Error, Result};
use crate::profiler::{ReducedEventSet, RemovalReason};

/// Counter snapshot plus reduction fractions recomputed from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStats {
    pub lines_in: u64,
    /// Lines emitted: retained events plus unmatched (fail-open) lines.
    pub lines_out: u64,
    /// Lines dropped, equal to the sum of the three reason counters.
    pub lines_dropped: u64,
    /// Lines that matched no template; counted within `lines_out`.
    pub lines_unmatched: u64,
    pub dropped_sporadic: u64,
    pub dropped_anti: u64,
    pub dropped_duplicative: u64,
    /// Fraction of the active set's events that are removed.
    pub events_reduction_pct: f64,
    /// Fraction of seen lines that were dropped; replaying a profiled
    /// corpus through its own reduced set reproduces the profiler's
    /// prediction exactly.
    pub lines_reduction_pct: f64,
}

impl FilterStats {
    /// The conservation law: every input line is either emitted or
    /// dropped.
    pub fn conserved(&self) -> bool {
        self.lines_in == self.lines_out + self.lines_dropped
            && self.lines_dropped
                == self.dropped_sporadic + self.dropped_anti + self.dropped_duplicative
            && self.lines_unmatched <= self.lines_out
    }

    /// Key-value text block, one counter per line.
    pub fn to_text_block(&self) -> String {
        format!(
            "lines_in {}\nlines_out {}\nlines_dropped {}\nlines_unmatched {}\n\
             dropped_sporadic {}\ndropped_anti {}\ndropped_duplicative {}\n\
             events_reduction_pct {}\nlines_reduction_pct {}\n",
            self.lines_in,
            self.lines_out,
            self.lines_dropped,
            self.lines_unmatched,
            self.dropped_sporadic,
            self.dropped_anti,
            self.dropped_duplicative,
            artifact::fmt_f64(self.events_reduction_pct),
            artifact::fmt_f64(self.lines_reduction_pct)
        )
    }
}

/// Verdict for one line.
#[derive(Debug, Clone, PartialEq)]
pub enum LineDecision {
    /// Emit the line; `event` is the matched retained event, or `None`
    /// for an unmatched line passing through fail-open.
    Emit { event: Option<u32> },
    /// Drop the line; the matched event was removed for `reason`.
    Drop { event: u32, reason: RemovalReason },
}

impl LineDecision {
    pub fn is_emit(&self) -> bool {
        matches!(self, LineDecision::Emit { .. })
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    lines_in: u64,
    lines_out: u64,
    lines_unmatched: u64,
    sporadic: u64,
    anti: u64,
    duplicative: u64,
}

/// Line-by-line filter around a hot-swappable [`ReducedEventSet`].
#[derive(Debug)]
pub struct StreamFilter {
    set: RwLock<Arc<ReducedEventSet>>,
    counters: Mutex<Counters>,
}

impl StreamFilter {
    /// Wraps an in-memory set after checking its structural invariants.
    pub fn new(reduced: ReducedEventSet) -> Result<StreamFilter> {
        reduced.validate()?;
        Ok(StreamFilter {
            set: RwLock::new(Arc::new(reduced)),
            counters: Mutex::new(Counters::default()),
        })
    }

    /// Loads a reduced-set artifact; the embedded content hash must
    /// verify, otherwise the filter refuses to start.
    pub fn from_file(path: &Path) -> Result<StreamFilter> {
        StreamFilter::new(ReducedEventSet::load(path)?)
    }

    /// The set currently judging lines.
    pub fn current_set(&self) -> Arc<ReducedEventSet> {
        Arc::clone(&self.set.read().expect("set lock poisoned"))
    }

    /// Swaps in a new set atomically. On any error the old set stays
    /// active.
    pub fn reload_set(&self, reduced: ReducedEventSet) -> Result<()> {
        reduced.validate()?;
        *self.set.write().expect("set lock poisoned") = Arc::new(reduced);
        Ok(())
    }

    /// [`StreamFilter::reload_set`] from an artifact file, hash-verified.
    pub fn reload(&self, path: &Path) -> Result<()> {
        self.reload_set(ReducedEventSet::load(path)?)
    }

    /// Judges one line of content and updates the counters. The whole
    /// decision uses a single reference to the active set, so a
    /// concurrent reload never splits a line's view.
    pub fn decide(&self, content: &str) -> LineDecision {
        let set = self.current_set();
        let decision = match set.templates.match_content(content) {
            None => LineDecision::Emit { event: None },
            Some(event) => match set.removed.get(&event) {
                None => LineDecision::Emit { event: Some(event) },
                Some(reason) => LineDecision::Drop {
                    event,
                    reason: reason.clone(),
                },
            },
        };
        let mut c = self.counters.lock().expect("counter lock poisoned");
        c.lines_in += 1;
        match &decision {
            LineDecision::Emit { event } => {
                c.lines_out += 1;
                if event.is_none() {
                    c.lines_unmatched += 1;
                }
            }
            LineDecision::Drop { reason, .. } => match reason {
                RemovalReason::Sporadic => c.sporadic += 1,
                RemovalReason::Anti => c.anti += 1,
                RemovalReason::Duplicative { .. } => c.duplicative += 1,
            },
        }
        decision
    }

    /// Counter snapshot with reduction fractions derived from it and from
    /// the active set; nothing is stored separately.
    pub fn stats(&self) -> FilterStats {
        let c = *self.counters.lock().expect("counter lock poisoned");
        let set = self.current_set();
        let dropped = c.sporadic + c.anti + c.duplicative;
        let events_reduction_pct = if set.num_events() == 0 {
            0.0
        } else {
            set.removed.len() as f64 / set.num_events() as f64
        };
        let lines_reduction_pct = if c.lines_in == 0 {
            0.0
        } else {
            dropped as f64 / c.lines_in as f64
        };
        FilterStats {
            lines_in: c.lines_in,
            lines_out: c.lines_out,
            lines_dropped: dropped,
            lines_unmatched: c.lines_unmatched,
            dropped_sporadic: c.sporadic,
            dropped_anti: c.anti,
            dropped_duplicative: c.duplicative,
            events_reduction_pct,
            lines_reduction_pct,
        }
    }

    /// Filters a whole stream, treating each line as template content,
    /// and returns the final counter snapshot. Emitted lines keep their
    /// original text and order.
    pub fn filter_stream<R: BufRead, W: Write>(&self, input: R, mut output: W) -> Result<FilterStats> {
        let stream = Path::new("<stream>");
        for line in input.lines() {
            let line = line.map_err(|e| Error::io(stream, e))?;
            if self.decide(&line).is_emit() {
                output.write_all(line.as_bytes()).map_err(|e| Error::io(stream, e))?;
                output.write_all(b"\n").map_err(|e| Error::io(stream, e))?;
            }
        }
        output.flush().map_err(|e| Error::io(stream, e))?;
        Ok(self.stats())
    }
}
