//! Event reduction for log-based anomaly detection.
//!
//! The pipeline mirrors the usual anomaly-detection workflow: raw logs are
//! parsed into event templates ([`template_miner`]), grouped into labeled
//! windows ([`grouper`]) and fed to count-vector detectors ([`detectors`]).
//! On top of that sit two reduction mechanisms:
//!
//! * [`study`] — retry-based and clustering-based reduction harnesses that
//!   measure how far the event vocabulary can shrink before detection
//!   quality degrades past a tolerance `alpha`, and that categorize events
//!   as key, anti, or duplicative.
//! * [`profiler`] — the model-free profiling pipeline: a document-frequency
//!   sporadic filter, a mutual-information anti-event filter, and a
//!   co-occurrence-graph + OPTICS duplicative-event separator, producing a
//!   [`ReducedEventSet`].
//!
//! The [`stream_filter`] module applies a `ReducedEventSet` to a live log
//! stream as middleware, with atomic hot-reload of the set.
//!
//! All artifacts are line-oriented text files with `#logcleaner-<kind> v1`
//! headers; see each module's `save`/`load` functions.

pub mod artifact;
pub mod detectors;
pub mod error;
pub mod grouper;
pub mod ingest;
pub mod profiler;
pub mod stream_filter;
pub mod study;
pub mod synth;
pub mod template_miner;

pub use detectors::{EvalMetrics, FeatureMatrix, Model, ModelKind};
pub use error::{Error, Result};
pub use grouper::{DatasetView, EventGroup, GroupId, Label, LabeledDataset};
pub use ingest::{DatasetFormat, LabelKind, LabelSource, LogRecord};
pub use profiler::{ProfileConfig, ProfileOutcome, ReducedEventSet, RemovalReason};
pub use stream_filter::{FilterStats, StreamFilter};
pub use study::{EventCategory, ReductionTrace, SingleEventScore};
pub use template_miner::{EventTemplate, MinerConfig, TemplateSet};
