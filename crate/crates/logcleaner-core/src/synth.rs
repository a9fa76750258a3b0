//! Deterministic synthetic corpora and datasets.
//!
//! Everything here is seeded and reproducible: generators back the bundled
//! fixtures, the test suites, and the benchmarks. The HDFS-style fixture
//! plants a known reduction structure (constant chatter events, an exact
//! duplicate pair, an independent optional event, and anomaly markers) so
//! end-to-end behavior can be checked against designed ground truth.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grouper::{EventGroup, Label, LabeledDataset};

/// A raw log corpus with per-line planted template ids.
pub struct TemplateCorpus {
    pub lines: Vec<String>,
    /// Index of the planted template behind each line.
    pub truth: Vec<usize>,
}

const PLANTED: &[(&str, &str)] = &[
    ("Served block", "to"),
    ("Receiving block", "src"),
    ("Deleting block", "file"),
    ("Verification succeeded for", "replica"),
    ("Starting thread to transfer", "dest"),
    ("Adding an already existing", "entry"),
    ("Unexpected error deleting", "ref"),
    ("Changing view from", "into"),
    ("Renewing lease on", "holder"),
    ("Commit pending for", "txid"),
    ("Waiting on barrier at", "stage"),
    ("Flushing segment of", "bytes"),
];

/// Round-robin corpus over `n_templates` planted message shapes, each line
/// carrying fresh numeric parameters. `n_templates` is capped at the
/// planted list length.
pub fn template_corpus(n_templates: usize, n_lines: usize, seed: u64) -> TemplateCorpus {
    assert!(n_templates >= 1 && n_templates <= PLANTED.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(n_lines);
    let mut truth = Vec::with_capacity(n_lines);
    for i in 0..n_lines {
        let t = i % n_templates;
        let (head, mid) = PLANTED[t];
        let a: u32 = rng.random_range(1_000..999_999);
        let b: u32 = rng.random_range(2..250);
        lines.push(format!("{head} blk_{a} {mid} node_{b}"));
        truth.push(t);
    }
    TemplateCorpus { lines, truth }
}

/// Planted event roles inside [`HdfsFixture`]. Indexes are the first-seen
/// mining order for a corpus emitted block by block in template order.
pub struct HdfsFixture {
    /// Raw log lines, HDFS header format.
    pub log_lines: Vec<String>,
    /// `BlockId,Label` CSV matching the log.
    pub labels_csv: String,
    pub n_blocks: usize,
    pub n_anomalous: usize,
}

fn ip(rng: &mut ChaCha8Rng) -> String {
    format!(
        "/10.{}.{}.{}:{}",
        rng.random_range(0..4u8),
        rng.random_range(0..=255u8),
        rng.random_range(1..255u8),
        rng.random_range(40_000..60_000u32)
    )
}

/// HDFS-style corpus with a designed reduction structure.
///
/// Every block always carries one allocation line, three receiving lines
/// and three received lines; those seven lines are label-independent
/// constants. A responder pair (`terminating` plus `verification`) appears
/// together in a random subset of blocks, making the two events exact
/// presence duplicates. A serve line appears in an independent random
/// subset. Every eighth block is anomalous and additionally carries an
/// exception line and a corruption line, which are therefore perfect
/// anomaly markers.
pub fn hdfs_fixture(n_blocks: usize, seed: u64) -> HdfsFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_lines = Vec::new();
    let mut labels_csv = String::from("BlockId,Label\n");
    let mut n_anomalous = 0;

    let mut used = std::collections::HashSet::new();
    for i in 0..n_blocks {
        let blk = loop {
            let id: u64 = rng.random_range(1_000_000_000_000u64..9_000_000_000_000u64);
            if used.insert(id) {
                break format!("blk_{id}");
            }
        };
        let anomalous = i % 8 == 3;
        if anomalous {
            n_anomalous += 1;
        }

        let hdr = |rng: &mut ChaCha8Rng, component: &str| {
            format!(
                "081109 {:06} {} INFO {}:",
                203_500 + i * 7 + rng.random_range(0..5),
                rng.random_range(10..4_000),
                component
            )
        };

        log_lines.push(format!(
            "{} BLOCK* NameSystem.allocateBlock: /user/rb/out/part-{:05}. {}",
            hdr(&mut rng, "dfs.FSNamesystem"),
            i,
            blk
        ));
        for _ in 0..3 {
            let (src, dest) = (ip(&mut rng), ip(&mut rng));
            log_lines.push(format!(
                "{} Receiving block {} src: {} dest: {}",
                hdr(&mut rng, "dfs.DataNode$DataXceiver"),
                blk,
                src,
                dest
            ));
        }
        for _ in 0..3 {
            let src = ip(&mut rng);
            log_lines.push(format!(
                "{} Received block {} of size {} from {}",
                hdr(&mut rng, "dfs.DataNode$PacketResponder"),
                blk,
                rng.random_range(1_000_000..67_108_864u64),
                src
            ));
        }
        let with_responder = rng.random_bool(0.6);
        if with_responder {
            log_lines.push(format!(
                "{} PacketResponder {} for block {} terminating",
                hdr(&mut rng, "dfs.DataNode$PacketResponder"),
                rng.random_range(0..3u8),
                blk
            ));
            log_lines.push(format!(
                "{} Verification succeeded for {}",
                hdr(&mut rng, "dfs.DataBlockScanner"),
                blk
            ));
        }
        if rng.random_bool(0.5) {
            let dest = ip(&mut rng);
            log_lines.push(format!(
                "{} Served block {} to {}",
                hdr(&mut rng, "dfs.DataNode"),
                blk,
                dest
            ));
        }
        if anomalous {
            log_lines.push(format!(
                "{} writeBlock {} received exception java.io.IOException",
                hdr(&mut rng, "dfs.DataNode$DataXceiver"),
                blk
            ));
            log_lines.push(format!(
                "{} Unexpected error trying to delete block {}. BlockInfo not found",
                hdr(&mut rng, "dfs.FSNamesystem"),
                blk
            ));
        }
        labels_csv.push_str(&format!(
            "{},{}\n",
            blk,
            if anomalous { "Anomaly" } else { "Normal" }
        ));
    }

    HdfsFixture {
        log_lines,
        labels_csv,
        n_blocks,
        n_anomalous,
    }
}

const BGL_NODES: &[&str] = &["R02-M1-N0-C:J12-U11", "R23-M0-N8-C:J05-U01", "R16-M1-NC-C:J08-U11"];

/// BGL-style corpus with the alert tag in the first column (`-` means
/// normal). Roughly eight percent of lines carry a `KERNDTLB` alert.
pub fn bgl_fixture(n_lines: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal_bodies = [
        "instruction cache parity error corrected",
        "generating core.* files",
        "CE sym 2, at 0x0b85eee0, mask 0x05",
        "total of 1 ddr error(s) detected and corrected",
    ];
    let mut lines = Vec::with_capacity(n_lines);
    for i in 0..n_lines {
        let alert = i % 12 == 7;
        let tag = if alert { "KERNDTLB" } else { "-" };
        let node = BGL_NODES[rng.random_range(0..BGL_NODES.len())];
        let body = if alert {
            "data TLB error interrupt".to_string()
        } else {
            normal_bodies[rng.random_range(0..normal_bodies.len())].to_string()
        };
        let ts = 1_117_838_570 + i as u64 * 3;
        lines.push(format!(
            "{tag} {ts} 2005.06.05 {node} 2005-06-05-15.42.{:02}.{:06} {node} RAS KERNEL {} {body}",
            i % 60,
            rng.random_range(0..1_000_000u32),
            if alert { "FATAL" } else { "INFO" },
        ));
    }
    lines
}

/// Random dataset for property tests: event counts and labels drawn
/// independently, no planted structure.
pub fn random_dataset(
    n_groups: usize,
    num_events: usize,
    anomaly_rate: f64,
    seed: u64,
) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..n_groups)
        .map(|g| {
            let mut events = Vec::new();
            for e in 0..num_events as u32 {
                for _ in 0..rng.random_range(0..4) {
                    events.push(e);
                }
            }
            events.shuffle(&mut rng);
            let label = if rng.random_bool(anomaly_rate) {
                Label::Anomalous
            } else {
                Label::Normal
            };
            EventGroup::new(format!("g{g}"), events, label)
        })
        .collect();
    LabeledDataset::new(groups, num_events)
}

/// Linearly separable dataset: event 0 occurs exactly in the anomalous
/// groups (three copies, so gradient-descent models see a wide margin),
/// the remaining events are label-independent noise.
pub fn separable_dataset(n_groups: usize, num_events: usize, seed: u64) -> LabeledDataset {
    assert!(num_events >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..n_groups)
        .map(|g| {
            let label = if g % 4 == 1 {
                Label::Anomalous
            } else {
                Label::Normal
            };
            let mut events = Vec::new();
            if label == Label::Anomalous {
                events.extend([0, 0, 0]);
            }
            for e in 1..num_events as u32 {
                for _ in 0..rng.random_range(0..3) {
                    events.push(e);
                }
            }
            events.shuffle(&mut rng);
            EventGroup::new(format!("g{g}"), events, label)
        })
        .collect();
    LabeledDataset::new(groups, num_events)
}

/// Small dataset for exhaustive-search comparisons: `num_events <= 10`,
/// event 0 is a perfect anomaly marker, events 1 and 2 appear in every
/// group (pure chatter), the rest are independent noise. Any subset that
/// keeps event 0 admits a perfect classifier.
pub fn marker_dataset(n_groups: usize, num_events: usize, seed: u64) -> LabeledDataset {
    assert!((3..=10).contains(&num_events));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..n_groups)
        .map(|g| {
            let label = if g % 3 == 2 {
                Label::Anomalous
            } else {
                Label::Normal
            };
            let mut events = Vec::new();
            if label == Label::Anomalous {
                events.push(0);
            }
            events.push(1);
            for _ in 0..1 + rng.random_range(0..3) {
                events.push(2);
            }
            for e in 3..num_events as u32 {
                if rng.random_bool(0.5) {
                    events.push(e);
                }
            }
            events.shuffle(&mut rng);
            EventGroup::new(format!("g{g}"), events, label)
        })
        .collect();
    LabeledDataset::new(groups, num_events)
}

/// Dataset with planted exact-duplicate event pairs.
///
/// Units — `k_pairs` duplicate pairs followed by `n_independents` singleton
/// events — partition the groups into disjoint random buckets. Every group
/// in a pair's bucket contains both pair members; every group in an
/// independent's bucket contains just that event. Bucket membership is the
/// entire presence pattern, so pair members are exact presence duplicates
/// while any two events from different units never co-occur. Groups of the
/// first unit are anomalous, which keeps every event's label association
/// strictly nonzero.
///
/// Pairs take event ids `0..2k` (consecutive), independents `2k..2k+m`.
pub struct DuplicatePlant {
    pub dataset: LabeledDataset,
    /// `(survivor, duplicate)` — identical MI makes the lower id survive.
    pub pairs: Vec<(u32, u32)>,
    pub independents: Vec<u32>,
}

pub fn duplicate_plant_corpus(
    k_pairs: usize,
    n_independents: usize,
    n_groups: usize,
    seed: u64,
) -> DuplicatePlant {
    let units = k_pairs + n_independents;
    assert!(units >= 1 && n_groups >= units);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_groups).collect();
    order.shuffle(&mut rng);

    let mut events_of: Vec<Vec<u32>> = vec![Vec::new(); n_groups];
    let mut labels = vec![Label::Normal; n_groups];
    let base = n_groups / units;
    let extra = n_groups % units;
    let mut pos = 0;
    for u in 0..units {
        let size = base + usize::from(u < extra);
        for &g in &order[pos..pos + size] {
            if u < k_pairs {
                events_of[g].push(2 * u as u32);
                events_of[g].push(2 * u as u32 + 1);
            } else {
                events_of[g].push((k_pairs + u) as u32);
            }
            if u == 0 {
                labels[g] = Label::Anomalous;
            }
        }
        pos += size;
    }
    let groups = events_of
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(g, (events, label))| EventGroup::new(format!("g{g}"), events, label))
        .collect();
    DuplicatePlant {
        dataset: LabeledDataset::new(groups, 2 * k_pairs + n_independents),
        pairs: (0..k_pairs as u32).map(|u| (2 * u, 2 * u + 1)).collect(),
        independents: (2 * k_pairs as u32..(2 * k_pairs + n_independents) as u32).collect(),
    }
}

/// Placeholder template set for tests that work on pre-grouped datasets:
/// one single-literal template per event id.
pub fn templates_for(num_events: usize) -> crate::template_miner::TemplateSet {
    crate::template_miner::TemplateSet::from_event_ids((0..num_events).map(|e| format!("E{e}")))
}

/// Dataset for relevance-clustering tests: events 0..3 are perfect anomaly
/// markers (present exactly in anomalous groups, once each) and events 3..12
/// are constant chatter, exactly once in every group. A single-column
/// decision tree scores F1 = 1 on every marker and F1 = 0 on every chatter
/// column, so the per-event score triples form two tight clusters.
pub fn cluster_study_dataset(n_groups: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = (0..n_groups)
        .map(|g| {
            let label = if g % 3 == 2 {
                Label::Anomalous
            } else {
                Label::Normal
            };
            let mut events: Vec<u32> = Vec::new();
            if label == Label::Anomalous {
                events.extend([0, 1, 2]);
            }
            events.extend(3..12u32);
            events.shuffle(&mut rng);
            EventGroup::new(format!("g{g}"), events, label)
        })
        .collect();
    LabeledDataset::new(groups, 12)
}

/// Well-separated point blobs for clustering tests: `centers.len()` blobs
/// of `n_per` points each, uniform jitter of `spread` per coordinate.
pub fn point_blobs(centers: &[Vec<f64>], n_per: usize, spread: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(centers.len() * n_per);
    for c in centers {
        for _ in 0..n_per {
            points.push(
                c.iter()
                    .map(|&x| x + rng.random_range(-spread..=spread))
                    .collect(),
            );
        }
    }
    points
}
