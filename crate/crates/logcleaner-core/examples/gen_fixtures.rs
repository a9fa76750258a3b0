//! Regenerates the bundled desk-scale corpora under `fixtures/` at the
//! workspace root. The files are deterministic (fixed seeds), so running
//! this after a generator change shows exactly what moved:
//!
//! ```text
//! cargo run -p logcleaner-core --example gen_fixtures
//! ```

use std::fs;
use std::path::PathBuf;

use logcleaner_core::synth;

fn main() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    fs::create_dir_all(&root).expect("create fixtures dir");

    // 134 blocks ≈ 1.2k lines; 134 is not a multiple of 8, so the anomaly
    // rate is not an exact dyadic fraction and random presence patterns
    // cannot form exactly independent label tables by coincidence.
    let hdfs = synth::hdfs_fixture(134, 2026);
    fs::write(root.join("hdfs_1k.log"), hdfs.log_lines.join("\n") + "\n").expect("write hdfs log");
    fs::write(root.join("hdfs_labels.csv"), &hdfs.labels_csv).expect("write hdfs labels");
    println!(
        "fixtures/hdfs_1k.log: {} lines, {} blocks ({} anomalous)",
        hdfs.log_lines.len(),
        hdfs.n_blocks,
        hdfs.n_anomalous
    );

    let bgl = synth::bgl_fixture(1100, 2026);
    let alerts = bgl.iter().filter(|l| !l.starts_with('-')).count();
    fs::write(root.join("bgl_1k.log"), bgl.join("\n") + "\n").expect("write bgl log");
    println!("fixtures/bgl_1k.log: {} lines ({alerts} alert-tagged)", bgl.len());
}
