//! Isolation forest for unsupervised detection.
//!
//! 100 trees over subsamples of at most 256 rows; split features are drawn
//! uniformly among columns that still vary inside the node, split values
//! uniformly between the node minimum and maximum. Nodes where every
//! column is constant become leaves whose size feeds the average path
//! length adjustment. Scores of at least 0.5 flag a row anomalous.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact;
use crate::detectors::FeatureMatrix;
use crate::error::{Error, Result};
use crate::grouper::Label;

const N_TREES: usize = 100;
const SUBSAMPLE: usize = 256;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq)]
pub enum IsoNode {
    Leaf {
        size: usize,
    },
    Split {
        col: usize,
        thr: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoTree {
    pub nodes: Vec<IsoNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub subsample: usize,
    pub trees: Vec<IsoTree>,
}

/// Expected path length of an unsuccessful binary search over `n` items,
/// using the harmonic number approximation `H(k) = ln(k) + gamma`.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    2.0 * ((nf - 1.0).ln() + EULER_GAMMA) - 2.0 * (nf - 1.0) / nf
}

fn build(
    matrix: &FeatureMatrix,
    samples: &[usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<IsoNode>,
) -> usize {
    if depth >= limit || samples.len() <= 1 {
        nodes.push(IsoNode::Leaf {
            size: samples.len(),
        });
        return nodes.len() - 1;
    }
    let mut splittable = Vec::new();
    for col in 0..matrix.n_cols() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &i in samples {
            let v = matrix.rows[i][col];
            min = min.min(v);
            max = max.max(v);
        }
        if min < max {
            splittable.push((col, min, max));
        }
    }
    if splittable.is_empty() {
        nodes.push(IsoNode::Leaf {
            size: samples.len(),
        });
        return nodes.len() - 1;
    }
    let (col, min, max) = splittable[rng.random_range(0..splittable.len())];
    let thr = min + rng.random::<f64>() * (max - min);
    let (left_s, right_s): (Vec<usize>, Vec<usize>) =
        samples.iter().partition(|&&i| matrix.rows[i][col] < thr);
    let id = nodes.len();
    nodes.push(IsoNode::Leaf { size: 0 });
    let left = build(matrix, &left_s, depth + 1, limit, rng, nodes);
    let right = build(matrix, &right_s, depth + 1, limit, rng, nodes);
    nodes[id] = IsoNode::Split {
        col,
        thr,
        left,
        right,
    };
    id
}

pub fn train(matrix: &FeatureMatrix, seed: u64) -> ForestModel {
    let n = matrix.n_rows();
    let m = n.min(SUBSAMPLE).max(1);
    let limit = (m as f64).log2().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..N_TREES)
        .map(|_| {
            let samples: Vec<usize> = if n == 0 {
                Vec::new()
            } else {
                rand::seq::index::sample(&mut rng, n, m).into_vec()
            };
            let mut nodes = Vec::new();
            build(matrix, &samples, 0, limit, &mut rng, &mut nodes);
            IsoTree { nodes }
        })
        .collect();
    ForestModel {
        subsample: m,
        trees,
    }
}

fn path_length(tree: &IsoTree, row: &[f64]) -> f64 {
    let mut node = 0usize;
    let mut edges = 0.0f64;
    loop {
        match &tree.nodes[node] {
            IsoNode::Leaf { size } => return edges + average_path_length(*size),
            IsoNode::Split {
                col,
                thr,
                left,
                right,
            } => {
                node = if row[*col] < *thr { *left } else { *right };
                edges += 1.0;
            }
        }
    }
}

/// Anomaly score in `[0, 1]`; 0.5 marks the average-depth boundary.
pub fn scores(model: &ForestModel, matrix: &FeatureMatrix) -> Vec<f64> {
    let norm = average_path_length(model.subsample);
    matrix
        .rows
        .iter()
        .map(|row| {
            let mean: f64 = model
                .trees
                .iter()
                .map(|t| path_length(t, row))
                .sum::<f64>()
                / model.trees.len() as f64;
            if norm == 0.0 {
                0.5
            } else {
                2f64.powf(-mean / norm)
            }
        })
        .collect()
}

pub fn predict(model: &ForestModel, matrix: &FeatureMatrix) -> Vec<Label> {
    scores(model, matrix)
        .into_iter()
        .map(|s| {
            if s >= 0.5 {
                Label::Anomalous
            } else {
                Label::Normal
            }
        })
        .collect()
}

pub fn write(model: &ForestModel, out: &mut String) {
    out.push_str(&format!("subsample\t{}\n", model.subsample));
    for (i, tree) in model.trees.iter().enumerate() {
        out.push_str(&format!("tree\t{i}\n"));
        for (id, node) in tree.nodes.iter().enumerate() {
            match node {
                IsoNode::Leaf { size } => {
                    out.push_str(&format!("node\t{id}\tleaf\t{size}\n"));
                }
                IsoNode::Split {
                    col,
                    thr,
                    left,
                    right,
                } => {
                    out.push_str(&format!(
                        "node\t{id}\tsplit\t{col}\t{}\t{left}\t{right}\n",
                        artifact::fmt_f64(*thr)
                    ));
                }
            }
        }
    }
}

pub fn read(path: &Path, body: &[(usize, String)]) -> Result<ForestModel> {
    let mut subsample = None;
    let mut trees: Vec<IsoTree> = Vec::new();
    for (lineno, line) in body {
        let fields: Vec<&str> = line.split('\t').collect();
        let fail = |msg: &str| Error::parse(path, *lineno, msg);
        match fields.first() {
            Some(&"subsample") => {
                subsample = Some(
                    fields
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| fail("bad subsample"))?,
                );
            }
            Some(&"tree") => trees.push(IsoTree { nodes: Vec::new() }),
            Some(&"node") => {
                let tree = trees.last_mut().ok_or_else(|| fail("node before tree"))?;
                match fields.get(2) {
                    Some(&"leaf") => {
                        tree.nodes.push(IsoNode::Leaf {
                            size: fields
                                .get(3)
                                .and_then(|v| v.parse().ok())
                                .ok_or_else(|| fail("bad leaf size"))?,
                        });
                    }
                    Some(&"split") => {
                        if fields.len() != 7 {
                            return Err(fail("split line needs col, thr, left, right"));
                        }
                        tree.nodes.push(IsoNode::Split {
                            col: fields[3].parse().map_err(|_| fail("bad column"))?,
                            thr: artifact::parse_f64(path, *lineno, "threshold", fields[4])?,
                            left: fields[5].parse().map_err(|_| fail("bad left id"))?,
                            right: fields[6].parse().map_err(|_| fail("bad right id"))?,
                        });
                    }
                    _ => return Err(fail("expected leaf or split")),
                }
            }
            _ => return Err(fail("unexpected line")),
        }
    }
    Ok(ForestModel {
        subsample: subsample.ok_or_else(|| Error::parse(path, 0, "missing subsample"))?,
        trees,
    })
}
