//! CART decision tree with Gini impurity.
//!
//! Split candidates are midpoints between consecutive distinct feature
//! values; a candidate replaces the incumbent only on strictly greater
//! gain, so ties resolve to the lowest column index and lowest threshold.
//! That makes training invariant to appending duplicate columns. Leaves
//! predict their majority label, ties break to normal.

use std::path::Path;

use crate::artifact;
use crate::detectors::FeatureMatrix;
use crate::error::{Error, Result};
use crate::grouper::Label;

const MAX_DEPTH: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(Label),
    Split {
        col: usize,
        thr: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    /// Node 0 is the root; children are vector indexes.
    pub nodes: Vec<TreeNode>,
}

fn gini(anomalous: usize, normal: usize) -> f64 {
    let n = (anomalous + normal) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let pa = anomalous as f64 / n;
    let pn = normal as f64 / n;
    1.0 - pa * pa - pn * pn
}

fn majority(anomalous: usize, normal: usize) -> Label {
    if anomalous > normal {
        Label::Anomalous
    } else {
        Label::Normal
    }
}

struct Builder<'a> {
    matrix: &'a FeatureMatrix,
    labels: &'a [Label],
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn build(&mut self, samples: &[usize], depth: usize) -> usize {
        let anomalous = samples
            .iter()
            .filter(|&&i| self.labels[i] == Label::Anomalous)
            .count();
        let normal = samples.len() - anomalous;
        let parent_gini = gini(anomalous, normal);

        let make_leaf = |nodes: &mut Vec<TreeNode>| {
            nodes.push(TreeNode::Leaf(majority(anomalous, normal)));
            nodes.len() - 1
        };

        if depth >= MAX_DEPTH || samples.len() < 2 || parent_gini == 0.0 {
            return make_leaf(&mut self.nodes);
        }

        let mut best: Option<(f64, usize, f64)> = None;
        let n = samples.len() as f64;
        let mut column: Vec<(f64, Label)> = Vec::with_capacity(samples.len());
        for col in 0..self.matrix.n_cols() {
            column.clear();
            column.extend(
                samples
                    .iter()
                    .map(|&i| (self.matrix.rows[i][col], self.labels[i])),
            );
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_a = 0usize;
            let mut left_n = 0usize;
            for i in 0..column.len() - 1 {
                match column[i].1 {
                    Label::Anomalous => left_a += 1,
                    Label::Normal => left_n += 1,
                }
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let thr = (column[i].0 + column[i + 1].0) / 2.0;
                let left = (left_a + left_n) as f64;
                let right = n - left;
                let gain = parent_gini
                    - (left / n) * gini(left_a, left_n)
                    - (right / n) * gini(anomalous - left_a, normal - left_n);
                let better = match best {
                    None => gain > 0.0,
                    Some((bg, _, _)) => gain > bg,
                };
                if better {
                    best = Some((gain, col, thr));
                }
            }
        }

        let Some((_, col, thr)) = best else {
            return make_leaf(&mut self.nodes);
        };

        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.matrix.rows[i][col] <= thr);
        let id = self.nodes.len();
        // Placeholder replaced once both subtrees exist.
        self.nodes.push(TreeNode::Leaf(Label::Normal));
        let left = self.build(&left_samples, depth + 1);
        let right = self.build(&right_samples, depth + 1);
        self.nodes[id] = TreeNode::Split {
            col,
            thr,
            left,
            right,
        };
        id
    }
}

pub fn train(matrix: &FeatureMatrix, labels: &[Label]) -> TreeModel {
    let mut b = Builder {
        matrix,
        labels,
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..matrix.n_rows()).collect();
    b.build(&all, 0);
    TreeModel { nodes: b.nodes }
}

pub fn predict(model: &TreeModel, matrix: &FeatureMatrix) -> Vec<Label> {
    matrix
        .rows
        .iter()
        .map(|row| {
            let mut node = 0usize;
            loop {
                match &model.nodes[node] {
                    TreeNode::Leaf(label) => return *label,
                    TreeNode::Split {
                        col,
                        thr,
                        left,
                        right,
                    } => {
                        node = if row[*col] <= *thr { *left } else { *right };
                    }
                }
            }
        })
        .collect()
}

pub fn depth(model: &TreeModel) -> usize {
    fn walk(nodes: &[TreeNode], id: usize) -> usize {
        match &nodes[id] {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
        }
    }
    walk(&model.nodes, 0)
}

pub fn write(model: &TreeModel, out: &mut String) {
    for (id, node) in model.nodes.iter().enumerate() {
        match node {
            TreeNode::Leaf(label) => {
                out.push_str(&format!("node\t{id}\tleaf\t{label}\n"));
            }
            TreeNode::Split {
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

pub fn read(path: &Path, body: &[(usize, String)]) -> Result<TreeModel> {
    let mut nodes = Vec::new();
    for (lineno, line) in body {
        let fields: Vec<&str> = line.split('\t').collect();
        let fail = |msg: &str| Error::parse(path, *lineno, msg);
        if fields.first() != Some(&"node") {
            return Err(fail("expected node line"));
        }
        let id: usize = fields
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| fail("bad node id"))?;
        if id != nodes.len() {
            return Err(fail("node ids must be sequential"));
        }
        match fields.get(2) {
            Some(&"leaf") => {
                let label = fields
                    .get(3)
                    .and_then(|v| Label::from_artifact_str(v))
                    .ok_or_else(|| fail("bad leaf label"))?;
                nodes.push(TreeNode::Leaf(label));
            }
            Some(&"split") => {
                if fields.len() != 7 {
                    return Err(fail("split line needs col, thr, left, right"));
                }
                nodes.push(TreeNode::Split {
                    col: fields[3].parse().map_err(|_| fail("bad column"))?,
                    thr: artifact::parse_f64(path, *lineno, "threshold", fields[4])?,
                    left: fields[5].parse().map_err(|_| fail("bad left id"))?,
                    right: fields[6].parse().map_err(|_| fail("bad right id"))?,
                });
            }
            _ => return Err(fail("expected leaf or split")),
        }
    }
    if nodes.is_empty() {
        return Err(Error::parse(path, 0, "tree has no nodes"));
    }
    Ok(TreeModel { nodes })
}
