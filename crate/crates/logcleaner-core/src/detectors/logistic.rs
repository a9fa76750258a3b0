//! Logistic regression via full-batch gradient descent.
//!
//! Weights start at zero and the gradient is averaged over all samples,
//! so training is fully deterministic and needs no seed. The L2 penalty
//! applies to the weights only, not the intercept.

use std::path::Path;

use crate::artifact;
use crate::detectors::FeatureMatrix;
use crate::error::{Error, Result};
use crate::grouper::Label;

const EPOCHS: usize = 500;
const LEARNING_RATE: f64 = 0.1;
const L2: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn train(matrix: &FeatureMatrix, labels: &[Label]) -> LogisticModel {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let mut w = vec![0.0f64; d];
    let mut b = 0.0f64;
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| if l == Label::Anomalous { 1.0 } else { 0.0 })
        .collect();
    for _ in 0..EPOCHS {
        let mut grad_w = vec![0.0f64; d];
        let mut grad_b = 0.0f64;
        for (row, &yi) in matrix.rows.iter().zip(&y) {
            let z = b + row.iter().zip(&w).map(|(x, wj)| x * wj).sum::<f64>();
            let err = sigmoid(z) - yi;
            for (g, x) in grad_w.iter_mut().zip(row) {
                *g += err * x;
            }
            grad_b += err;
        }
        let scale = 1.0 / n as f64;
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= LEARNING_RATE * (g * scale + L2 * *wj);
        }
        b -= LEARNING_RATE * grad_b * scale;
    }
    LogisticModel { weights: w, bias: b }
}

pub fn predict(model: &LogisticModel, matrix: &FeatureMatrix) -> Vec<Label> {
    matrix
        .rows
        .iter()
        .map(|row| {
            let z = model.bias
                + row
                    .iter()
                    .zip(&model.weights)
                    .map(|(x, w)| x * w)
                    .sum::<f64>();
            if z >= 0.0 {
                Label::Anomalous
            } else {
                Label::Normal
            }
        })
        .collect()
}

pub fn write(model: &LogisticModel, out: &mut String) {
    let ws: Vec<String> = model.weights.iter().map(|&w| artifact::fmt_f64(w)).collect();
    out.push_str(&format!("weights\t{}\n", ws.join(" ")));
    out.push_str(&format!("bias\t{}\n", artifact::fmt_f64(model.bias)));
}

pub fn read(path: &Path, body: &[(usize, String)], n_cols: usize) -> Result<LogisticModel> {
    let mut weights: Option<Vec<f64>> = None;
    let mut bias: Option<f64> = None;
    for (lineno, line) in body {
        if let Some(rest) = line.strip_prefix("weights\t") {
            weights = Some(
                rest.split_whitespace()
                    .map(|v| artifact::parse_f64(path, *lineno, "weight", v))
                    .collect::<Result<Vec<f64>>>()?,
            );
        } else if let Some(rest) = line.strip_prefix("bias\t") {
            bias = Some(artifact::parse_f64(path, *lineno, "bias", rest)?);
        }
    }
    let weights = weights.ok_or_else(|| Error::parse(path, 0, "missing weights line"))?;
    if weights.len() != n_cols {
        return Err(Error::WidthMismatch {
            expected: n_cols,
            got: weights.len(),
        });
    }
    Ok(LogisticModel {
        weights,
        bias: bias.ok_or_else(|| Error::parse(path, 0, "missing bias line"))?,
    })
}
