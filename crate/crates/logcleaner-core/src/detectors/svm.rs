//! Linear SVM trained with the Pegasos subgradient method.
//!
//! The bias is folded in as a constant-one feature appended to every row,
//! so the weight vector has one extra component. Sample order is shuffled
//! each epoch from a seeded generator; a fixed seed gives a bit-identical
//! model.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::artifact;
use crate::detectors::FeatureMatrix;
use crate::error::{Error, Result};
use crate::grouper::Label;

const LAMBDA: f64 = 1e-4;
const EPOCHS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Feature weights followed by the bias weight.
    pub weights: Vec<f64>,
}

pub fn train(matrix: &FeatureMatrix, labels: &[Label], seed: u64) -> SvmModel {
    let d = matrix.n_cols() + 1;
    let mut w = vec![0.0f64; d];
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| if l == Label::Anomalous { 1.0 } else { -1.0 })
        .collect();
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    for _ in 0..EPOCHS {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (LAMBDA * t as f64);
            let row = &matrix.rows[i];
            let margin = y[i] * (w[d - 1] + row.iter().zip(&w).map(|(x, wj)| x * wj).sum::<f64>());
            let decay = 1.0 - eta * LAMBDA;
            for wj in w.iter_mut() {
                *wj *= decay;
            }
            if margin < 1.0 {
                let step = eta * y[i];
                for (wj, x) in w.iter_mut().zip(row) {
                    *wj += step * x;
                }
                w[d - 1] += step;
            }
        }
    }
    SvmModel { weights: w }
}

pub fn predict(model: &SvmModel, matrix: &FeatureMatrix) -> Vec<Label> {
    let d = model.weights.len();
    matrix
        .rows
        .iter()
        .map(|row| {
            let z = model.weights[d - 1]
                + row
                    .iter()
                    .zip(&model.weights)
                    .map(|(x, w)| x * w)
                    .sum::<f64>();
            if z > 0.0 {
                Label::Anomalous
            } else {
                Label::Normal
            }
        })
        .collect()
}

pub fn write(model: &SvmModel, out: &mut String) {
    let ws: Vec<String> = model.weights.iter().map(|&w| artifact::fmt_f64(w)).collect();
    out.push_str(&format!("weights\t{}\n", ws.join(" ")));
}

pub fn read(path: &Path, body: &[(usize, String)], n_cols: usize) -> Result<SvmModel> {
    for (lineno, line) in body {
        if let Some(rest) = line.strip_prefix("weights\t") {
            let weights = rest
                .split_whitespace()
                .map(|v| artifact::parse_f64(path, *lineno, "weight", v))
                .collect::<Result<Vec<f64>>>()?;
            if weights.len() != n_cols + 1 {
                return Err(Error::WidthMismatch {
                    expected: n_cols + 1,
                    got: weights.len(),
                });
            }
            return Ok(SvmModel { weights });
        }
    }
    Err(Error::parse(path, 0, "missing weights line"))
}
