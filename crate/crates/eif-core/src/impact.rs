//! Per-item impact scores from a collective reciprocal matrix.
//!
//! The raw score of item `i` is `1/2 * (1 + log_9 g_i)` where `g_i` is the
//! geometric mean of row `i` (diagonal included). Entries live in [1/9, 9],
//! so raw scores land in [0, 1]. Dividing by their sum yields the normalized
//! impact factors, which sum to one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::items::ItemSet;
use crate::prefs::{ReciprocalMatrix, SCALE_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImpactError {
    #[error("all raw impact values are zero; nothing to normalize")]
    DegenerateImpact,
    #[error("selection size {s} outside 1..={n}")]
    SOutOfRange { s: usize, n: usize },
}

/// Raw and normalized impact scores over one item set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactVector {
    items: ItemSet,
    raw: Vec<f64>,
    normalized: Vec<f64>,
}

impl ImpactVector {
    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    /// Row-wise scores in [0, 1], before normalization.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Impact factors: raw scores divided by their sum.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }
}

/// Scores every item of the matrix. `DegenerateImpact` is defensive: for
/// `n >= 2` reciprocity forces the product of all entries to 1, so not every
/// row mean can sit at the lower bound.
pub fn impact_vector(matrix: &ReciprocalMatrix) -> Result<ImpactVector, ImpactError> {
    let n = matrix.n();
    let ln_scale = SCALE_MAX.ln();
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let mean_log: f64 =
            (0..n).map(|j| matrix.get(i, j).ln()).sum::<f64>() / n as f64;
        let value = 0.5 * (1.0 + mean_log / ln_scale);
        raw.push(value.clamp(0.0, 1.0));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(ImpactError::DegenerateImpact);
    }
    let normalized = raw.iter().map(|v| v / sum).collect();
    Ok(ImpactVector {
        items: matrix.items().clone(),
        raw,
        normalized,
    })
}

/// All items with their impact factors, best first. Ties keep the item-set
/// order, so the result is deterministic.
pub fn rank_events(vector: &ImpactVector) -> Vec<(String, f64)> {
    let mut order: Vec<usize> = (0..vector.items.len()).collect();
    order.sort_by(|&a, &b| {
        vector.normalized[b]
            .partial_cmp(&vector.normalized[a])
            .expect("impact factors are finite")
    });
    order
        .into_iter()
        .map(|i| (vector.items.label(i).to_string(), vector.normalized[i]))
        .collect()
}

/// Labels of the `s` highest-impact items.
pub fn select_best(vector: &ImpactVector, s: usize) -> Result<Vec<String>, ImpactError> {
    let n = vector.items.len();
    if s < 1 || s > n {
        return Err(ImpactError::SOutOfRange { s, n });
    }
    Ok(rank_events(vector)
        .into_iter()
        .take(s)
        .map(|(label, _)| label)
        .collect())
}
