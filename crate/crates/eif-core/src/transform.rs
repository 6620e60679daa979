//! Transforms from each preference-structure type to a reciprocal matrix.
//!
//! Orderings map through the inverted, normalized rank substitution and the
//! exponential transfer `m_ij = 9^(s_i - s_j)`. Ratings map through utility
//! ratios `(u_i / u_j)^z`, then a reciprocity-preserving range normalization
//! `x -> x^(1/log_9(max))` that embeds the result into [1/9, 9] with the
//! largest entry landing exactly on 9. Pairwise comparisons only need their
//! lower triangle filled in.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prefs::{Ordering, PairwiseComparison, PrefError, Rating, ReciprocalMatrix, SCALE_MAX};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("exponent z must be positive and finite, got {0}")]
    InvalidExponent(f64),
    #[error("raw ratio {max} exceeds the comparison scale; enable normalization")]
    RangeExceeded { max: f64 },
    #[error(transparent)]
    Pref(#[from] PrefError),
}

/// Controls the rating transform: the ratio exponent `z` and whether the
/// result is rescaled into [1/9, 9].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub z: f64,
    pub normalize: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            z: 1.0,
            normalize: true,
        }
    }
}

impl TransformConfig {
    pub fn with_z(z: f64) -> Self {
        TransformConfig {
            z,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<(), TransformError> {
        if self.z <= 0.0 || !self.z.is_finite() {
            return Err(TransformError::InvalidExponent(self.z));
        }
        Ok(())
    }
}

/// Rank substitution `s_i = (n - o(i)) / (n - 1)`: 1 for the best-ranked
/// item, 0 for the worst, evenly spaced in between.
pub fn rank_substitution(ordering: &Ordering) -> Vec<f64> {
    let n = ordering.items().len();
    ordering
        .ranks()
        .iter()
        .map(|&o| (n - o) as f64 / (n - 1) as f64)
        .collect()
}

/// `m_ij = 9^(s_i - s_j)`. The output is fully consistent, and the
/// best-vs-worst entry is exactly 9.
pub fn ordering_to_ccm(ordering: &Ordering) -> ReciprocalMatrix {
    let s = rank_substitution(ordering);
    let n = s.len();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            upper.push(SCALE_MAX.powf(s[i] - s[j]));
        }
    }
    ReciprocalMatrix::from_upper(ordering.items().clone(), &upper)
        .expect("rank differences stay within one scale span")
}

/// `m_ij = (u_i / u_j)^z`, range-normalized when enabled. With normalization
/// off, ratios that leave [1/9, 9] are an error rather than a silently
/// invalid matrix.
pub fn rating_to_ccm(
    rating: &Rating,
    cfg: &TransformConfig,
) -> Result<ReciprocalMatrix, TransformError> {
    cfg.check()?;
    let u = rating.utilities();
    let n = u.len();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    let mut max_entry: f64 = 1.0;
    for i in 0..n {
        for j in (i + 1)..n {
            // log domain keeps x and 1/x symmetric before the range check
            let log_ratio = cfg.z * (u[i].ln() - u[j].ln());
            let v = log_ratio.exp();
            max_entry = max_entry.max(v.max(1.0 / v));
            upper.push(v);
        }
    }
    if cfg.normalize {
        normalize_upper(&mut upper, max_entry);
    } else if max_entry > SCALE_MAX + crate::prefs::RANGE_EPS {
        return Err(TransformError::RangeExceeded { max: max_entry });
    }
    Ok(ReciprocalMatrix::from_upper(rating.items().clone(), &upper)?)
}

/// Fills the lower triangle with reciprocals; the upper triangle is taken
/// verbatim, so intransitive comparisons survive untouched.
pub fn pairwise_to_ccm(pairwise: &PairwiseComparison) -> ReciprocalMatrix {
    ReciprocalMatrix::from_upper(pairwise.items().clone(), pairwise.upper())
        .expect("pairwise values are validated against the same scale")
}

/// Rescales a reciprocal matrix so its largest entry lands exactly on 9,
/// via `x -> x^(1/log_9(max))`. Identity for the all-ones matrix and for
/// matrices already spanning the full scale.
pub fn normalize_reciprocal(matrix: &ReciprocalMatrix) -> ReciprocalMatrix {
    let mut upper = matrix.upper();
    let max_entry = matrix
        .values()
        .iter()
        .cloned()
        .fold(1.0f64, f64::max);
    normalize_upper(&mut upper, max_entry);
    ReciprocalMatrix::from_upper(matrix.items().clone(), &upper)
        .expect("normalization maps entries into the scale")
}

/// Applies `x -> x^(1/log_9(max_entry))` in place. Skipped when
/// `max_entry <= 1`, where the exponent is undefined and the matrix can only
/// be all ones (reciprocity forces the maximum to at least 1).
pub(crate) fn normalize_upper(upper: &mut [f64], max_entry: f64) {
    if max_entry <= 1.0 {
        return;
    }
    let exponent = SCALE_MAX.ln() / max_entry.ln();
    for v in upper.iter_mut() {
        *v = v.powf(exponent);
    }
}
