//! Entrywise aggregation of several reciprocal matrices into one collective
//! matrix.
//!
//! Only the unweighted geometric mean ships; `AggregationOperator` is the
//! extension point for other ordered-weighted-geometric variants. Any
//! operator plugged in here must be reciprocity-compatible
//! (`op(1/x...) = 1/op(x...)`), idempotent and bounded by min and max, or the
//! result stops being a valid reciprocal matrix.

use thiserror::Error;

use crate::prefs::{PrefError, ReciprocalMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("item sets differ, first divergence at `{label}`")]
    ItemSetMismatch { label: String },
    #[error(transparent)]
    Pref(#[from] PrefError),
}

/// Combines the corresponding entries of several matrices into one value.
pub trait AggregationOperator {
    fn name(&self) -> &'static str;
    /// `values` are strictly positive; the result must be too.
    fn combine(&self, values: &[f64]) -> f64;
}

/// The geometric mean, computed in log domain for stability near the scale
/// endpoints.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeometricMean;

impl AggregationOperator for GeometricMean {
    fn name(&self) -> &'static str {
        "geometric-mean"
    }

    fn combine(&self, values: &[f64]) -> f64 {
        if let [single] = values {
            return *single;
        }
        let sum: f64 = values.iter().map(|v| v.ln()).sum();
        (sum / values.len() as f64).exp()
    }
}

/// Entrywise combination of matrices over the same item set. The upper
/// triangle is aggregated and mirrored, so reciprocity of the output is
/// exact.
pub fn aggregate(
    matrices: &[ReciprocalMatrix],
    op: &dyn AggregationOperator,
) -> Result<ReciprocalMatrix, AggregateError> {
    let first = matrices.first().ok_or(AggregateError::EmptyInput)?;
    let items = first.items();
    for m in &matrices[1..] {
        if m.items() != items {
            let label = items
                .labels()
                .iter()
                .zip(m.items().labels())
                .find(|(a, b)| a != b)
                .map(|(a, _)| a.clone())
                .or_else(|| {
                    // same prefix, different length
                    let (longer, shorter) = if m.items().len() > items.len() {
                        (m.items(), items)
                    } else {
                        (items, m.items())
                    };
                    longer.labels().get(shorter.len()).cloned()
                })
                .unwrap_or_default();
            return Err(AggregateError::ItemSetMismatch { label });
        }
    }
    let n = items.len();
    let mut upper = Vec::with_capacity(n * (n - 1) / 2);
    let mut column = vec![0.0; matrices.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            for (k, m) in matrices.iter().enumerate() {
                column[k] = m.get(i, j);
            }
            upper.push(op.combine(&column));
        }
    }
    Ok(ReciprocalMatrix::from_upper(items.clone(), &upper)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::items::ItemSet;

    fn items(n: usize) -> ItemSet {
        ItemSet::new((0..n).map(|i| format!("e{i}")).collect()).unwrap()
    }

    fn m2(v: f64) -> ReciprocalMatrix {
        ReciprocalMatrix::from_upper(items(2), &[v]).unwrap()
    }

    #[test]
    fn reciprocal_pair_cancels() {
        let c = aggregate(&[m2(3.0), m2(1.0 / 3.0)], &GeometricMean).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nine_and_one_mean_three() {
        let c = aggregate(&[m2(9.0), m2(1.0)], &GeometricMean).unwrap();
        assert!((c.get(0, 1) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn idempotent_on_copies() {
        let m = ReciprocalMatrix::from_upper(items(3), &[2.0, 0.5, 7.0]).unwrap();
        let c = aggregate(&[m.clone(), m.clone(), m.clone()], &GeometricMean).unwrap();
        for (a, b) in c.values().iter().zip(m.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert_eq!(
            aggregate(&[], &GeometricMean).unwrap_err(),
            AggregateError::EmptyInput
        );
        let a = ReciprocalMatrix::from_upper(items(2), &[2.0]).unwrap();
        let b = ReciprocalMatrix::from_upper(
            ItemSet::from_strs(&["e0", "other"]).unwrap(),
            &[2.0],
        )
        .unwrap();
        assert_eq!(
            aggregate(&[a, b], &GeometricMean).unwrap_err(),
            AggregateError::ItemSetMismatch {
                label: "e1".into()
            }
        );
    }
}
