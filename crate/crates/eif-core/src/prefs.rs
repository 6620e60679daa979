//! The three preference-structure types and the reciprocal matrix they all
//! transform into.
//!
//! An `Ordering` ranks items strictly, a `Rating` assigns positive utilities
//! (ties allowed), and a `PairwiseComparison` gives upper-triangular relative
//! judgments on the 9-step comparison scale. A `ReciprocalMatrix` is the
//! common intermediate: multiplicative-reciprocal, entries in [1/9, 9].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::items::{ItemSet, ItemSetError};

/// Upper bound of the comparison scale; the lower bound is its reciprocal.
pub const SCALE_MAX: f64 = 9.0;
/// Absolute slack admitted on the [1/9, 9] range check.
pub const RANGE_EPS: f64 = 1e-9;
/// Relative tolerance for the reciprocity check `m_ij * m_ji = 1`.
pub const RECIPROCITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrefError {
    #[error(transparent)]
    Items(#[from] ItemSetError),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("duplicate rank {rank} for `{label}`")]
    DuplicateRank { label: String, rank: usize },
    #[error("rank {rank} for `{label}` outside 1..={n}")]
    RankOutOfRange { label: String, rank: usize, n: usize },
    #[error("non-positive utility {value} for `{label}`")]
    NonPositiveUtility { label: String, value: f64 },
    #[error("comparison value {value} outside [1/9, 9]")]
    ValueOutOfScale { value: f64 },
    #[error("matrix entry {value} at ({row}, {col}) outside [1/9, 9]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("diagonal entry {value} at ({index}, {index}) is not 1")]
    DiagonalNotOne { index: usize, value: f64 },
}

/// A strict total order: `ranks[i]` is the place of item `i`, 1 being best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    items: ItemSet,
    ranks: Vec<usize>,
}

impl Ordering {
    /// Ranks must form a permutation of `1..=n`; ties are rejected.
    pub fn new(items: ItemSet, ranks: Vec<usize>) -> Result<Self, PrefError> {
        let n = items.len();
        if ranks.len() != n {
            return Err(PrefError::LengthMismatch {
                expected: n,
                got: ranks.len(),
            });
        }
        let mut seen = vec![false; n + 1];
        for (i, &rank) in ranks.iter().enumerate() {
            if rank < 1 || rank > n {
                return Err(PrefError::RankOutOfRange {
                    label: items.label(i).to_string(),
                    rank,
                    n,
                });
            }
            if seen[rank] {
                return Err(PrefError::DuplicateRank {
                    label: items.label(i).to_string(),
                    rank,
                });
            }
            seen[rank] = true;
        }
        Ok(Ordering { items, ranks })
    }

    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// A positive utility per item; equal utilities express ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    items: ItemSet,
    utilities: Vec<f64>,
}

impl Rating {
    pub fn new(items: ItemSet, utilities: Vec<f64>) -> Result<Self, PrefError> {
        if utilities.len() != items.len() {
            return Err(PrefError::LengthMismatch {
                expected: items.len(),
                got: utilities.len(),
            });
        }
        for (i, &u) in utilities.iter().enumerate() {
            if u <= 0.0 || !u.is_finite() {
                return Err(PrefError::NonPositiveUtility {
                    label: items.label(i).to_string(),
                    value: u,
                });
            }
        }
        Ok(Rating { items, utilities })
    }

    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }
}

/// The `(n-1)n/2` strictly-upper-triangular judgments, row-wise, each within
/// the 9-step scale. The lower triangle is never stored; it is always derived
/// from reciprocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    items: ItemSet,
    upper: Vec<f64>,
}

impl PairwiseComparison {
    pub fn new(items: ItemSet, upper: Vec<f64>) -> Result<Self, PrefError> {
        let n = items.len();
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(PrefError::LengthMismatch {
                expected,
                got: upper.len(),
            });
        }
        for &v in &upper {
            let scale = (1.0 / SCALE_MAX - RANGE_EPS)..=(SCALE_MAX + RANGE_EPS);
            if !v.is_finite() || !scale.contains(&v) {
                return Err(PrefError::ValueOutOfScale { value: v });
            }
        }
        Ok(PairwiseComparison { items, upper })
    }

    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// An `n x n` multiplicative-reciprocal matrix with entries in [1/9, 9].
///
/// Both triangles are materialized for cheap row access, but the lower one is
/// always mirrored from the upper at construction time, so reciprocity holds
/// exactly rather than within rounding of two independent computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalMatrix {
    items: ItemSet,
    values: Vec<f64>,
}

impl ReciprocalMatrix {
    /// Builds from the strict upper triangle (row-wise); diagonal is 1 and
    /// the lower triangle is the entrywise reciprocal.
    pub fn from_upper(items: ItemSet, upper: &[f64]) -> Result<Self, PrefError> {
        let n = items.len();
        let expected = n * (n - 1) / 2;
        if upper.len() != expected {
            return Err(PrefError::LengthMismatch {
                expected,
                got: upper.len(),
            });
        }
        let mut values = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = snap_to_range(upper[k]).ok_or(PrefError::EntryOutOfRange {
                    row: i,
                    col: j,
                    value: upper[k],
                })?;
                values[i * n + j] = v;
                values[j * n + i] = 1.0 / v;
                k += 1;
            }
        }
        Ok(ReciprocalMatrix { items, values })
    }

    /// Builds from the upper triangle including the diagonal (row-wise), the
    /// on-disk layout. Diagonal entries must equal 1.
    pub fn from_upper_with_diag(items: ItemSet, upper: &[f64]) -> Result<Self, PrefError> {
        let n = items.len();
        let expected = n * (n + 1) / 2;
        if upper.len() != expected {
            return Err(PrefError::LengthMismatch {
                expected,
                got: upper.len(),
            });
        }
        let mut strict = Vec::with_capacity(n * (n - 1) / 2);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                if i == j {
                    if (upper[k] - 1.0).abs() > RECIPROCITY_TOL {
                        return Err(PrefError::DiagonalNotOne {
                            index: i,
                            value: upper[k],
                        });
                    }
                } else {
                    strict.push(upper[k]);
                }
                k += 1;
            }
        }
        Self::from_upper(items, &strict)
    }

    pub fn items(&self) -> &ItemSet {
        &self.items
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Strict upper triangle, row-wise.
    pub fn upper(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Upper triangle including the diagonal, row-wise (the on-disk layout).
    pub fn upper_with_diag(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Largest deviation of `m_ij * m_jk / m_ik` from 1 over all triples.
    /// Zero (up to rounding) for fully consistent matrices.
    pub fn consistency_defect(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let d = (self.get(i, j) * self.get(j, k) / self.get(i, k) - 1.0).abs();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }
}

/// Accepts values inside [1/9, 9] up to `RANGE_EPS`, snapping tiny rounding
/// excursions back onto the bound. Returns `None` for genuine violations.
fn snap_to_range(v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    let lo = 1.0 / SCALE_MAX;
    if v > SCALE_MAX {
        if v <= SCALE_MAX + RANGE_EPS {
            return Some(SCALE_MAX);
        }
        return None;
    }
    if v < lo {
        if v >= lo - RANGE_EPS {
            return Some(lo);
        }
        return None;
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> ItemSet {
        ItemSet::new((0..n).map(|i| format!("e{i}")).collect()).unwrap()
    }

    #[test]
    fn ordering_accepts_permutation() {
        let troc =
            ItemSet::from_strs(&["Troc", "Prep", "Clip", "Det", "Retr"]).unwrap();
        let o = Ordering::new(troc, vec![1, 4, 2, 5, 3]).unwrap();
        assert_eq!(o.ranks(), &[1, 4, 2, 5, 3]);
        // minimal n
        Ordering::new(items(2), vec![1, 2]).unwrap();
    }

    #[test]
    fn ordering_rejects_ties_and_bad_ranks() {
        let err = Ordering::new(items(5), vec![1, 2, 2, 4, 5]).unwrap_err();
        assert_eq!(
            err,
            PrefError::DuplicateRank {
                label: "e2".into(),
                rank: 2
            }
        );
        let err = Ordering::new(items(3), vec![1, 2, 4]).unwrap_err();
        assert!(matches!(err, PrefError::RankOutOfRange { rank: 4, n: 3, .. }));
        let err = Ordering::new(items(3), vec![1, 2]).unwrap_err();
        assert!(matches!(err, PrefError::LengthMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn rating_accepts_published_utilities() {
        let phases = items(7);
        let r = Rating::new(
            phases,
            vec![179.0, 419.0, 390.0, 562.0, 390.0, 337.0, 172.0],
        )
        .unwrap();
        assert_eq!(r.utilities().len(), 7);
        Rating::new(items(5), vec![30.0, 1.0, 1.0, 5.0, 10.0]).unwrap();
    }

    #[test]
    fn rating_rejects_zero_utility() {
        let err = Rating::new(items(3), vec![5.0, 0.0, 3.0]).unwrap_err();
        assert_eq!(
            err,
            PrefError::NonPositiveUtility {
                label: "e1".into(),
                value: 0.0
            }
        );
    }

    #[test]
    fn pairwise_checks_scale_and_length() {
        PairwiseComparison::new(items(3), vec![3.0, 9.0, 1.0 / 3.0]).unwrap();
        let err =
            PairwiseComparison::new(items(3), vec![3.0, 10.0, 1.0 / 3.0]).unwrap_err();
        assert_eq!(err, PrefError::ValueOutOfScale { value: 10.0 });
        // indifference pair at minimal n
        PairwiseComparison::new(items(2), vec![1.0]).unwrap();
        let err = PairwiseComparison::new(items(3), vec![1.0]).unwrap_err();
        assert!(matches!(err, PrefError::LengthMismatch { expected: 3, got: 1 }));
    }

    #[test]
    fn matrix_mirrors_reciprocals() {
        let m = ReciprocalMatrix::from_upper(items(3), &[3.0, 9.0, 0.5]).unwrap();
        assert_eq!(m.get(1, 0), 1.0 / 3.0);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(2, 1), 2.0);
        assert_eq!(m.upper(), vec![3.0, 9.0, 0.5]);
    }

    #[test]
    fn matrix_rejects_out_of_range() {
        let err = ReciprocalMatrix::from_upper(items(2), &[9.5]).unwrap_err();
        assert!(matches!(err, PrefError::EntryOutOfRange { .. }));
        // a hair over the bound snaps back onto it
        let m = ReciprocalMatrix::from_upper(items(2), &[9.0 + 1e-12]).unwrap();
        assert_eq!(m.get(0, 1), 9.0);
    }

    #[test]
    fn matrix_diag_roundtrip() {
        let m = ReciprocalMatrix::from_upper(items(3), &[2.0, 4.0, 2.0]).unwrap();
        let packed = m.upper_with_diag();
        let back = ReciprocalMatrix::from_upper_with_diag(items(3), &packed).unwrap();
        assert_eq!(m, back);
        let err =
            ReciprocalMatrix::from_upper_with_diag(items(2), &[1.0, 3.0, 2.0]).unwrap_err();
        assert!(matches!(err, PrefError::DiagonalNotOne { index: 1, .. }));
    }
}
