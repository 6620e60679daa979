//! Randomized invariants beyond the acceptance gate: equivariance under
//! relabeling, rank preservation at the matrix level, expansion structure
//! and serialization round-trips.

use proptest::prelude::*;

use eif_core::aggregate::GeometricMean;
use eif_core::items::ItemSet;
use eif_core::pipeline::{
    expand_meta_component, Ccf, CcfData, EventGrid, MetaComponent, MetaTarget, View,
};
use eif_core::prefs::{Ordering, Rating, ReciprocalMatrix};
use eif_core::transform::{ordering_to_ccm, rating_to_ccm, TransformConfig};

fn items(n: usize) -> ItemSet {
    ItemSet::new((0..n).map(|i| format!("e{i}")).collect()).unwrap()
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((1..=n).collect::<Vec<usize>>()).prop_shuffle()
}

proptest! {
    /// Relabeling the items permutes rows and columns of the matrix, nothing
    /// else.
    #[test]
    fn ordering_transform_is_permutation_equivariant(
        (ranks, perm) in (3..=8usize).prop_flat_map(|n| (permutation(n), permutation(n)))
    ) {
        let n = ranks.len();
        // perm[k] is 1-based: item k moves to position perm[k] - 1
        let mut moved = vec![0usize; n];
        for k in 0..n {
            moved[perm[k] - 1] = ranks[k];
        }
        let direct = ordering_to_ccm(&Ordering::new(items(n), ranks.clone()).unwrap());
        let relabeled = ordering_to_ccm(&Ordering::new(items(n), moved).unwrap());
        for i in 0..n {
            for j in 0..n {
                let want = direct.get(i, j);
                let got = relabeled.get(perm[i] - 1, perm[j] - 1);
                prop_assert!((got - want).abs() < 1e-12);
            }
        }
    }

    /// A higher utility means an above-one entry against every lower one,
    /// before and after normalization.
    #[test]
    fn rating_entries_point_toward_the_higher_utility(
        u in (2..=8usize).prop_flat_map(|n| prop::collection::vec(0.1f64..100.0, n))
    ) {
        let rating = Rating::new(items(u.len()), u.clone()).unwrap();
        let m = rating_to_ccm(&rating, &TransformConfig::default()).unwrap();
        for i in 0..u.len() {
            for j in 0..u.len() {
                if u[i] > u[j] * (1.0 + 1e-9) {
                    prop_assert!(m.get(i, j) > 1.0);
                } else if u[j] > u[i] * (1.0 + 1e-9) {
                    prop_assert!(m.get(i, j) < 1.0);
                }
            }
        }
    }

    /// Expanding a consistent view matrix keeps the grid matrix consistent.
    #[test]
    fn expansion_preserves_consistency(
        (p, q, ranks) in (2..=4usize, 2..=4usize)
            .prop_flat_map(|(p, q)| (Just(p), Just(q), permutation(p)))
    ) {
        let phase_labels: Vec<String> = (0..p).map(|i| format!("P{i}")).collect();
        let role_labels: Vec<String> = (0..q).map(|i| format!("R{i}")).collect();
        let grid = EventGrid::new(
            View::new("phases", phase_labels.clone()).unwrap(),
            View::new("roles", role_labels).unwrap(),
        )
        .unwrap();
        let ordering = Ordering::new(ItemSet::new(phase_labels).unwrap(), ranks).unwrap();
        let meta = MetaComponent {
            name: "w".into(),
            target: MetaTarget::Phases,
            ccfs: vec![Ccf {
                name: "o".into(),
                data: CcfData::Ordering(ordering),
            }],
            cross_z: 1.0,
        };
        let e = expand_meta_component(&meta, &grid, &GeometricMean).unwrap();
        prop_assert!(e.consistency_defect() < 1e-8);
        // events sharing a phase are indistinguishable to a phase-only meta
        for phase in 0..p {
            for a in 0..q {
                for b in 0..q {
                    prop_assert_eq!(e.get(phase * q + a, phase * q + b), 1.0);
                }
            }
        }
    }

    /// JSON round-trips reproduce the matrix bit for bit.
    #[test]
    fn matrix_serialization_round_trips(
        upper in (2..=6usize)
            .prop_flat_map(|n| prop::collection::vec((1.0f64 / 9.0)..=9.0, n * (n - 1) / 2))
    ) {
        let n = ((1.0 + (1.0 + 8.0 * upper.len() as f64).sqrt()) / 2.0).round() as usize;
        let m = ReciprocalMatrix::from_upper(items(n), &upper).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: ReciprocalMatrix = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.values(), m.values());
        prop_assert_eq!(back.items(), m.items());
    }
}
