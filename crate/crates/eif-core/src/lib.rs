//! Event impact factors from heterogeneous preference structures.
//!
//! Orderings, ratings and pairwise comparisons over the same items are each
//! transformed into multiplicative-reciprocal matrices with entries in
//! [1/9, 9], combined entrywise by a geometric mean, and scored into
//! normalized per-item impact factors. On top of that sits a two-view
//! pipeline for operating-room scenarios: meta-components over workflow
//! phases and human roles are expanded onto the phase-by-role event grid,
//! yielding an impact look-up table and a call-gating policy.
//!
//! Start with [`scenario::parse_scenario`] and [`pipeline::run_pipeline`],
//! or use the building blocks in [`transform`], [`aggregate`] and
//! [`impact`] directly.

pub mod aggregate;
pub mod impact;
pub mod items;
pub mod pipeline;
pub mod prefs;
pub mod report;
pub mod scenario;
pub mod transform;

pub use aggregate::{aggregate as aggregate_matrices, AggregationOperator, GeometricMean};
pub use impact::{impact_vector, rank_events, select_best, ImpactVector};
pub use items::ItemSet;
pub use pipeline::{
    compute_impact_table, derive_rating_from_orderings, expand_meta_component, gate_call,
    run_pipeline, EventGrid, GateAction, GateDecision, ImpactTable, MetaComponent, MetaTarget,
    View,
};
pub use prefs::{Ordering, PairwiseComparison, Rating, ReciprocalMatrix};
pub use scenario::{parse_scenario, Scenario};
pub use transform::{
    normalize_reciprocal, ordering_to_ccm, pairwise_to_ccm, rating_to_ccm, TransformConfig,
};
