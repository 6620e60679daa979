//! The two-view pipeline: meta-components over workflow phases and human
//! roles, their expansion onto the phase-by-role event grid, the collective
//! matrix, the impact look-up table and the call-gating policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{aggregate, AggregationOperator};
use crate::impact::{impact_vector, ImpactError, ImpactVector};
use crate::items::ItemSet;
use crate::prefs::{Ordering, PairwiseComparison, Rating, ReciprocalMatrix};
use crate::scenario::Scenario;
use crate::transform::{
    ordering_to_ccm, pairwise_to_ccm, rating_to_ccm, rank_substitution, TransformConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("meta `{meta}`, ccf `{ccf}`: {message}")]
    Ccf {
        meta: String,
        ccf: String,
        message: String,
    },
    #[error("meta `{meta}`: {message}")]
    Meta { meta: String, message: String },
    #[error("item set mismatch: {0}")]
    ItemSetMismatch(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("threshold fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("event grid needs at least 2 events, got {0}")]
    GridTooSmall(usize),
    #[error("table cells sum to {0}, expected 1")]
    BadTableMass(f64),
    #[error(transparent)]
    Impact(#[from] ImpactError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViewError {
    #[error("view name is empty")]
    EmptyName,
    #[error("view `{0}` has no elements")]
    NoElements(String),
    #[error("view `{view}` repeats label `{label}`")]
    DuplicateLabel { view: String, label: String },
    #[error("view `{0}` contains an empty label")]
    EmptyLabel(String),
}

/// One perspective on the domain, e.g. workflow phases or human roles.
/// A view may hold a single element (a degenerate axis of the grid);
/// preference structures over it then simply cannot exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct View {
    name: String,
    labels: Vec<String>,
}

impl View {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Self, ViewError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ViewError::EmptyName);
        }
        if labels.is_empty() {
            return Err(ViewError::NoElements(name));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(ViewError::EmptyLabel(name));
            }
            if labels[..i].contains(label) {
                return Err(ViewError::DuplicateLabel {
                    view: name,
                    label: label.clone(),
                });
            }
        }
        Ok(View { name, labels })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The view's labels as an `ItemSet`, for building preference structures
    /// over it. Fails for single-element views.
    pub fn item_set(&self) -> Result<ItemSet, PipelineError> {
        ItemSet::new(self.labels.clone()).map_err(|e| PipelineError::Meta {
            meta: self.name.clone(),
            message: e.to_string(),
        })
    }
}

/// The cross product of a phase view (size p) and a role view (size q):
/// one virtual event per combination, phase-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGrid {
    phases: View,
    roles: View,
    events: ItemSet,
}

impl EventGrid {
    pub fn new(phases: View, roles: View) -> Result<Self, PipelineError> {
        let count = phases.len() * roles.len();
        if count < 2 {
            return Err(PipelineError::GridTooSmall(count));
        }
        let mut labels = Vec::with_capacity(count);
        for phase in phases.labels() {
            for role in roles.labels() {
                labels.push(format!("{phase}\u{d7}{role}"));
            }
        }
        let events = ItemSet::new(labels)
            .map_err(|e| PipelineError::ItemSetMismatch(e.to_string()))?;
        Ok(EventGrid {
            phases,
            roles,
            events,
        })
    }

    pub fn phases(&self) -> &View {
        &self.phases
    }

    pub fn roles(&self) -> &View {
        &self.roles
    }

    pub fn events(&self) -> &ItemSet {
        &self.events
    }

    pub fn p(&self) -> usize {
        self.phases.len()
    }

    pub fn q(&self) -> usize {
        self.roles.len()
    }

    pub fn event_index(&self, phase: usize, role: usize) -> usize {
        phase * self.q() + role
    }
}

/// One tagged characteristic function inside a meta-component.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccf {
    pub name: String,
    pub data: CcfData,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CcfData {
    Ordering(Ordering),
    Rating(Rating, TransformConfig),
    Pairwise(PairwiseComparison),
    /// A prebuilt matrix (e.g. an already aggregated survey), used directly.
    Matrix(ReciprocalMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaTarget {
    Phases,
    Roles,
    /// Scores phase-role combinations directly, via one role ordering per
    /// phase.
    Grid,
}

/// A named bundle of characteristic functions over one target, plus the rule
/// for expanding it onto the event grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaComponent {
    pub name: String,
    pub target: MetaTarget,
    /// For `Grid` targets every entry is an `Ordering` named by its phase,
    /// stored in phase order.
    pub ccfs: Vec<Ccf>,
    /// Ratio exponent for the utility table of a `Grid` target.
    pub cross_z: f64,
}

impl MetaComponent {
    fn ccf_error(&self, ccf: &Ccf, message: impl Into<String>) -> PipelineError {
        PipelineError::Ccf {
            meta: self.name.clone(),
            ccf: ccf.name.clone(),
            message: message.into(),
        }
    }

    /// Transforms one CCF to its matrix.
    pub fn ccf_matrix(&self, ccf: &Ccf) -> Result<ReciprocalMatrix, PipelineError> {
        match &ccf.data {
            CcfData::Ordering(o) => Ok(ordering_to_ccm(o)),
            CcfData::Rating(r, cfg) => {
                rating_to_ccm(r, cfg).map_err(|e| self.ccf_error(ccf, e.to_string()))
            }
            CcfData::Pairwise(p) => Ok(pairwise_to_ccm(p)),
            CcfData::Matrix(m) => Ok(m.clone()),
        }
    }

    /// The meta-component's collective matrix over its own view. Only
    /// meaningful for `Phases` / `Roles` targets.
    pub fn view_matrix(
        &self,
        op: &dyn AggregationOperator,
    ) -> Result<ReciprocalMatrix, PipelineError> {
        let matrices: Vec<ReciprocalMatrix> = self
            .ccfs
            .iter()
            .map(|c| self.ccf_matrix(c))
            .collect::<Result<_, _>>()?;
        aggregate(&matrices, op).map_err(|e| PipelineError::Meta {
            meta: self.name.clone(),
            message: e.to_string(),
        })
    }

    fn per_phase_orderings(&self) -> Vec<&Ordering> {
        self.ccfs
            .iter()
            .filter_map(|c| match &c.data {
                CcfData::Ordering(o) => Some(o),
                _ => None,
            })
            .collect()
    }
}

/// Maps each phase's role ordering to per-role utilities on a fixed scale:
/// the rank substitution `s` is shifted to `(s + 3/4) / 2`, spanning
/// [3/8, 7/8] with the best rank at 7/8. Values are positive, preserve every
/// ordering, and are comparable across phases.
pub fn derive_rating_from_orderings(
    per_phase: &[Ordering],
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let first = per_phase
        .first()
        .ok_or_else(|| PipelineError::ItemSetMismatch("no orderings given".into()))?;
    let items = first.items();
    for o in per_phase {
        if o.items() != items {
            return Err(PipelineError::ItemSetMismatch(format!(
                "orderings disagree on their item set (`{}`)",
                o.items().label(0)
            )));
        }
    }
    Ok(per_phase
        .iter()
        .map(|o| {
            rank_substitution(o)
                .into_iter()
                .map(|s| 0.5 * (s + 0.75))
                .collect()
        })
        .collect())
}

/// Expands a meta-component onto the grid. Phase-only and role-only
/// components compare two events solely through their own coordinate, so
/// same-coordinate pairs come out at 1. Grid components compare via utility
/// ratios from the per-phase ordering table, range-normalized.
pub fn expand_meta_component(
    meta: &MetaComponent,
    grid: &EventGrid,
    op: &dyn AggregationOperator,
) -> Result<ReciprocalMatrix, PipelineError> {
    let events = grid.events().clone();
    let count = events.len();
    let q = grid.q();
    match meta.target {
        MetaTarget::Phases | MetaTarget::Roles => {
            let m = meta.view_matrix(op)?;
            let expected = match meta.target {
                MetaTarget::Phases => grid.phases().labels(),
                _ => grid.roles().labels(),
            };
            if m.items().labels() != expected {
                return Err(PipelineError::ItemSetMismatch(format!(
                    "meta `{}` is not over the grid's {} view",
                    meta.name,
                    match meta.target {
                        MetaTarget::Phases => "phase",
                        _ => "role",
                    }
                )));
            }
            let coord = |event: usize| match meta.target {
                MetaTarget::Phases => event / q,
                _ => event % q,
            };
            let mut upper = Vec::with_capacity(count * (count - 1) / 2);
            for a in 0..count {
                for b in (a + 1)..count {
                    upper.push(m.get(coord(a), coord(b)));
                }
            }
            ReciprocalMatrix::from_upper(events, &upper)
                .map_err(|e| PipelineError::ItemSetMismatch(e.to_string()))
        }
        MetaTarget::Grid => {
            let orderings = meta.per_phase_orderings();
            if orderings.len() != grid.p() {
                return Err(PipelineError::Meta {
                    meta: meta.name.clone(),
                    message: format!(
                        "need one role ordering per phase ({} phases, {} orderings)",
                        grid.p(),
                        orderings.len()
                    ),
                });
            }
            let table = derive_rating_from_orderings(
                &orderings.iter().map(|&o| o.clone()).collect::<Vec<_>>(),
            )?;
            if table[0].len() != q {
                return Err(PipelineError::ItemSetMismatch(format!(
                    "meta `{}` orders {} roles but the grid has {}",
                    meta.name,
                    table[0].len(),
                    q
                )));
            }
            let utilities: Vec<f64> = table.into_iter().flatten().collect();
            let rating = Rating::new(events, utilities).map_err(|e| PipelineError::Meta {
                meta: meta.name.clone(),
                message: e.to_string(),
            })?;
            rating_to_ccm(&rating, &TransformConfig::with_z(meta.cross_z)).map_err(|e| {
                PipelineError::Meta {
                    meta: meta.name.clone(),
                    message: e.to_string(),
                }
            })
        }
    }
}

/// The impact factors reshaped to roles-by-phases for lookup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactTable {
    roles: Vec<String>,
    phases: Vec<String>,
    /// Row-major, `cells[role * p + phase]`; sums to 1.
    cells: Vec<f64>,
}

impl ImpactTable {
    pub fn new(
        roles: Vec<String>,
        phases: Vec<String>,
        cells: Vec<f64>,
    ) -> Result<Self, PipelineError> {
        if cells.len() != roles.len() * phases.len() {
            return Err(PipelineError::ItemSetMismatch(format!(
                "{} cells for a {}x{} table",
                cells.len(),
                roles.len(),
                phases.len()
            )));
        }
        let sum: f64 = cells.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PipelineError::BadTableMass(sum));
        }
        Ok(ImpactTable {
            roles,
            phases,
            cells,
        })
    }

    fn from_impact(grid: &EventGrid, impact: &ImpactVector) -> Self {
        let (p, q) = (grid.p(), grid.q());
        let mut cells = vec![0.0; p * q];
        for phase in 0..p {
            for role in 0..q {
                cells[role * p + phase] = impact.normalized()[grid.event_index(phase, role)];
            }
        }
        ImpactTable {
            roles: grid.roles().labels().to_vec(),
            phases: grid.phases().labels().to_vec(),
            cells,
        }
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn phases(&self) -> &[String] {
        &self.phases
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn cell(&self, role: usize, phase: usize) -> f64 {
        self.cells[role * self.phases.len() + phase]
    }

    pub fn get(&self, role: &str, phase: &str) -> Option<f64> {
        let r = self.roles.iter().position(|l| l == role)?;
        let p = self.phases.iter().position(|l| l == phase)?;
        Some(self.cell(r, p))
    }

    pub fn max_cell(&self) -> f64 {
        self.cells.iter().cloned().fold(f64::MIN, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateAction {
    Accept,
    Reject,
}

/// Whether an interruption aimed at `role` during `phase` goes through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub role: String,
    pub phase: String,
    pub eif: f64,
    pub threshold: f64,
    pub threshold_fraction: f64,
    pub action: GateAction,
}

/// Rejects when the cell's impact factor strictly exceeds
/// `threshold_fraction` times the table maximum. With fraction 1 nothing is
/// ever rejected, a useful sentinel.
pub fn gate_call(
    table: &ImpactTable,
    role: &str,
    phase: &str,
    threshold_fraction: f64,
) -> Result<GateDecision, PipelineError> {
    if !(threshold_fraction > 0.0 && threshold_fraction <= 1.0) {
        return Err(PipelineError::InvalidFraction(threshold_fraction));
    }
    let eif = table
        .get(role, phase)
        .ok_or_else(|| {
            let missing = if table.roles.iter().any(|l| l == role) {
                phase
            } else {
                role
            };
            PipelineError::UnknownLabel(missing.to_string())
        })?;
    let threshold = threshold_fraction * table.max_cell();
    let action = if eif > threshold {
        GateAction::Reject
    } else {
        GateAction::Accept
    };
    Ok(GateDecision {
        role: role.to_string(),
        phase: phase.to_string(),
        eif,
        threshold,
        threshold_fraction,
        action,
    })
}

/// Everything the pipeline produced, for inspection and serialization.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub grid: EventGrid,
    /// View-level collective matrix per phase-only / role-only meta.
    pub meta_matrices: Vec<(String, ReciprocalMatrix)>,
    /// Grid-sized matrix per meta-component, in scenario order.
    pub expanded: Vec<(String, ReciprocalMatrix)>,
    pub collective: ReciprocalMatrix,
    pub impact: ImpactVector,
    pub table: ImpactTable,
}

/// Runs the whole pipeline: transform every CCF, aggregate per
/// meta-component, expand onto the grid, aggregate the expansions, score and
/// reshape. Deterministic for a given scenario.
pub fn run_pipeline(scenario: &Scenario) -> Result<PipelineRun, PipelineError> {
    let grid = EventGrid::new(scenario.phase_view.clone(), scenario.role_view.clone())?;
    let op = scenario.operator_impl();
    let mut meta_matrices = Vec::new();
    let mut expanded = Vec::new();
    for meta in &scenario.metas {
        if meta.target != MetaTarget::Grid {
            meta_matrices.push((meta.name.clone(), meta.view_matrix(op)?));
        }
        expanded.push((
            meta.name.clone(),
            expand_meta_component(meta, &grid, op)?,
        ));
    }
    let matrices: Vec<ReciprocalMatrix> =
        expanded.iter().map(|(_, m)| m.clone()).collect();
    let collective = aggregate(&matrices, op).map_err(|e| PipelineError::Meta {
        meta: "<collective>".into(),
        message: e.to_string(),
    })?;
    let impact = impact_vector(&collective)?;
    let table = ImpactTable::from_impact(&grid, &impact);
    Ok(PipelineRun {
        grid,
        meta_matrices,
        expanded,
        collective,
        impact,
        table,
    })
}

/// The roles-by-phases impact table for a scenario.
pub fn compute_impact_table(scenario: &Scenario) -> Result<ImpactTable, PipelineError> {
    run_pipeline(scenario).map(|run| run.table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::GeometricMean;

    fn role_items() -> ItemSet {
        ItemSet::from_strs(&["MS", "AS", "N", "C", "A"]).unwrap()
    }

    #[test]
    fn derive_matches_hand_computed_tables() {
        let troc = Ordering::new(role_items(), vec![1, 4, 2, 5, 3]).unwrap();
        let retr = Ordering::new(role_items(), vec![1, 2, 3, 5, 4]).unwrap();
        let table = derive_rating_from_orderings(&[troc, retr]).unwrap();
        let expect = [
            [0.875, 0.5, 0.75, 0.375, 0.625],
            [0.875, 0.75, 0.625, 0.375, 0.5],
        ];
        for (row, want) in table.iter().zip(expect) {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derive_identical_orderings_identical_rows() {
        let o = Ordering::new(role_items(), vec![2, 1, 3, 4, 5]).unwrap();
        let table = derive_rating_from_orderings(&[o.clone(), o.clone(), o]).unwrap();
        assert_eq!(table[0], table[1]);
        assert_eq!(table[1], table[2]);
    }

    fn tiny_grid() -> EventGrid {
        EventGrid::new(
            View::new("phases", vec!["P1".into(), "P2".into()]).unwrap(),
            View::new("roles", vec!["R1".into(), "R2".into()]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn phase_only_expansion_is_one_within_a_phase() {
        let grid = tiny_grid();
        let phase_items = ItemSet::from_strs(&["P1", "P2"]).unwrap();
        let meta = MetaComponent {
            name: "w".into(),
            target: MetaTarget::Phases,
            ccfs: vec![Ccf {
                name: "m".into(),
                data: CcfData::Matrix(
                    ReciprocalMatrix::from_upper(phase_items, &[3.0]).unwrap(),
                ),
            }],
            cross_z: 1.0,
        };
        let e = expand_meta_component(&meta, &grid, &GeometricMean).unwrap();
        // same phase, different role: indifference
        assert_eq!(e.get(0, 1), 1.0);
        assert_eq!(e.get(2, 3), 1.0);
        // across phases the view value carries over
        assert_eq!(e.get(0, 2), 3.0);
        assert_eq!(e.get(1, 3), 3.0);
        assert!(e.consistency_defect() < 1e-9);
    }

    #[test]
    fn role_only_expansion_is_one_within_a_role() {
        let grid = tiny_grid();
        let role_items = ItemSet::from_strs(&["R1", "R2"]).unwrap();
        let meta = MetaComponent {
            name: "r".into(),
            target: MetaTarget::Roles,
            ccfs: vec![Ccf {
                name: "m".into(),
                data: CcfData::Matrix(
                    ReciprocalMatrix::from_upper(role_items, &[5.0]).unwrap(),
                ),
            }],
            cross_z: 1.0,
        };
        let e = expand_meta_component(&meta, &grid, &GeometricMean).unwrap();
        assert_eq!(e.get(0, 2), 1.0); // same role across phases
        assert_eq!(e.get(0, 1), 5.0);
        assert_eq!(e.get(2, 3), 5.0);
    }

    #[test]
    fn grid_expansion_uses_utility_ratios() {
        let grid = EventGrid::new(
            View::new("phases", vec!["P1".into()]).unwrap(),
            View::new("roles", vec!["R1".into(), "R2".into(), "R3".into(), "R4".into(), "R5".into()])
                .unwrap(),
        )
        .unwrap();
        let roles = ItemSet::from_strs(&["R1", "R2", "R3", "R4", "R5"]).unwrap();
        let meta = MetaComponent {
            name: "rw".into(),
            target: MetaTarget::Grid,
            ccfs: vec![Ccf {
                name: "P1".into(),
                data: CcfData::Ordering(
                    Ordering::new(roles, vec![1, 4, 2, 5, 3]).unwrap(),
                ),
            }],
            cross_z: 1.0,
        };
        let e = expand_meta_component(&meta, &grid, &GeometricMean).unwrap();
        // utilities 0.875 vs 0.375: raw ratio 7/3, and 7/3 is also the
        // largest ratio here, so normalization maps it onto 9
        assert!((e.get(0, 3) - 9.0).abs() < 1e-9);
        assert!(e.consistency_defect() < 1e-8);
    }

    #[test]
    fn gate_thresholds() {
        // constructed table: max 0.5, cells 0.5 / 0.3 / 0.2
        let table = ImpactTable::new(
            vec!["R1".into()],
            vec!["P1".into(), "P2".into(), "P3".into()],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let d = gate_call(&table, "R1", "P1", 0.98).unwrap();
        assert_eq!(d.action, GateAction::Reject);
        assert!((d.threshold - 0.49).abs() < 1e-12);
        let d = gate_call(&table, "R1", "P2", 0.98).unwrap();
        assert_eq!(d.action, GateAction::Accept);
        // fraction 1: even the max cell is accepted (strict inequality)
        let d = gate_call(&table, "R1", "P1", 1.0).unwrap();
        assert_eq!(d.action, GateAction::Accept);
        assert_eq!(
            gate_call(&table, "R9", "P1", 0.98).unwrap_err(),
            PipelineError::UnknownLabel("R9".into())
        );
        assert_eq!(
            gate_call(&table, "R1", "P9", 0.98).unwrap_err(),
            PipelineError::UnknownLabel("P9".into())
        );
        assert!(matches!(
            gate_call(&table, "R1", "P1", 0.0).unwrap_err(),
            PipelineError::InvalidFraction(_)
        ));
    }

    #[test]
    fn grid_rejects_single_event() {
        let err = EventGrid::new(
            View::new("p", vec!["a".into()]).unwrap(),
            View::new("r", vec!["b".into()]).unwrap(),
        )
        .unwrap_err();
        assert_eq!(err, PipelineError::GridTooSmall(1));
    }
}
