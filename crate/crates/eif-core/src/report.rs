//! Machine-readable result documents with provenance, plus CSV rendering.
//!
//! JSON carries full precision (round-trips within 1e-12 by construction);
//! CSV is formatted with 6 significant digits and RFC-4180-style quoting.

use serde::{Deserialize, Serialize};

use crate::pipeline::{GateAction, GateDecision, ImpactTable, PipelineRun};
use crate::prefs::ReciprocalMatrix;
use crate::scenario::Scenario;

/// Where a result came from: enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario_sha256: String,
    pub operator: String,
    pub threshold_fraction: f64,
    /// Ratio exponents in effect, one entry per rating CCF and per grid
    /// meta-component.
    pub z_values: Vec<ZNote>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub what_if: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZNote {
    pub meta: String,
    pub ccf: String,
    pub z: f64,
}

impl Provenance {
    pub fn new(scenario: &Scenario, what_if: Option<&str>) -> Self {
        let mut z_values = Vec::new();
        for meta in &scenario.metas {
            match meta.target {
                crate::pipeline::MetaTarget::Grid => z_values.push(ZNote {
                    meta: meta.name.clone(),
                    ccf: "*".into(),
                    z: meta.cross_z,
                }),
                _ => {
                    for ccf in &meta.ccfs {
                        if let crate::pipeline::CcfData::Rating(_, cfg) = &ccf.data {
                            z_values.push(ZNote {
                                meta: meta.name.clone(),
                                ccf: ccf.name.clone(),
                                z: cfg.z,
                            });
                        }
                    }
                }
            }
        }
        Provenance {
            scenario_sha256: scenario.source_hash.clone(),
            operator: scenario.operator.name().to_string(),
            threshold_fraction: scenario.threshold_fraction,
            z_values,
            what_if: what_if.map(str::to_string),
        }
    }
}

/// One matrix, stored as upper triangle plus diagonal (row-wise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub meta: String,
    /// Absent for a meta-component's collective matrix.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ccf: Option<String>,
    pub labels: Vec<String>,
    pub upper_with_diag: Vec<f64>,
    pub provenance: Provenance,
}

impl MatrixDocument {
    pub fn new(
        meta: &str,
        ccf: Option<&str>,
        matrix: &ReciprocalMatrix,
        provenance: Provenance,
    ) -> Self {
        MatrixDocument {
            meta: meta.to_string(),
            ccf: ccf.map(str::to_string),
            labels: matrix.items().labels().to_vec(),
            upper_with_diag: matrix.upper_with_diag(),
            provenance,
        }
    }
}

/// The per-event impact scores in event-grid order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorDocument {
    pub labels: Vec<String>,
    pub raw: Vec<f64>,
    pub impact: Vec<f64>,
    pub provenance: Provenance,
}

impl VectorDocument {
    pub fn from_run(run: &PipelineRun, provenance: Provenance) -> Self {
        VectorDocument {
            labels: run.impact.items().labels().to_vec(),
            raw: run.impact.raw().to_vec(),
            impact: run.impact.normalized().to_vec(),
            provenance,
        }
    }
}

/// The roles-by-phases look-up table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub roles: Vec<String>,
    pub phases: Vec<String>,
    /// One row per role.
    pub cells: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl TableDocument {
    pub fn from_table(table: &ImpactTable, provenance: Provenance) -> Self {
        let p = table.phases().len();
        let cells = (0..table.roles().len())
            .map(|r| (0..p).map(|c| table.cell(r, c)).collect())
            .collect();
        TableDocument {
            roles: table.roles().to_vec(),
            phases: table.phases().to_vec(),
            cells,
            provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDocument {
    pub role: String,
    pub phase: String,
    pub eif: f64,
    pub threshold: f64,
    pub threshold_fraction: f64,
    pub action: GateAction,
    pub provenance: Provenance,
}

impl GateDocument {
    pub fn from_decision(decision: &GateDecision, provenance: Provenance) -> Self {
        GateDocument {
            role: decision.role.clone(),
            phase: decision.phase.clone(),
            eif: decision.eif,
            threshold: decision.threshold,
            threshold_fraction: decision.threshold_fraction,
            action: decision.action,
            provenance,
        }
    }

    /// One line for humans, impact values at 4 decimal places.
    pub fn summary(&self) -> String {
        format!(
            "{} during {}: eif {:.4}, threshold {:.4} -> {}",
            self.role,
            self.phase,
            self.eif,
            self.threshold,
            match self.action {
                GateAction::Accept => "accept",
                GateAction::Reject => "reject",
            }
        )
    }
}

/// RFC-4180-style field quoting.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats with 6 significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn table_csv(doc: &TableDocument) -> String {
    let mut out = String::new();
    out.push_str("role");
    for phase in &doc.phases {
        out.push(',');
        out.push_str(&csv_field(phase));
    }
    out.push('\n');
    for (role, row) in doc.roles.iter().zip(&doc.cells) {
        out.push_str(&csv_field(role));
        for v in row {
            out.push(',');
            out.push_str(&fmt_sig6(*v));
        }
        out.push('\n');
    }
    out
}

pub fn vector_csv(doc: &VectorDocument) -> String {
    let mut out = String::from("event,raw,impact\n");
    for ((label, raw), impact) in doc.labels.iter().zip(&doc.raw).zip(&doc.impact) {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(label),
            fmt_sig6(*raw),
            fmt_sig6(*impact)
        ));
    }
    out
}

pub fn matrix_csv(doc: &MatrixDocument) -> String {
    // full matrix for readability; the document itself stays triangular
    let n = doc.labels.len();
    let mut values = vec![1.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            values[i * n + j] = doc.upper_with_diag[k];
            values[j * n + i] = 1.0 / doc.upper_with_diag[k];
            k += 1;
        }
    }
    let mut out = String::new();
    out.push_str(&csv_field(&doc.meta));
    if let Some(ccf) = &doc.ccf {
        out.push('/');
        out.push_str(&csv_field(ccf));
    }
    for label in &doc.labels {
        out.push(',');
        out.push_str(&csv_field(label));
    }
    out.push('\n');
    for i in 0..n {
        out.push_str(&csv_field(&doc.labels[i]));
        for j in 0..n {
            out.push(',');
            out.push_str(&fmt_sig6(values[i * n + j]));
        }
        out.push('\n');
    }
    out
}

pub fn gate_csv(doc: &GateDocument) -> String {
    format!(
        "role,phase,eif,threshold,action\n{},{},{},{},{}\n",
        csv_field(&doc.role),
        csv_field(&doc.phase),
        fmt_sig6(doc.eif),
        fmt_sig6(doc.threshold),
        match doc.action {
            GateAction::Accept => "accept",
            GateAction::Reject => "reject",
        }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance {
            scenario_sha256: "00".repeat(32),
            operator: "geometric-mean".into(),
            threshold_fraction: 0.98,
            z_values: vec![],
            what_if: None,
        }
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0364001), "0.0364001");
        assert_eq!(fmt_sig6(0.040755143008047), "0.0407551");
        assert_eq!(fmt_sig6(9.0), "9.00000");
        assert_eq!(fmt_sig6(123456.78), "123457");
        assert_eq!(fmt_sig6(0.0), "0");
    }

    #[test]
    fn csv_quotes_odd_labels() {
        let doc = TableDocument {
            roles: vec!["a,b".into()],
            phases: vec!["p\"1\"".into()],
            cells: vec![vec![1.0]],
            provenance: provenance(),
        };
        let csv = table_csv(&doc);
        assert!(csv.contains("\"a,b\""));
        assert!(csv.contains("\"p\"\"1\"\"\""));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let doc = TableDocument {
            roles: vec!["r".into()],
            phases: vec!["p".into()],
            cells: vec![vec![0.040755143008047]],
            provenance: provenance(),
        };
        let json = serde_json::to_string(&doc).unwrap();
        let back: TableDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, back);
    }
}
