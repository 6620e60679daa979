//! The declarative scenario file: views, meta-components, settings and
//! what-if overrides.
//!
//! The format is line oriented and sectioned. `#` starts a comment line,
//! the first content line is the version header, and every key line is
//! `head: values`. Matrices are written as their upper triangle plus
//! diagonal only, so a file cannot encode a reciprocity violation. A small
//! example:
//!
//! ```text
//! eif-scenario v1
//!
//! [views]
//! phases: P1, P2
//! roles: R1, R2
//!
//! [settings]
//! grid: phases x roles
//! threshold-fraction: 0.98
//!
//! [meta workflow]
//! target: phases
//! rating durations: 10 20
//! ```

use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

use crate::aggregate::{AggregationOperator, GeometricMean};
use crate::items::ItemSet;
use crate::pipeline::{Ccf, CcfData, MetaComponent, MetaTarget, View};
use crate::prefs::{Ordering, PairwiseComparison, Rating, ReciprocalMatrix};
use crate::transform::TransformConfig;

pub const FORMAT_HEADER: &str = "eif-scenario v1";

/// One located parse or validation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhatIfError {
    #[error("no what-if named `{0}` in the scenario")]
    UnknownWhatIf(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    GeometricMean,
}

impl OperatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::GeometricMean => "geometric-mean",
        }
    }
}

/// A named patch set: each entry replaces one CCF of one meta-component.
#[derive(Debug, Clone, PartialEq)]
pub struct WhatIf {
    pub name: String,
    pub patches: Vec<Patch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub meta: String,
    pub ccf: Ccf,
}

/// A fully validated scenario, ready for the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub phase_view: View,
    pub role_view: View,
    pub metas: Vec<MetaComponent>,
    pub operator: OperatorKind,
    pub threshold_fraction: f64,
    pub what_ifs: Vec<WhatIf>,
    /// SHA-256 of the source text, carried into result documents.
    pub source_hash: String,
}

static GEOMETRIC_MEAN: GeometricMean = GeometricMean;

impl Scenario {
    pub fn operator_impl(&self) -> &'static dyn AggregationOperator {
        match self.operator {
            OperatorKind::GeometricMean => &GEOMETRIC_MEAN,
        }
    }

    /// Returns a copy with the named what-if's patches applied. Patch
    /// targets were validated at parse time.
    pub fn apply_what_if(&self, name: &str) -> Result<Scenario, WhatIfError> {
        let what_if = self
            .what_ifs
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| WhatIfError::UnknownWhatIf(name.to_string()))?;
        let mut out = self.clone();
        for patch in &what_if.patches {
            let meta = out
                .metas
                .iter_mut()
                .find(|m| m.name == patch.meta)
                .expect("patch target checked at parse time");
            let slot = meta
                .ccfs
                .iter_mut()
                .find(|c| c.name == patch.ccf.name)
                .expect("patched ccf checked at parse time");
            *slot = patch.ccf.clone();
        }
        Ok(out)
    }

    /// Overrides the ratio exponent of every rating CCF and every grid
    /// meta-component.
    pub fn override_z(&mut self, z: f64) {
        for meta in &mut self.metas {
            meta.cross_z = z;
            for ccf in &mut meta.ccfs {
                if let CcfData::Rating(_, cfg) = &mut ccf.data {
                    cfg.z = z;
                }
            }
        }
    }

    pub fn meta(&self, name: &str) -> Option<&MetaComponent> {
        self.metas.iter().find(|m| m.name == name)
    }
}

/// Parses and validates a scenario document. All located problems are
/// collected rather than stopping at the first.
pub fn parse_scenario(text: &str) -> Result<Scenario, Vec<ParseIssue>> {
    Parser::new(text).run()
}

// ---- raw (lexical) form ----

struct RawCcf {
    kind: String,
    name: String,
    z: Option<f64>,
    normalize: bool,
    values: Vec<String>,
    line: usize,
}

struct RawMeta {
    name: String,
    line: usize,
    target: Option<(Vec<String>, usize)>,
    z: Option<f64>,
    ccfs: Vec<RawCcf>,
}

struct RawWhatIf {
    name: String,
    line: usize,
    meta: Option<String>,
    ccfs: Vec<RawCcf>,
}

enum Section {
    None,
    Views,
    Settings,
    Meta(usize),
    WhatIf(usize),
}

struct Parser<'a> {
    text: &'a str,
    issues: Vec<ParseIssue>,
    views: Vec<(String, Vec<String>, usize)>,
    settings_grid: Option<(String, String, usize)>,
    operator: Option<(String, usize)>,
    threshold_fraction: Option<(f64, usize)>,
    metas: Vec<RawMeta>,
    what_ifs: Vec<RawWhatIf>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            issues: Vec::new(),
            views: Vec::new(),
            settings_grid: None,
            operator: None,
            threshold_fraction: None,
            metas: Vec::new(),
            what_ifs: Vec::new(),
        }
    }

    fn issue(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ParseIssue {
            line,
            message: message.into(),
        });
    }

    fn run(mut self) -> Result<Scenario, Vec<ParseIssue>> {
        self.lex();
        let scenario = self.build();
        match scenario {
            Some(s) if self.issues.is_empty() => Ok(s),
            _ => Err(self.issues),
        }
    }

    // First pass: split the document into sections and key lines.
    fn lex(&mut self) {
        let mut section = Section::None;
        let mut saw_header = false;
        for (idx, raw_line) in self.text.lines().enumerate() {
            let no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != FORMAT_HEADER {
                    self.issue(no, format!("expected header `{FORMAT_HEADER}`"));
                }
                saw_header = true;
                continue;
            }
            if let Some(inner) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = self.open_section(inner.trim(), no);
                continue;
            }
            let Some((head, value)) = line.split_once(':') else {
                self.issue(no, "expected `key: values` or a `[section]` header");
                continue;
            };
            let head: Vec<&str> = head.split_whitespace().collect();
            let value = value.trim();
            if head.is_empty() {
                self.issue(no, "missing key before `:`");
                continue;
            }
            match section {
                Section::None => self.issue(no, "content outside any section"),
                Section::Views => self.view_line(&head, value, no),
                Section::Settings => self.setting_line(&head, value, no),
                Section::Meta(i) => self.meta_line(i, &head, value, no),
                Section::WhatIf(i) => self.what_if_line(i, &head, value, no),
            }
        }
        if !saw_header {
            self.issue(1, format!("empty document; expected `{FORMAT_HEADER}`"));
        }
    }

    fn open_section(&mut self, inner: &str, no: usize) -> Section {
        let mut words = inner.split_whitespace();
        match (words.next(), words.next(), words.next()) {
            (Some("views"), None, _) => Section::Views,
            (Some("settings"), None, _) => Section::Settings,
            (Some("meta"), Some(name), None) => {
                self.metas.push(RawMeta {
                    name: name.to_string(),
                    line: no,
                    target: None,
                    z: None,
                    ccfs: Vec::new(),
                });
                Section::Meta(self.metas.len() - 1)
            }
            (Some("what-if"), Some(name), None) => {
                self.what_ifs.push(RawWhatIf {
                    name: name.to_string(),
                    line: no,
                    meta: None,
                    ccfs: Vec::new(),
                });
                Section::WhatIf(self.what_ifs.len() - 1)
            }
            _ => {
                self.issue(no, format!("unknown section `[{inner}]`"));
                Section::None
            }
        }
    }

    fn view_line(&mut self, head: &[&str], value: &str, no: usize) {
        if head.len() != 1 {
            self.issue(no, "view lines are `name: label, label, ...`");
            return;
        }
        let labels: Vec<String> = value
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        self.views.push((head[0].to_string(), labels, no));
    }

    fn setting_line(&mut self, head: &[&str], value: &str, no: usize) {
        match head {
            ["grid"] => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if let [a, "x", b] = parts.as_slice() {
                    self.settings_grid = Some((a.to_string(), b.to_string(), no));
                } else {
                    self.issue(no, "grid setting is `grid: <phase view> x <role view>`");
                }
            }
            ["operator"] => self.operator = Some((value.to_string(), no)),
            ["threshold-fraction"] => match value.parse::<f64>() {
                Ok(v) => self.threshold_fraction = Some((v, no)),
                Err(_) => self.issue(no, format!("bad threshold fraction `{value}`")),
            },
            ["impact-normalization"] => {
                if value != "l1" {
                    self.issue(no, format!("unsupported impact normalization `{value}`"));
                }
            }
            _ => self.issue(no, format!("unknown setting `{}`", head.join(" "))),
        }
    }

    fn ccf_line(&mut self, head: &[&str], value: &str, no: usize) -> Option<RawCcf> {
        let kind = head[0];
        if !matches!(kind, "rating" | "ordering" | "pairwise" | "matrix") {
            self.issue(no, format!("unknown line kind `{kind}`"));
            return None;
        }
        let Some(name) = head.get(1) else {
            self.issue(no, format!("`{kind}` line needs a name"));
            return None;
        };
        let mut z = None;
        let mut normalize = true;
        for attr in &head[2..] {
            match attr.split_once('=') {
                Some(("z", v)) => match v.parse::<f64>() {
                    Ok(v) => z = Some(v),
                    Err(_) => self.issue(no, format!("bad z value `{v}`")),
                },
                Some(("normalize", v)) => match v.parse::<bool>() {
                    Ok(v) => normalize = v,
                    Err(_) => self.issue(no, format!("bad normalize value `{v}`")),
                },
                _ => self.issue(no, format!("unknown attribute `{attr}`")),
            }
        }
        Some(RawCcf {
            kind: kind.to_string(),
            name: name.to_string(),
            z,
            normalize,
            values: value.split_whitespace().map(str::to_string).collect(),
            line: no,
        })
    }

    fn meta_line(&mut self, i: usize, head: &[&str], value: &str, no: usize) {
        match head {
            ["target"] => {
                let words = value.split_whitespace().map(str::to_string).collect();
                self.metas[i].target = Some((words, no));
            }
            ["z"] => match value.parse::<f64>() {
                Ok(v) => self.metas[i].z = Some(v),
                Err(_) => self.issue(no, format!("bad z value `{value}`")),
            },
            _ => {
                if let Some(ccf) = self.ccf_line(head, value, no) {
                    self.metas[i].ccfs.push(ccf);
                }
            }
        }
    }

    fn what_if_line(&mut self, i: usize, head: &[&str], value: &str, no: usize) {
        match head {
            ["meta"] => self.what_ifs[i].meta = Some(value.to_string()),
            _ => {
                if let Some(ccf) = self.ccf_line(head, value, no) {
                    self.what_ifs[i].ccfs.push(ccf);
                }
            }
        }
    }

    // Second pass: semantic validation into the typed scenario.
    fn build(&mut self) -> Option<Scenario> {
        let views: Vec<(View, usize)> = {
            let raw = std::mem::take(&mut self.views);
            raw.into_iter()
                .filter_map(|(name, labels, no)| {
                    match View::new(name, labels) {
                        Ok(v) => Some((v, no)),
                        Err(e) => {
                            self.issue(no, e.to_string());
                            None
                        }
                    }
                })
                .collect()
        };
        for (i, (v, no)) in views.iter().enumerate() {
            if views[..i].iter().any(|(other, _)| other.name() == v.name()) {
                self.issue(*no, format!("duplicate view `{}`", v.name()));
            }
        }

        let grid_setting = self.settings_grid.take();
        let (phase_view, role_view) = match &grid_setting {
            Some((a, b, no)) => {
                let no = *no;
                let pv = views.iter().find(|(v, _)| v.name() == *a).cloned();
                let rv = views.iter().find(|(v, _)| v.name() == *b).cloned();
                if pv.is_none() {
                    self.issue(no, format!("grid names unknown view `{a}`"));
                }
                if rv.is_none() {
                    self.issue(no, format!("grid names unknown view `{b}`"));
                }
                match (pv, rv) {
                    (Some((p, _)), Some((r, _))) => (p, r),
                    _ => return None,
                }
            }
            None => {
                if views.len() == 2 {
                    (views[0].0.clone(), views[1].0.clone())
                } else {
                    self.issue(
                        1,
                        "a `grid: <phase view> x <role view>` setting is required \
                         unless exactly two views are declared",
                    );
                    return None;
                }
            }
        };

        let operator = match &self.operator {
            None => OperatorKind::GeometricMean,
            Some((name, no)) if name == "geometric-mean" => OperatorKind::GeometricMean,
            Some((name, no)) => {
                let (name, no) = (name.clone(), *no);
                self.issue(no, format!("unknown operator `{name}`"));
                OperatorKind::GeometricMean
            }
        };

        let threshold_fraction = match self.threshold_fraction {
            None => 0.98,
            Some((v, no)) => {
                if !(v > 0.0 && v <= 1.0) {
                    self.issue(no, format!("threshold fraction {v} outside (0, 1]"));
                }
                v
            }
        };

        let raw_metas = std::mem::take(&mut self.metas);
        let mut metas: Vec<MetaComponent> = Vec::new();
        for raw in &raw_metas {
            if metas.iter().any(|m| m.name == raw.name) {
                self.issue(raw.line, format!("duplicate meta `{}`", raw.name));
                continue;
            }
            if let Some(meta) = self.build_meta(raw, &phase_view, &role_view) {
                metas.push(meta);
            }
        }

        let raw_what_ifs = std::mem::take(&mut self.what_ifs);
        let mut what_ifs: Vec<WhatIf> = Vec::new();
        for raw in &raw_what_ifs {
            if let Some(w) = self.build_what_if(raw, &metas, &phase_view, &role_view) {
                what_ifs.push(w);
            }
        }

        if metas.is_empty() {
            self.issue(1, "scenario declares no meta-components");
        }
        if !self.issues.is_empty() {
            return None;
        }

        let mut hasher = Sha256::new();
        hasher.update(self.text.as_bytes());
        let source_hash = format!("{:x}", hasher.finalize());

        Some(Scenario {
            phase_view,
            role_view,
            metas,
            operator,
            threshold_fraction,
            what_ifs,
            source_hash,
        })
    }

    fn build_meta(
        &mut self,
        raw: &RawMeta,
        phase_view: &View,
        role_view: &View,
    ) -> Option<MetaComponent> {
        let Some((target_words, target_line)) = &raw.target else {
            self.issue(raw.line, format!("meta `{}` has no target", raw.name));
            return None;
        };
        let target = match target_words.as_slice() {
            [one] if one == phase_view.name() => MetaTarget::Phases,
            [one] if one == role_view.name() => MetaTarget::Roles,
            [a, x, b] if x == "x" && a == phase_view.name() && b == role_view.name() => {
                MetaTarget::Grid
            }
            _ => {
                self.issue(
                    *target_line,
                    format!("bad target `{}`", target_words.join(" ")),
                );
                return None;
            }
        };
        let mut ccfs = Vec::new();
        match target {
            MetaTarget::Phases | MetaTarget::Roles => {
                let view = if target == MetaTarget::Phases {
                    phase_view
                } else {
                    role_view
                };
                let items = match view.item_set() {
                    Ok(items) => items,
                    Err(e) => {
                        self.issue(*target_line, e.to_string());
                        return None;
                    }
                };
                for raw_ccf in &raw.ccfs {
                    if ccfs.iter().any(|c: &Ccf| c.name == raw_ccf.name) {
                        self.issue(
                            raw_ccf.line,
                            format!("duplicate ccf `{}` in meta `{}`", raw_ccf.name, raw.name),
                        );
                        continue;
                    }
                    if let Some(ccf) = self.build_view_ccf(raw_ccf, &items) {
                        ccfs.push(ccf);
                    }
                }
                if raw.z.is_some() {
                    self.issue(
                        raw.line,
                        format!(
                            "meta `{}`: a meta-level z only applies to `{} x {}` targets",
                            raw.name,
                            phase_view.name(),
                            role_view.name()
                        ),
                    );
                }
            }
            MetaTarget::Grid => {
                let role_items = match role_view.item_set() {
                    Ok(items) => items,
                    Err(e) => {
                        self.issue(*target_line, e.to_string());
                        return None;
                    }
                };
                // one role ordering per phase, keyed by the phase label
                let mut per_phase: Vec<Option<(Ordering, usize)>> =
                    vec![None; phase_view.len()];
                for raw_ccf in &raw.ccfs {
                    if raw_ccf.kind != "ordering" {
                        self.issue(
                            raw_ccf.line,
                            format!(
                                "meta `{}` targets the grid; only per-phase `ordering` \
                                 lines are allowed",
                                raw.name
                            ),
                        );
                        continue;
                    }
                    let Some(pi) = phase_view.labels().iter().position(|l| *l == raw_ccf.name)
                    else {
                        self.issue(
                            raw_ccf.line,
                            format!("`{}` is not a phase label", raw_ccf.name),
                        );
                        continue;
                    };
                    if per_phase[pi].is_some() {
                        self.issue(
                            raw_ccf.line,
                            format!("phase `{}` ordered twice", raw_ccf.name),
                        );
                        continue;
                    }
                    if let Some(o) = self.parse_ordering(raw_ccf, &role_items) {
                        per_phase[pi] = Some((o, raw_ccf.line));
                    }
                }
                for (pi, slot) in per_phase.iter().enumerate() {
                    match slot {
                        Some((o, _)) => ccfs.push(Ccf {
                            name: phase_view.labels()[pi].clone(),
                            data: CcfData::Ordering(o.clone()),
                        }),
                        None => self.issue(
                            raw.line,
                            format!(
                                "meta `{}` misses an ordering for phase `{}`",
                                raw.name,
                                phase_view.labels()[pi]
                            ),
                        ),
                    }
                }
            }
        }
        if ccfs.is_empty() {
            self.issue(raw.line, format!("meta `{}` has no ccfs", raw.name));
            return None;
        }
        Some(MetaComponent {
            name: raw.name.clone(),
            target,
            ccfs,
            cross_z: raw.z.unwrap_or(1.0),
        })
    }

    fn parse_numbers(&mut self, raw: &RawCcf) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(raw.values.len());
        for tok in &raw.values {
            match parse_value(tok) {
                Some(v) => out.push(v),
                None => {
                    self.issue(raw.line, format!("bad number `{tok}`"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn parse_ordering(&mut self, raw: &RawCcf, items: &ItemSet) -> Option<Ordering> {
        let mut ranks = Vec::with_capacity(raw.values.len());
        for tok in &raw.values {
            match tok.parse::<usize>() {
                Ok(r) => ranks.push(r),
                Err(_) => {
                    self.issue(raw.line, format!("bad rank `{tok}`"));
                    return None;
                }
            }
        }
        match Ordering::new(items.clone(), ranks) {
            Ok(o) => Some(o),
            Err(e) => {
                self.issue(raw.line, e.to_string());
                None
            }
        }
    }

    fn build_view_ccf(&mut self, raw: &RawCcf, items: &ItemSet) -> Option<Ccf> {
        let data = match raw.kind.as_str() {
            "ordering" => CcfData::Ordering(self.parse_ordering(raw, items)?),
            "rating" => {
                let values = self.parse_numbers(raw)?;
                match Rating::new(items.clone(), values) {
                    Ok(r) => CcfData::Rating(
                        r,
                        TransformConfig {
                            z: raw.z.unwrap_or(1.0),
                            normalize: raw.normalize,
                        },
                    ),
                    Err(e) => {
                        self.issue(raw.line, e.to_string());
                        return None;
                    }
                }
            }
            "pairwise" => {
                let values = self.parse_numbers(raw)?;
                match PairwiseComparison::new(items.clone(), values) {
                    Ok(p) => CcfData::Pairwise(p),
                    Err(e) => {
                        self.issue(raw.line, e.to_string());
                        return None;
                    }
                }
            }
            "matrix" => {
                let values = self.parse_numbers(raw)?;
                match ReciprocalMatrix::from_upper_with_diag(items.clone(), &values) {
                    Ok(m) => CcfData::Matrix(m),
                    Err(e) => {
                        self.issue(raw.line, e.to_string());
                        return None;
                    }
                }
            }
            _ => unreachable!("kinds filtered in ccf_line"),
        };
        Some(Ccf {
            name: raw.name.clone(),
            data,
        })
    }

    fn build_what_if(
        &mut self,
        raw: &RawWhatIf,
        metas: &[MetaComponent],
        phase_view: &View,
        role_view: &View,
    ) -> Option<WhatIf> {
        let Some(meta_name) = &raw.meta else {
            self.issue(raw.line, format!("what-if `{}` names no meta", raw.name));
            return None;
        };
        let Some(meta) = metas.iter().find(|m| m.name == *meta_name) else {
            self.issue(
                raw.line,
                format!("what-if `{}` targets unknown meta `{meta_name}`", raw.name),
            );
            return None;
        };
        let items = match meta.target {
            MetaTarget::Phases => phase_view.item_set(),
            MetaTarget::Roles | MetaTarget::Grid => role_view.item_set(),
        };
        let items = match items {
            Ok(items) => items,
            Err(e) => {
                self.issue(raw.line, e.to_string());
                return None;
            }
        };
        let mut patches = Vec::new();
        for raw_ccf in &raw.ccfs {
            if !meta.ccfs.iter().any(|c| c.name == raw_ccf.name) {
                self.issue(
                    raw_ccf.line,
                    format!(
                        "what-if `{}` patches unknown ccf `{}` of meta `{meta_name}`",
                        raw.name, raw_ccf.name
                    ),
                );
                continue;
            }
            let built = if meta.target == MetaTarget::Grid {
                self.parse_ordering(raw_ccf, &items).map(|o| Ccf {
                    name: raw_ccf.name.clone(),
                    data: CcfData::Ordering(o),
                })
            } else {
                self.build_view_ccf(raw_ccf, &items)
            };
            if let Some(ccf) = built {
                patches.push(Patch {
                    meta: meta_name.clone(),
                    ccf,
                });
            }
        }
        if patches.is_empty() {
            self.issue(raw.line, format!("what-if `{}` patches nothing", raw.name));
            return None;
        }
        Some(WhatIf {
            name: raw.name.clone(),
            patches,
        })
    }
}

/// Parses `1.5`, `3`, or a fraction like `1/3`.
fn parse_value(tok: &str) -> Option<f64> {
    if let Some((num, den)) = tok.split_once('/') {
        let num: f64 = num.parse().ok()?;
        let den: f64 = den.parse().ok()?;
        if den == 0.0 {
            return None;
        }
        return Some(num / den);
    }
    tok.parse().ok()
}
