//! The fixed query classes over a graph snapshot. Every query reads approved
//! edges only; pending edges stay invisible until convergence.

mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

pub use table::{render, to_json, to_tsv, OutputFormat, Tabular};
use table::{key_string, list, opt};

use crate::decimal::Decimal;
use crate::graph::{Edge, Graph, Node, NodeKey, PropertyValue};
use crate::ontology::{CONFIDENCE_MAX, CONFIDENCE_MIN};

pub const ELISA_SUBGRAPH: &str = "ELISA";
pub const LCMS_SUBGRAPH: &str = "LCMS";

/// Number of confidence histogram bins, each 0.05 wide from 0.60.
pub const HISTOGRAM_BINS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("key error: {0}")]
    KeyError(String),
    #[error("range error: {0}")]
    RangeError(String),
}

fn text(node: &Node, name: &str) -> Option<String> {
    node.get(name).and_then(PropertyValue::as_str).map(str::to_string)
}

fn number(node: &Node, name: &str) -> Option<Decimal> {
    node.get(name).and_then(PropertyValue::as_decimal)
}

fn flag(node: &Node, name: &str) -> bool {
    node.get(name).and_then(PropertyValue::as_bool).unwrap_or(false)
}

/// Approved edges of one type leaving `key`, with their targets.
fn out_edges<'g>(graph: &'g Graph, key: &NodeKey, edge_type: &str) -> Vec<(&'g Edge, &'g Node)> {
    graph
        .approved_edges()
        .filter(|e| e.edge_type == edge_type && &e.src == key)
        .filter_map(|e| graph.node(&e.dst).map(|n| (e, n)))
        .collect()
}

fn in_edges<'g>(graph: &'g Graph, key: &NodeKey, edge_type: &str) -> Vec<(&'g Edge, &'g Node)> {
    graph
        .approved_edges()
        .filter(|e| e.edge_type == edge_type && &e.dst == key)
        .filter_map(|e| graph.node(&e.src).map(|n| (e, n)))
        .collect()
}

fn require_subgraph(graph: &Graph, subgraph: &str) -> Result<(), QueryError> {
    if graph.has_subgraph(subgraph) {
        Ok(())
    } else {
        Err(QueryError::KeyError(format!("no subgraph `{subgraph}`")))
    }
}

fn require_node<'g>(graph: &'g Graph, key: &NodeKey, label: &str) -> Result<&'g Node, QueryError> {
    match graph.node(key) {
        Some(n) if n.key.label == label => Ok(n),
        Some(_) => Err(QueryError::KeyError(format!("{key} is not a {label}"))),
        None => Err(QueryError::KeyError(format!("no such node {key}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedFailureRow {
    #[serde(serialize_with = "key_string")]
    pub failure_mode: NodeKey,
    pub name: String,
    pub confidence: Decimal,
    pub silent: bool,
    pub masking_assets: Vec<String>,
    pub confidence_method: Option<String>,
    pub source_scientist: Option<String>,
    pub silent_failure_risk: bool,
}

impl Tabular for RankedFailureRow {
    fn headers() -> &'static [&'static str] {
        &[
            "failure_mode",
            "name",
            "confidence",
            "silent",
            "masking_assets",
            "confidence_method",
            "source_scientist",
            "silent_failure_risk",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.failure_mode.to_string(),
            self.name.clone(),
            self.confidence.to_string(),
            self.silent.to_string(),
            list(&self.masking_assets),
            opt(&self.confidence_method),
            opt(&self.source_scientist),
            self.silent_failure_risk.to_string(),
        ]
    }
}

fn ranked_row(graph: &Graph, fm: &Node) -> RankedFailureRow {
    let mut masking_assets: Vec<String> = out_edges(graph, &fm.key, "MASKED_BY")
        .into_iter()
        .map(|(_, n)| n.display_name().to_string())
        .collect();
    masking_assets.sort();
    let silent_failure_risk = flag(fm, "silent_failure_risk");
    let detected = !out_edges(graph, &fm.key, "DETECTED_BY").is_empty();
    RankedFailureRow {
        failure_mode: fm.key.clone(),
        name: fm.display_name().to_string(),
        confidence: number(fm, "confidence").unwrap_or_default(),
        silent: !masking_assets.is_empty() || (silent_failure_risk && !detected),
        masking_assets,
        confidence_method: text(fm, "confidence_method"),
        source_scientist: text(fm, "source_scientist"),
        silent_failure_risk,
    }
}

fn failure_rows(graph: &Graph, subgraph: &str) -> Vec<RankedFailureRow> {
    graph
        .nodes_with_label(subgraph, "FailureMode")
        .map(|fm| ranked_row(graph, fm))
        .collect()
}

/// Failure modes of a subgraph by confidence (descending), then id.
pub fn q_ranked_failures(graph: &Graph, subgraph: &str) -> Result<Vec<RankedFailureRow>, QueryError> {
    require_subgraph(graph, subgraph)?;
    let mut rows = failure_rows(graph, subgraph);
    rows.sort_by(|a, b| {
        b.confidence
            .cmp(&a.confidence)
            .then_with(|| a.failure_mode.id.cmp(&b.failure_mode.id))
    });
    Ok(rows)
}

pub fn q1_elisa_failures(graph: &Graph) -> Result<Vec<RankedFailureRow>, QueryError> {
    q_ranked_failures(graph, ELISA_SUBGRAPH)
}

pub fn q5_lcms_failures(graph: &Graph) -> Result<Vec<RankedFailureRow>, QueryError> {
    q_ranked_failures(graph, LCMS_SUBGRAPH)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecisionPointRecord {
    #[serde(serialize_with = "key_string")]
    pub decision_point: NodeKey,
    pub name: String,
    pub condition_type: Option<String>,
    pub threshold_value: Option<Decimal>,
    pub comparator: Option<String>,
    pub units: Option<String>,
    pub pass_action: Option<String>,
    pub fail_action: Option<String>,
    pub escalation_action: Option<String>,
    pub confidence: Option<Decimal>,
}

impl Tabular for DecisionPointRecord {
    fn headers() -> &'static [&'static str] {
        &[
            "decision_point",
            "name",
            "condition_type",
            "threshold_value",
            "comparator",
            "units",
            "pass_action",
            "fail_action",
            "escalation_action",
            "confidence",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.decision_point.to_string(),
            self.name.clone(),
            opt(&self.condition_type),
            opt(&self.threshold_value),
            opt(&self.comparator),
            opt(&self.units),
            opt(&self.pass_action),
            opt(&self.fail_action),
            opt(&self.escalation_action),
            opt(&self.confidence),
        ]
    }
}

/// Decision points attached to a workflow step, by id.
pub fn q2_decision_logic(graph: &Graph, step: &NodeKey) -> Result<Vec<DecisionPointRecord>, QueryError> {
    require_node(graph, step, "WorkflowStep")?;
    let mut rows: Vec<DecisionPointRecord> = out_edges(graph, step, "HAS_DECISION_POINT")
        .into_iter()
        .map(|(_, dp)| DecisionPointRecord {
            decision_point: dp.key.clone(),
            name: dp.display_name().to_string(),
            condition_type: text(dp, "condition_type"),
            threshold_value: number(dp, "threshold_value"),
            comparator: text(dp, "comparator"),
            units: text(dp, "units"),
            pass_action: text(dp, "pass_action"),
            fail_action: text(dp, "fail_action"),
            escalation_action: text(dp, "escalation_action"),
            confidence: number(dp, "confidence"),
        })
        .collect();
    rows.sort_by(|a, b| a.decision_point.id.cmp(&b.decision_point.id));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeDirection {
    Downstream,
    Upstream,
}

impl std::str::FromStr for CascadeDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "downstream" => Ok(CascadeDirection::Downstream),
            "upstream" => Ok(CascadeDirection::Upstream),
            other => Err(format!("unknown direction `{other}` (expected downstream|upstream)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CascadePath {
    pub nodes: Vec<String>,
    pub depth: usize,
    #[serde(skip)]
    pub keys: Vec<NodeKey>,
}

impl Tabular for CascadePath {
    fn headers() -> &'static [&'static str] {
        &["depth", "path"]
    }

    fn cells(&self) -> Vec<String> {
        vec![self.depth.to_string(), self.nodes.join(" -> ")]
    }
}

/// Every simple CASCADES_TO path from `root` up to `max_depth` hops,
/// including the root alone, ordered by depth and then node names.
pub fn q3_cascade(
    graph: &Graph,
    root: &NodeKey,
    max_depth: usize,
    direction: CascadeDirection,
) -> Result<Vec<CascadePath>, QueryError> {
    let root_node = require_node(graph, root, "FailureMode")?;
    let mut paths = Vec::new();
    let mut stack: Vec<&Node> = vec![root_node];
    walk(graph, &mut stack, max_depth, direction, &mut paths);
    paths.sort_by(|a: &CascadePath, b| {
        a.depth
            .cmp(&b.depth)
            .then_with(|| a.nodes.cmp(&b.nodes))
            .then_with(|| a.keys.cmp(&b.keys))
    });
    Ok(paths)
}

fn walk<'g>(
    graph: &'g Graph,
    stack: &mut Vec<&'g Node>,
    max_depth: usize,
    direction: CascadeDirection,
    out: &mut Vec<CascadePath>,
) {
    out.push(CascadePath {
        nodes: stack.iter().map(|n| n.display_name().to_string()).collect(),
        depth: stack.len() - 1,
        keys: stack.iter().map(|n| n.key.clone()).collect(),
    });
    if stack.len() > max_depth {
        return;
    }
    let last = &stack[stack.len() - 1].key;
    let next = match direction {
        CascadeDirection::Downstream => out_edges(graph, last, "CASCADES_TO"),
        CascadeDirection::Upstream => in_edges(graph, last, "CASCADES_TO"),
    };
    for (_, n) in next {
        if stack.iter().any(|s| s.key == n.key) {
            continue;
        }
        stack.push(n);
        walk(graph, stack, max_depth, direction, out);
        stack.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GapClassification {
    ElicitationGap,
    EvaluativeStep,
}

impl fmt::Display for GapClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapClassification::ElicitationGap => "ELICITATION_GAP",
            GapClassification::EvaluativeStep => "EVALUATIVE_STEP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageGapRow {
    #[serde(serialize_with = "key_string")]
    pub step: NodeKey,
    pub name: String,
    pub step_index: Option<Decimal>,
    pub classification: GapClassification,
    pub decision_point_count: usize,
}

impl Tabular for CoverageGapRow {
    fn headers() -> &'static [&'static str] {
        &["step", "name", "step_index", "classification", "decision_point_count"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.step.to_string(),
            self.name.clone(),
            opt(&self.step_index),
            self.classification.to_string(),
            self.decision_point_count.to_string(),
        ]
    }
}

/// Workflow steps with no documented failure mode, by step index.
pub fn q4a_coverage_gaps(graph: &Graph, subgraph: &str) -> Vec<CoverageGapRow> {
    let mut rows: Vec<CoverageGapRow> = graph
        .nodes_with_label(subgraph, "WorkflowStep")
        .filter(|s| out_edges(graph, &s.key, "CAUSES_IF_INCOMPLETE").is_empty())
        .map(|s| {
            let n = out_edges(graph, &s.key, "HAS_DECISION_POINT").len();
            CoverageGapRow {
                step: s.key.clone(),
                name: s.display_name().to_string(),
                step_index: number(s, "step_index"),
                classification: if n > 0 {
                    GapClassification::EvaluativeStep
                } else {
                    GapClassification::ElicitationGap
                },
                decision_point_count: n,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.step_index
            .cmp(&b.step_index)
            .then_with(|| a.step.id.cmp(&b.step.id))
    });
    rows
}

/// Failure modes at or below `threshold`, by id.
pub fn q4b_confidence_floor(
    graph: &Graph,
    subgraph: &str,
    threshold: f64,
) -> Result<Vec<RankedFailureRow>, QueryError> {
    let t = Decimal::from_f64(threshold)
        .ok()
        .filter(|t| (CONFIDENCE_MIN..=CONFIDENCE_MAX).contains(t))
        .ok_or_else(|| QueryError::RangeError(format!("threshold {threshold} outside [0.60, 1.00]")))?;
    let mut rows: Vec<RankedFailureRow> = failure_rows(graph, subgraph)
        .into_iter()
        .filter(|r| r.confidence <= t)
        .collect();
    rows.sort_by(|a, b| a.failure_mode.id.cmp(&b.failure_mode.id));
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskingAuditRow {
    pub failure_mode: String,
    pub asset: String,
    pub self_masking_loop: bool,
    pub loop_path: Option<Vec<String>>,
    #[serde(serialize_with = "key_string")]
    pub failure_mode_key: NodeKey,
    #[serde(serialize_with = "key_string")]
    pub asset_key: NodeKey,
}

impl Tabular for MaskingAuditRow {
    fn headers() -> &'static [&'static str] {
        &["failure_mode", "asset", "self_masking_loop", "loop_path", "failure_mode_key", "asset_key"]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.failure_mode.clone(),
            self.asset.clone(),
            self.self_masking_loop.to_string(),
            self.loop_path.as_ref().map(|p| p.join(" -> ")).unwrap_or_default(),
            self.failure_mode_key.to_string(),
            self.asset_key.to_string(),
        ]
    }
}

/// First step/use-case pair (in key order) through which the asset serves a
/// step that causes the failure mode.
fn masking_loop(graph: &Graph, fm: &Node, asset: &Node) -> Option<Vec<String>> {
    for (_, step) in in_edges(graph, &fm.key, "CAUSES_IF_INCOMPLETE") {
        for (_, uc) in out_edges(graph, &step.key, "REQUIRES_AUTOMATION") {
            let serves = out_edges(graph, &uc.key, "SUITABLE_FOR")
                .iter()
                .any(|(_, a)| a.key == asset.key);
            if serves {
                return Some(vec![
                    step.display_name().to_string(),
                    uc.display_name().to_string(),
                    asset.display_name().to_string(),
                    fm.display_name().to_string(),
                ]);
            }
        }
    }
    None
}

/// One row per approved MASKED_BY edge, by asset then failure mode name.
pub fn q6_masking_audit(graph: &Graph) -> Vec<MaskingAuditRow> {
    let mut rows: Vec<MaskingAuditRow> = graph
        .approved_edges()
        .filter(|e| e.edge_type == "MASKED_BY")
        .filter_map(|e| Some((graph.node(&e.src)?, graph.node(&e.dst)?)))
        .map(|(fm, asset)| {
            let loop_path = masking_loop(graph, fm, asset);
            MaskingAuditRow {
                failure_mode: fm.display_name().to_string(),
                asset: asset.display_name().to_string(),
                self_masking_loop: loop_path.is_some(),
                loop_path,
                failure_mode_key: fm.key.clone(),
                asset_key: asset.key.clone(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (&a.asset, &a.failure_mode, &a.failure_mode_key)
            .cmp(&(&b.asset, &b.failure_mode, &b.failure_mode_key))
    });
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverlapTier {
    SharedBoth,
    ElisaOnly,
    LcmsOnly,
    Other,
}

impl OverlapTier {
    pub fn of(subgraphs: &BTreeSet<String>) -> OverlapTier {
        let elisa = subgraphs.contains(ELISA_SUBGRAPH);
        let lcms = subgraphs.contains(LCMS_SUBGRAPH);
        match (elisa, lcms) {
            (true, true) => OverlapTier::SharedBoth,
            (true, false) => OverlapTier::ElisaOnly,
            (false, true) => OverlapTier::LcmsOnly,
            (false, false) => OverlapTier::Other,
        }
    }
}

impl fmt::Display for OverlapTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OverlapTier::SharedBoth => "SHARED_BOTH",
            OverlapTier::ElisaOnly => "ELISA_ONLY",
            OverlapTier::LcmsOnly => "LCMS_ONLY",
            OverlapTier::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SharedAssetRow {
    pub asset: String,
    pub serving_subgraphs: BTreeSet<String>,
    pub overlap_tier: OverlapTier,
    pub use_cases: Vec<String>,
    #[serde(serialize_with = "key_string")]
    pub asset_key: NodeKey,
}

impl Tabular for SharedAssetRow {
    fn headers() -> &'static [&'static str] {
        &["asset", "serving_subgraphs", "overlap_tier", "use_cases", "asset_key"]
    }

    fn cells(&self) -> Vec<String> {
        let sgs: Vec<String> = self.serving_subgraphs.iter().cloned().collect();
        vec![
            self.asset.clone(),
            list(&sgs),
            self.overlap_tier.to_string(),
            list(&self.use_cases),
            self.asset_key.to_string(),
        ]
    }
}

/// Assets reachable from some workflow step through a use case, with the
/// subgraphs they serve; ordered by tier, then asset name.
pub fn q7_shared_assets(graph: &Graph) -> Vec<SharedAssetRow> {
    let mut reach: BTreeMap<&NodeKey, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    for req in graph.approved_edges().filter(|e| e.edge_type == "REQUIRES_AUTOMATION") {
        let Some(uc) = graph.node(&req.dst) else { continue };
        for (_, asset) in out_edges(graph, &uc.key, "SUITABLE_FOR") {
            let entry = reach.entry(&asset.key).or_default();
            entry.0.insert(req.src.subgraph.clone());
            entry.1.insert(uc.display_name().to_string());
        }
    }
    let mut rows: Vec<SharedAssetRow> = reach
        .into_iter()
        .filter_map(|(key, (sgs, ucs))| {
            let asset = graph.node(key)?;
            Some(SharedAssetRow {
                asset: asset.display_name().to_string(),
                overlap_tier: OverlapTier::of(&sgs),
                serving_subgraphs: sgs,
                use_cases: ucs.into_iter().collect(),
                asset_key: key.clone(),
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.overlap_tier, &a.asset, &a.asset_key).cmp(&(b.overlap_tier, &b.asset, &b.asset_key))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgraphStats {
    pub subgraph: String,
    pub n_failure_modes: usize,
    pub mean_confidence: Option<Decimal>,
    pub histogram: [usize; HISTOGRAM_BINS],
    pub n_at_floor: usize,
    pub n_silent: usize,
}

impl SubgraphStats {
    /// Lower edge of each histogram bin.
    pub fn bin_edges() -> [Decimal; HISTOGRAM_BINS] {
        std::array::from_fn(|i| Decimal::from_micros(600_000 + 50_000 * i as i64))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        out.push_str(&format!("subgraph\t{}\n", self.subgraph));
        out.push_str(&format!("n_failure_modes\t{}\n", self.n_failure_modes));
        out.push_str(&format!("mean_confidence\t{}\n", opt(&self.mean_confidence)));
        out.push_str(&format!("n_at_floor\t{}\n", self.n_at_floor));
        out.push_str(&format!("n_silent\t{}\n", self.n_silent));
        let edges = Self::bin_edges();
        for (i, count) in self.histogram.iter().enumerate() {
            let hi = if i + 1 == HISTOGRAM_BINS {
                format!("{}]", CONFIDENCE_MAX)
            } else {
                format!("{})", edges[i + 1])
            };
            out.push_str(&format!("bin[{},{}\t{}\n", edges[i], hi, count));
        }
        out
    }
}

fn bin_of(confidence: Decimal) -> usize {
    let offset = (confidence.micros() - 600_000).max(0) / 50_000;
    (offset as usize).min(HISTOGRAM_BINS - 1)
}

/// Confidence distribution of a subgraph's failure modes.
pub fn subgraph_stats(graph: &Graph, subgraph: &str) -> Result<SubgraphStats, QueryError> {
    require_subgraph(graph, subgraph)?;
    let rows = failure_rows(graph, subgraph);
    let mut histogram = [0usize; HISTOGRAM_BINS];
    for r in &rows {
        histogram[bin_of(r.confidence)] += 1;
    }
    let n = rows.len();
    let mean_confidence = (n > 0).then(|| {
        let sum: i64 = rows.iter().map(|r| r.confidence.micros()).sum();
        let n = n as i64;
        Decimal::from_micros((2 * sum + n) / (2 * n)).round_to(3)
    });
    Ok(SubgraphStats {
        subgraph: subgraph.to_string(),
        n_failure_modes: n,
        mean_confidence,
        histogram,
        n_at_floor: rows.iter().filter(|r| r.confidence <= CONFIDENCE_MIN).count(),
        n_silent: rows.iter().filter(|r| r.silent).count(),
    })
}
