//! Upper-ontology registry: node types with tier assignments, edge types with
//! endpoint and federation constraints, and whole-graph validation.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::decimal::Decimal;
use crate::graph::{Graph, Node, PropertyValue, ValueKind};
use crate::report::{IssueKind, ValidationReport};

pub const REGISTRY_VERSION: &str = "bcp-ontology-1";

/// Subgraph holding the shared automation vocabulary (use cases and assets).
pub const AUTOMATION_SUBGRAPH: &str = "AUTOMATION";

pub const CONFIDENCE_MIN: Decimal = Decimal::from_micros(600_000);
pub const CONFIDENCE_MAX: Decimal = Decimal::ONE;

pub const CONFIDENCE_METHODS: &[&str] = &["linguistic_approximation", "SHELF_elicited"];
pub const COMPARATORS: &[&str] = &["<", "<=", ">", ">=", "==", "within_range"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TierId {
    #[serde(rename = "TIER1_PROGRAM")]
    Program,
    #[serde(rename = "TIER2_PROTOCOL")]
    Protocol,
    #[serde(rename = "TIER3_EXECUTION")]
    Execution,
}

impl fmt::Display for TierId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TierId::Program => "TIER1_PROGRAM",
            TierId::Protocol => "TIER2_PROTOCOL",
            TierId::Execution => "TIER3_EXECUTION",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyDef {
    pub name: &'static str,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeTypeDef {
    pub label: &'static str,
    pub tier: TierId,
    pub required_properties: Vec<PropertyDef>,
    pub optional_properties: Vec<PropertyDef>,
}

impl NodeTypeDef {
    pub fn property(&self, name: &str) -> Option<&PropertyDef> {
        self.required_properties
            .iter()
            .chain(&self.optional_properties)
            .find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeTypeDef {
    pub name: &'static str,
    pub allowed_src_labels: Vec<&'static str>,
    pub allowed_dst_labels: Vec<&'static str>,
    pub cross_tier: bool,
    pub cross_subgraph_allowed: bool,
    /// `true` for the published core vocabulary, `false` for the plumbing
    /// edges this implementation adds.
    pub core_vocabulary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaRegistry {
    pub version: String,
    pub node_types: BTreeMap<&'static str, NodeTypeDef>,
    pub edge_types: BTreeMap<&'static str, EdgeTypeDef>,
}

impl SchemaRegistry {
    pub fn node_type(&self, label: &str) -> Option<&NodeTypeDef> {
        self.node_types.get(label)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeTypeDef> {
        self.edge_types.get(name)
    }

    pub fn tier_of(&self, label: &str) -> Option<TierId> {
        self.node_type(label).map(|d| d.tier)
    }

    /// Endpoint labels that do not resolve to a node type.
    pub fn dangling_endpoint_labels(&self) -> Vec<(&'static str, &'static str)> {
        self.edge_types
            .values()
            .flat_map(|e| {
                e.allowed_src_labels
                    .iter()
                    .chain(&e.allowed_dst_labels)
                    .map(move |l| (e.name, *l))
            })
            .filter(|(_, l)| !self.node_types.contains_key(l))
            .collect()
    }

    pub fn core_edge_names(&self) -> Vec<&'static str> {
        self.edge_types
            .values()
            .filter(|e| e.core_vocabulary)
            .map(|e| e.name)
            .collect()
    }

    /// Human-readable schema listing.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema registry {}", self.version);
        let _ = writeln!(out);
        let _ = writeln!(out, "NODE TYPES");
        for tier in [TierId::Program, TierId::Protocol, TierId::Execution] {
            let _ = writeln!(out, "  {tier}");
            for def in self.node_types.values().filter(|d| d.tier == tier) {
                let _ = writeln!(out, "    {}", def.label);
                let fmt_props = |props: &[PropertyDef]| {
                    props
                        .iter()
                        .map(|p| format!("{}:{}", p.name, p.kind))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let _ = writeln!(out, "      required: {}", fmt_props(&def.required_properties));
                let _ = writeln!(out, "      optional: {}", fmt_props(&def.optional_properties));
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "EDGE TYPES");
        for def in self.edge_types.values() {
            let _ = writeln!(
                out,
                "  {}  {} -> {}  cross_tier={} cross_subgraph={} vocabulary={}",
                def.name,
                def.allowed_src_labels.join("|"),
                def.allowed_dst_labels.join("|"),
                yes_no(def.cross_tier),
                yes_no(def.cross_subgraph_allowed),
                if def.core_vocabulary { "core" } else { "extension" },
            );
        }
        out
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn props(list: &[(&'static str, ValueKind)]) -> Vec<PropertyDef> {
    list.iter()
        .map(|&(name, kind)| PropertyDef { name, kind })
        .collect()
}

/// Optional properties every node type accepts.
const COMMON_OPTIONAL: &[(&str, ValueKind)] = &[
    ("flagged_for_review", ValueKind::Boolean),
    ("conflict_log", ValueKind::TextList),
];

fn node_def(
    label: &'static str,
    tier: TierId,
    required: &[(&'static str, ValueKind)],
    optional: &[(&'static str, ValueKind)],
) -> NodeTypeDef {
    let mut req = vec![("name", ValueKind::Text)];
    req.extend_from_slice(required);
    let mut opt = optional.to_vec();
    opt.extend_from_slice(COMMON_OPTIONAL);
    NodeTypeDef {
        label,
        tier,
        required_properties: props(&req),
        optional_properties: props(&opt),
    }
}

fn edge_def(
    name: &'static str,
    src: &[&'static str],
    dst: &[&'static str],
    cross_tier: bool,
    cross_subgraph_allowed: bool,
    core_vocabulary: bool,
) -> EdgeTypeDef {
    EdgeTypeDef {
        name,
        allowed_src_labels: src.to_vec(),
        allowed_dst_labels: dst.to_vec(),
        cross_tier,
        cross_subgraph_allowed,
        core_vocabulary,
    }
}

/// The fixed laboratory-workflow registry.
pub fn builtin_registry() -> SchemaRegistry {
    use ValueKind::*;
    let confidence_fields: &[(&str, ValueKind)] = &[
        ("confidence", Number),
        ("confidence_method", Text),
        ("source_scientist", Text),
    ];
    let fm_required: Vec<_> = confidence_fields
        .iter()
        .copied()
        .chain([
            ("silent_failure_risk", Boolean),
            ("is_critical_path", Boolean),
            ("flagged_for_review", Boolean),
        ])
        .collect();

    let nodes = vec![
        node_def("ProgramMilestone", TierId::Program, &[], &[("description", Text)]),
        node_def(
            "EvidentiaryInput",
            TierId::Program,
            &[
                ("required_output", Text),
                ("quality_threshold", Text),
                ("decision_consequence", Text),
            ],
            &[],
        ),
        node_def("AssayWorkflow", TierId::Protocol, &[], &[]),
        node_def(
            "WorkflowStep",
            TierId::Protocol,
            &[("step_index", Number)],
            &[("description", Text), ("is_critical_path", Boolean)],
        ),
        node_def(
            "DecisionPoint",
            TierId::Protocol,
            confidence_fields,
            &[
                ("condition_type", Text),
                ("threshold_value", Number),
                ("comparator", Text),
                ("units", Text),
                ("pass_action", Text),
                ("fail_action", Text),
                ("escalation_action", Text),
            ],
        ),
        NodeTypeDef {
            label: "FailureMode",
            tier: TierId::Protocol,
            required_properties: props(&[&[("name", Text)], fm_required.as_slice()].concat()),
            optional_properties: props(&[
                ("description", Text),
                ("source_phrase", Text),
                ("frequency_min", Number),
                ("frequency_best", Number),
                ("frequency_max", Number),
                ("conflict_log", TextList),
            ]),
        },
        node_def(
            "MethodAlternative",
            TierId::Protocol,
            &[],
            &[("description", Text), ("tradeoff", Text)],
        ),
        node_def("AmbiguityFlag", TierId::Protocol, &[], &[("reason", Text)]),
        node_def(
            "CalibrationRecord",
            TierId::Protocol,
            &[("scalar_confidence_method", Text), ("source_scientist", Text)],
            &[
                ("session_mode", Text),
                ("session_date", Text),
                ("calibration_status", Text),
                ("linguistic_count", Number),
                ("shelf_count", Number),
            ],
        ),
        node_def("AutomationAsset", TierId::Execution, &[], &[("log_scope", Text)]),
        node_def("UseCase", TierId::Execution, &[], &[]),
        node_def("ErrorSignature", TierId::Execution, &[], &[]),
    ];

    const TIER2: &[&str] = &[
        "AssayWorkflow",
        "WorkflowStep",
        "DecisionPoint",
        "FailureMode",
        "MethodAlternative",
        "AmbiguityFlag",
        "CalibrationRecord",
    ];

    let edges = vec![
        edge_def("SOURCED_FROM", &["EvidentiaryInput"], &["AssayWorkflow"], true, true, true),
        edge_def("CAUSES_IF_INCOMPLETE", &["WorkflowStep"], &["FailureMode"], false, false, true),
        edge_def("MASKED_BY", &["FailureMode"], &["AutomationAsset"], true, true, true),
        edge_def("REQUIRES_AUTOMATION", &["WorkflowStep"], &["UseCase"], true, true, true),
        edge_def("SUITABLE_FOR", &["UseCase"], &["AutomationAsset"], false, false, true),
        edge_def("REQUIRES_EVIDENCE", &["ProgramMilestone"], &["EvidentiaryInput"], false, false, false),
        edge_def("HAS_STEP", &["AssayWorkflow"], &["WorkflowStep"], false, false, false),
        edge_def("PRECEDES", &["WorkflowStep"], &["WorkflowStep"], false, false, false),
        edge_def("HAS_DECISION_POINT", &["WorkflowStep"], &["DecisionPoint"], false, false, false),
        edge_def("CASCADES_TO", &["FailureMode"], &["FailureMode"], false, false, false),
        edge_def("DETECTED_BY", &["FailureMode"], &["ErrorSignature"], true, false, false),
        edge_def("HAS_ALTERNATIVE", &["WorkflowStep"], &["MethodAlternative"], false, false, false),
        edge_def("FLAGS", &["AmbiguityFlag"], TIER2, false, false, false),
        edge_def(
            "CALIBRATED_BY",
            &["FailureMode", "DecisionPoint"],
            &["CalibrationRecord"],
            false,
            false,
            false,
        ),
    ];

    SchemaRegistry {
        version: REGISTRY_VERSION.to_string(),
        node_types: nodes.into_iter().map(|d| (d.label, d)).collect(),
        edge_types: edges.into_iter().map(|d| (d.name, d)).collect(),
    }
}

fn check_node(node: &Node, registry: &SchemaRegistry, report: &mut ValidationReport) {
    let loc = node.key.to_string();
    let Some(def) = registry.node_type(&node.key.label) else {
        report.push(
            IssueKind::UnknownLabel,
            &loc,
            format!("label `{}` is not in the registry", node.key.label),
        );
        return;
    };
    for p in &def.required_properties {
        if !node.properties.contains_key(p.name) {
            report.push(
                IssueKind::MissingRequiredProperty,
                &loc,
                format!("missing required property `{}`", p.name),
            );
        }
    }
    for (name, prop) in &node.properties {
        if let Some(pdef) = def.property(name) {
            if pdef.kind != prop.value.kind() {
                report.push(
                    IssueKind::ValueKindMismatch,
                    &loc,
                    format!("`{name}` should be {}, found {}", pdef.kind, prop.value.kind()),
                );
            }
        }
    }
    if let Some(conf) = node.get("confidence").and_then(PropertyValue::as_decimal) {
        if def.property("confidence").is_some() && !(CONFIDENCE_MIN..=CONFIDENCE_MAX).contains(&conf) {
            report.push(
                IssueKind::ConfidenceOutOfRange,
                &loc,
                format!("confidence {conf} outside [0.6, 1]"),
            );
        }
    }
    let enum_checks: [(&str, &[&str]); 2] =
        [("confidence_method", CONFIDENCE_METHODS), ("comparator", COMPARATORS)];
    for (name, allowed) in enum_checks {
        if def.property(name).is_none() {
            continue;
        }
        if let Some(v) = node.get(name).and_then(PropertyValue::as_str) {
            if !allowed.contains(&v) {
                report.push(
                    IssueKind::InvalidEnumValue,
                    &loc,
                    format!("`{name}` = `{v}` is not one of {}", allowed.join(", ")),
                );
            }
        }
    }
    let freq: Vec<Option<Decimal>> = ["frequency_min", "frequency_best", "frequency_max"]
        .iter()
        .map(|n| node.get(n).and_then(PropertyValue::as_decimal))
        .collect();
    if let [Some(lo), Some(best), Some(hi)] = freq[..] {
        if [lo, best, hi].iter().any(|v| !(Decimal::ZERO..=Decimal::ONE).contains(v)) {
            report.push(
                IssueKind::ShelfRangeViolation,
                &loc,
                format!("frequency triple ({lo}, {best}, {hi}) outside [0, 1]"),
            );
        }
        if !(lo <= best && best <= hi) {
            report.push(
                IssueKind::ShelfOrderViolation,
                &loc,
                format!("frequency triple ({lo}, {best}, {hi}) is not ordered min <= best <= max"),
            );
        }
    }
}

/// Validates every node and edge against the registry. Issues are data; the
/// graph is valid iff the returned report is empty.
pub fn validate_graph(graph: &Graph, registry: &SchemaRegistry) -> ValidationReport {
    let mut report = ValidationReport::new();
    for node in graph.nodes() {
        check_node(node, registry, &mut report);
    }
    for edge in graph.edges() {
        let loc = edge.key().to_string();
        let Some(def) = registry.edge_type(&edge.edge_type) else {
            report.push(
                IssueKind::UnknownEdgeType,
                &loc,
                format!("edge type `{}` is not in the registry", edge.edge_type),
            );
            continue;
        };
        if !def.allowed_src_labels.contains(&edge.src.label.as_str())
            || !def.allowed_dst_labels.contains(&edge.dst.label.as_str())
        {
            report.push(
                IssueKind::EndpointLabelViolation,
                &loc,
                format!(
                    "{} expects {} -> {}, found {} -> {}",
                    def.name,
                    def.allowed_src_labels.join("|"),
                    def.allowed_dst_labels.join("|"),
                    edge.src.label,
                    edge.dst.label
                ),
            );
        }
        if edge.crosses_subgraphs() && !def.cross_subgraph_allowed {
            report.push(
                IssueKind::CrossSubgraphViolation,
                &loc,
                format!("{} may not cross subgraphs", def.name),
            );
        }
        if !def.cross_tier {
            if let (Some(a), Some(b)) = (
                registry.tier_of(&edge.src.label),
                registry.tier_of(&edge.dst.label),
            ) {
                if a != b {
                    report.push(
                        IssueKind::TierViolation,
                        &loc,
                        format!("within-tier edge {} spans {a} -> {b}", def.name),
                    );
                }
            }
        }
        if edge.edge_type == "MASKED_BY" {
            let silent = graph
                .node(&edge.src)
                .and_then(|n| n.get("silent_failure_risk"))
                .and_then(PropertyValue::as_bool);
            if silent == Some(false) {
                report.push(
                    IssueKind::SilentFlagInconsistent,
                    &loc,
                    "masked failure mode has silent_failure_risk = false",
                );
            }
        }
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, GraphError, NodeKey, Property};

    #[test]
    fn registry_vocabulary() {
        let reg = builtin_registry();
        assert_eq!(reg.node_types.len(), 12);
        assert_eq!(reg.edge_types.len(), 14);
        let masked = reg.edge_type("MASKED_BY").unwrap();
        assert_eq!(masked.allowed_src_labels, ["FailureMode"]);
        assert_eq!(masked.allowed_dst_labels, ["AutomationAsset"]);
        assert!(masked.cross_tier && masked.cross_subgraph_allowed);
        assert!(reg.dangling_endpoint_labels().is_empty());
        let mut core = reg.core_edge_names();
        core.sort();
        assert_eq!(
            core,
            [
                "CAUSES_IF_INCOMPLETE",
                "MASKED_BY",
                "REQUIRES_AUTOMATION",
                "SOURCED_FROM",
                "SUITABLE_FOR"
            ]
        );
    }

    #[test]
    fn tiers_are_assigned() {
        let reg = builtin_registry();
        let count = |t| reg.node_types.values().filter(|d| d.tier == t).count();
        assert_eq!(count(TierId::Program), 2);
        assert_eq!(count(TierId::Protocol), 7);
        assert_eq!(count(TierId::Execution), 3);
    }

    #[test]
    fn mandatory_fields_on_failure_mode_and_decision_point() {
        let reg = builtin_registry();
        for label in ["FailureMode", "DecisionPoint"] {
            let def = reg.node_type(label).unwrap();
            for f in ["confidence", "confidence_method", "source_scientist"] {
                assert!(def.required_properties.iter().any(|p| p.name == f), "{label}.{f}");
            }
        }
    }

    fn fm_node(conf: f64) -> Node {
        Node::new(NodeKey::new("ELISA", "FailureMode", "FM-1").unwrap())
            .with("name", Property::confirmed("x"))
            .with("confidence", Property::confirmed(Decimal::from_f64(conf).unwrap()))
            .with("confidence_method", Property::confirmed("linguistic_approximation"))
            .with("source_scientist", Property::confirmed("S1"))
            .with("silent_failure_risk", Property::confirmed(false))
            .with("is_critical_path", Property::confirmed(false))
            .with("flagged_for_review", Property::confirmed(false))
    }

    #[test]
    fn empty_graph_is_valid() {
        assert!(validate_graph(&Graph::new(REGISTRY_VERSION), &builtin_registry()).is_empty());
    }

    #[test]
    fn low_confidence_is_flagged() {
        let mut g = Graph::new(REGISTRY_VERSION);
        g.upsert_node(fm_node(0.55)).unwrap();
        let report = validate_graph(&g, &builtin_registry());
        assert_eq!(report.kinds(), [IssueKind::ConfidenceOutOfRange]);
    }

    #[test]
    fn unordered_frequency_triple_is_flagged() {
        let mut g = Graph::new(REGISTRY_VERSION);
        let node = fm_node(0.8)
            .with("frequency_min", Property::confirmed(Decimal::from_f64(0.1).unwrap()))
            .with("frequency_best", Property::confirmed(Decimal::from_f64(0.05).unwrap()))
            .with("frequency_max", Property::confirmed(Decimal::from_f64(0.2).unwrap()));
        g.upsert_node(node).unwrap();
        let report = validate_graph(&g, &builtin_registry());
        assert_eq!(report.kinds(), [IssueKind::ShelfOrderViolation]);
    }

    #[test]
    fn wrong_kind_missing_and_unknown_label() {
        let mut g = Graph::new(REGISTRY_VERSION);
        g.upsert_node(
            Node::new(NodeKey::new("ELISA", "WorkflowStep", "S1").unwrap())
                .with("name", Property::confirmed(true)),
        )
        .unwrap();
        g.upsert_node(Node::new(NodeKey::new("ELISA", "Gizmo", "G1").unwrap())).unwrap();
        let report = validate_graph(&g, &builtin_registry());
        assert_eq!(
            report.kinds(),
            [
                IssueKind::UnknownLabel,
                IssueKind::MissingRequiredProperty,
                IssueKind::ValueKindMismatch
            ]
        );
    }

    #[test]
    fn masked_by_with_wrong_endpoint_is_flagged() {
        let reg = builtin_registry();
        let mut g = Graph::new(REGISTRY_VERSION);
        let fm = fm_node(0.8).with("silent_failure_risk", Property::confirmed(true));
        let step = NodeKey::new("ELISA", "WorkflowStep", "S1").unwrap();
        g.upsert_node(fm.clone()).unwrap();
        g.upsert_node(
            Node::new(step.clone())
                .with("name", Property::confirmed("s"))
                .with("step_index", Property::confirmed(Decimal::ONE)),
        )
        .unwrap();
        let err = g.upsert_edge(Edge::new("MASKED_BY", fm.key, step), &reg);
        assert!(matches!(err, Err(GraphError::EndpointLabelViolation(_))));
        assert!(validate_graph(&g, &reg).is_empty());
    }

    #[test]
    fn listing_mentions_every_type() {
        let reg = builtin_registry();
        let text = reg.listing();
        for label in reg.node_types.keys().chain(reg.edge_types.keys()) {
            assert!(text.contains(label), "{label}");
        }
    }
}
