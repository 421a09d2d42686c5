//! Compiles validated documents into deterministic merge plans, applies
//! plans to graphs, and approves pending cross-subgraph edges.

mod cypher;

use std::collections::BTreeMap;

use serde_json::Value;

pub use cypher::emit_cypher;

use crate::canonical::Json;
use crate::decimal::Decimal;
use crate::graph::{
    merge_properties, properties_from_json, properties_to_json, valid_id, Edge, EdgeKey, Graph,
    GraphError, Node, NodeKey, Properties, Property, PropertyValue, ProvenanceTag,
};
use crate::metrics::normalize_label;
use crate::ontology::{SchemaRegistry, AUTOMATION_SUBGRAPH};
use crate::report::ValidationReport;
use crate::seo::{
    ordinal_id, validate_seo, ConfidenceMethod, ElicitationScope, FailureModeClaim, SeoDocument,
    SessionMode,
};

const PLAN_FORMAT: &str = "skg-plan";

/// Scientist recorded on stub nodes that no claim backs.
pub const UNATTRIBUTED: &str = "unattributed";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("document rejected:\n{0}")]
    Rejected(ValidationReport),
    #[error("subgraph mismatch: requested `{requested}`, document declares `{declared}`")]
    SubgraphMismatch { requested: String, declared: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed plan: {0}")]
pub struct PlanFormatError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum StatementTarget {
    Node(NodeKey),
    Edge(EdgeKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeStatement {
    pub target: StatementTarget,
    pub set_properties: Properties,
}

impl MergeStatement {
    pub fn kind(&self) -> &'static str {
        match self.target {
            StatementTarget::Node(_) => "node",
            StatementTarget::Edge(_) => "edge",
        }
    }

    fn to_json(&self) -> Json {
        let mut entries = vec![
            ("kind", Json::str(self.kind())),
            ("set", properties_to_json(&self.set_properties)),
        ];
        match &self.target {
            StatementTarget::Node(key) => entries.push(("target", key.to_json())),
            StatementTarget::Edge(key) => {
                entries.push(("edge_type", Json::str(&key.edge_type)));
                entries.push(("src", key.src.to_json()));
                entries.push(("dst", key.dst.to_json()));
            }
        }
        Json::obj(entries)
    }

    fn from_json(v: &Value) -> Result<MergeStatement, PlanFormatError> {
        let err = |m: &str| PlanFormatError(m.to_string());
        let key = |field: &str| {
            v.get(field)
                .and_then(NodeKey::from_json)
                .ok_or_else(|| err(&format!("statement lacks a valid `{field}`")))
        };
        let target = match v.get("kind").and_then(Value::as_str) {
            Some("node") => StatementTarget::Node(key("target")?),
            Some("edge") => StatementTarget::Edge(EdgeKey {
                edge_type: v
                    .get("edge_type")
                    .and_then(Value::as_str)
                    .ok_or_else(|| err("edge statement lacks `edge_type`"))?
                    .to_string(),
                src: key("src")?,
                dst: key("dst")?,
            }),
            _ => return Err(err("statement kind must be `node` or `edge`")),
        };
        let set_properties = properties_from_json(v.get("set").unwrap_or(&Value::Null))
            .map_err(PlanFormatError)?;
        Ok(MergeStatement {
            target,
            set_properties,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanProvenance {
    pub document_digest: String,
    pub source_scientist: Option<String>,
    pub session_mode: SessionMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergePlan {
    pub registry_version: String,
    pub subgraph: String,
    /// Nodes first, then approved-on-write edges, each in key order.
    pub statements: Vec<MergeStatement>,
    /// Cross-subgraph edges awaiting convergence, in key order.
    pub pending_edges: Vec<MergeStatement>,
    pub provenance: PlanProvenance,
}

impl MergePlan {
    pub fn node_statements(&self) -> impl Iterator<Item = (&NodeKey, &Properties)> {
        self.statements.iter().filter_map(|s| match &s.target {
            StatementTarget::Node(k) => Some((k, &s.set_properties)),
            StatementTarget::Edge(_) => None,
        })
    }

    pub fn edge_statements(&self) -> impl Iterator<Item = (&EdgeKey, &Properties)> {
        self.statements.iter().filter_map(|s| match &s.target {
            StatementTarget::Edge(k) => Some((k, &s.set_properties)),
            StatementTarget::Node(_) => None,
        })
    }

    pub fn count_label(&self, label: &str) -> usize {
        self.node_statements().filter(|(k, _)| k.label == label).count()
    }

    pub fn to_json(&self) -> String {
        let p = &self.provenance;
        Json::obj([
            ("format", Json::str(PLAN_FORMAT)),
            ("registry_version", Json::str(&self.registry_version)),
            ("subgraph", Json::str(&self.subgraph)),
            (
                "provenance",
                Json::obj([
                    ("document_digest", Json::str(&p.document_digest)),
                    (
                        "source_scientist",
                        p.source_scientist.as_ref().map_or(Json::Null, Json::str),
                    ),
                    ("session_mode", Json::str(p.session_mode.as_str())),
                ]),
            ),
            (
                "statements",
                Json::Arr(self.statements.iter().map(MergeStatement::to_json).collect()),
            ),
            (
                "pending_edges",
                Json::Arr(self.pending_edges.iter().map(MergeStatement::to_json).collect()),
            ),
        ])
        .to_pretty()
    }

    pub fn from_json(text: &str) -> Result<MergePlan, PlanFormatError> {
        let v: Value =
            serde_json::from_str(text).map_err(|e| PlanFormatError(e.to_string()))?;
        let err = |m: &str| PlanFormatError(m.to_string());
        if v.get("format").and_then(Value::as_str) != Some(PLAN_FORMAT) {
            return Err(err("not a merge plan"));
        }
        let text_field = |name: &str| {
            v.get(name)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| err(&format!("missing `{name}`")))
        };
        let prov = v.get("provenance").ok_or_else(|| err("missing `provenance`"))?;
        let session_mode = serde_json::from_value(
            prov.get("session_mode").cloned().unwrap_or(Value::Null),
        )
        .map_err(|e| PlanFormatError(format!("provenance.session_mode: {e}")))?;
        let list = |name: &str| -> Result<Vec<MergeStatement>, PlanFormatError> {
            v.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| err(&format!("missing `{name}`")))?
                .iter()
                .map(MergeStatement::from_json)
                .collect()
        };
        let plan = MergePlan {
            registry_version: text_field("registry_version")?,
            subgraph: text_field("subgraph")?,
            statements: list("statements")?,
            pending_edges: list("pending_edges")?,
            provenance: PlanProvenance {
                document_digest: prov
                    .get("document_digest")
                    .and_then(Value::as_str)
                    .ok_or_else(|| err("missing provenance.document_digest"))?
                    .to_string(),
                source_scientist: prov
                    .get("source_scientist")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                session_mode,
            },
        };
        if plan
            .pending_edges
            .iter()
            .any(|s| matches!(&s.target, StatementTarget::Edge(k) if k.src.subgraph == k.dst.subgraph))
        {
            return Err(err("pending edge within a single subgraph"));
        }
        Ok(plan)
    }
}

/// Uppercase key fragment derived from the normalized label. Characters
/// outside ASCII are spelled as hex code points.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for word in normalize_label(name).split(' ').filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push('-');
        }
        for c in word.chars() {
            if c.is_ascii_alphanumeric() {
                out.push(c.to_ascii_uppercase());
            } else {
                out.push_str(&format!("U{:X}", c as u32));
            }
        }
    }
    if out.is_empty() {
        out.push('X');
    }
    out
}

fn tag_for(pre_extracted: bool) -> ProvenanceTag {
    if pre_extracted {
        ProvenanceTag::SchemaDefault
    } else {
        ProvenanceTag::InterviewConfirmed
    }
}

fn decimal(x: f64) -> PropertyValue {
    PropertyValue::Number(Decimal::from_f64(x).unwrap_or_default())
}

/// Accumulates statements keyed by target; repeated targets merge under the
/// graph's provenance policy so the plan holds one statement per target.
#[derive(Default)]
struct PlanBuilder {
    nodes: BTreeMap<NodeKey, Properties>,
    edges: BTreeMap<EdgeKey, Properties>,
}

struct Props {
    tag: ProvenanceTag,
    map: Properties,
}

impl Props {
    fn new(tag: ProvenanceTag) -> Self {
        Props {
            tag,
            map: Properties::new(),
        }
    }

    fn set(mut self, name: &str, value: impl Into<PropertyValue>) -> Self {
        self.map
            .insert(name.to_string(), Property::new(value, self.tag));
        self
    }

    fn set_opt(self, name: &str, value: Option<impl Into<PropertyValue>>) -> Self {
        match value {
            Some(v) => self.set(name, v),
            None => self,
        }
    }

    /// Claimed value, or a schema default when the claim left it null.
    fn set_or_default(mut self, name: &str, value: Option<bool>, default: bool) -> Self {
        let prop = match value {
            Some(v) => Property::new(v, self.tag),
            None => Property::default_value(default),
        };
        self.map.insert(name.to_string(), prop);
        self
    }
}

impl PlanBuilder {
    fn node(&mut self, key: NodeKey, props: Props) -> NodeKey {
        let entry = self.nodes.entry(key.clone()).or_default();
        merge_properties(&key.to_string(), entry, &props.map)
            .expect("compiled properties have fixed kinds");
        key
    }

    fn edge(&mut self, edge_type: &str, src: &NodeKey, dst: &NodeKey) {
        self.edges
            .entry(EdgeKey {
                edge_type: edge_type.to_string(),
                src: src.clone(),
                dst: dst.clone(),
            })
            .or_default();
    }

    fn finish(self, registry: &SchemaRegistry, subgraph: &str, provenance: PlanProvenance) -> MergePlan {
        let mut statements: Vec<MergeStatement> = self
            .nodes
            .into_iter()
            .map(|(k, set_properties)| MergeStatement {
                target: StatementTarget::Node(k),
                set_properties,
            })
            .collect();
        let mut pending_edges = Vec::new();
        for (k, set_properties) in self.edges {
            let crosses = k.src.subgraph != k.dst.subgraph;
            let st = MergeStatement {
                target: StatementTarget::Edge(k),
                set_properties,
            };
            if crosses {
                pending_edges.push(st);
            } else {
                statements.push(st);
            }
        }
        MergePlan {
            registry_version: registry.version.clone(),
            subgraph: subgraph.to_string(),
            statements,
            pending_edges,
            provenance,
        }
    }
}

fn key(subgraph: &str, label: &str, id: &str) -> NodeKey {
    NodeKey {
        subgraph: subgraph.to_string(),
        label: label.to_string(),
        id: id.to_string(),
    }
}

fn stub(name: &str) -> Props {
    Props::new(ProvenanceTag::SchemaDefault)
        .set("name", name)
        .set("flagged_for_review", true)
}

fn stub_failure_mode(name: &str) -> Props {
    stub(name)
        .set("confidence", crate::ontology::CONFIDENCE_MIN)
        .set("confidence_method", ConfidenceMethod::LinguisticApproximation.as_str())
        .set("source_scientist", UNATTRIBUTED)
        .set("silent_failure_risk", false)
        .set("is_critical_path", false)
}

fn automation_use_case(b: &mut PlanBuilder, name: &str, defined: Option<ProvenanceTag>) -> NodeKey {
    let props = match defined {
        Some(tag) => Props::new(tag).set("name", name).set("flagged_for_review", false),
        None => stub(name),
    };
    b.node(key(AUTOMATION_SUBGRAPH, "UseCase", &format!("UC-{}", slug(name))), props)
}

fn automation_asset(
    b: &mut PlanBuilder,
    name: &str,
    defined: Option<(ProvenanceTag, Option<&str>)>,
) -> NodeKey {
    let props = match defined {
        Some((tag, log_scope)) => Props::new(tag)
            .set("name", name)
            .set("flagged_for_review", false)
            .set_opt("log_scope", log_scope),
        None => stub(name),
    };
    b.node(key(AUTOMATION_SUBGRAPH, "AutomationAsset", &format!("AA-{}", slug(name))), props)
}

/// Builds the merge plan for one validated document.
pub fn compile(
    doc: &SeoDocument,
    subgraph: &str,
    registry: &SchemaRegistry,
) -> Result<MergePlan, CompileError> {
    let report = validate_seo(doc);
    if !report.is_empty() {
        return Err(CompileError::Rejected(report));
    }
    if let Some(p) = &doc.protocol {
        if p.subgraph != subgraph {
            return Err(CompileError::SubgraphMismatch {
                requested: subgraph.to_string(),
                declared: p.subgraph.clone(),
            });
        }
    }
    if !valid_id(subgraph) {
        return Err(CompileError::SubgraphMismatch {
            requested: subgraph.to_string(),
            declared: "a subgraph id matching [A-Za-z0-9_-]+".to_string(),
        });
    }

    let sg = subgraph;
    let digest = doc.digest();
    let meta = doc.twin_metadata.as_ref();
    let scientist = meta.and_then(|m| m.source_scientist.clone());
    let mut b = PlanBuilder::default();
    let ic = ProvenanceTag::InterviewConfirmed;

    let mut calibrated: Vec<NodeKey> = Vec::new();
    let mut linguistic = 0i64;
    let mut shelf = 0i64;
    let mut count_method = |m: Option<ConfidenceMethod>| match m {
        Some(ConfidenceMethod::ShelfElicited) => shelf += 1,
        _ => linguistic += 1,
    };

    let mut step_keys: BTreeMap<&str, NodeKey> = BTreeMap::new();
    if let Some(protocol) = &doc.protocol {
        let proto_pre = protocol.pre_extracted == Some(true);
        let wf = b.node(
            key(sg, "AssayWorkflow", &protocol.workflow_id),
            Props::new(tag_for(proto_pre)).set("name", protocol.workflow_name.as_str()),
        );
        let mut ordered: Vec<_> = protocol.steps.iter().collect();
        ordered.sort_by_key(|s| s.step_index);
        for step in &protocol.steps {
            let pre = proto_pre || step.pre_extracted == Some(true);
            let sk = b.node(
                key(sg, "WorkflowStep", &step.id),
                Props::new(tag_for(pre))
                    .set("name", step.name.as_str())
                    .set("step_index", Decimal::from_micros(step.step_index as i64 * 1_000_000))
                    .set_opt("description", step.description.as_deref())
                    .set_opt("is_critical_path", step.is_critical_path),
            );
            b.edge("HAS_STEP", &wf, &sk);
            for uc in &step.required_use_cases {
                let uk = automation_use_case(&mut b, uc, None);
                b.edge("REQUIRES_AUTOMATION", &sk, &uk);
            }
            step_keys.insert(step.id.as_str(), sk);
        }
        for pair in ordered.windows(2) {
            b.edge("PRECEDES", &step_keys[pair[0].id.as_str()], &step_keys[pair[1].id.as_str()]);
        }

        // Defined failure modes resolve cascade names before stubs are made.
        let ids = doc.failure_mode_ids(sg);
        let claims: Vec<(&str, bool, &FailureModeClaim)> = doc
            .failure_modes()
            .map(|(step, fm)| {
                let pre = proto_pre
                    || step.pre_extracted == Some(true)
                    || fm.pre_extracted == Some(true);
                (step.id.as_str(), pre, fm)
            })
            .collect();
        let mut by_name: BTreeMap<String, NodeKey> = BTreeMap::new();
        for (id, (_, _, fm)) in ids.iter().zip(&claims) {
            by_name
                .entry(normalize_label(&fm.name))
                .or_insert_with(|| key(sg, "FailureMode", id));
        }

        for (id, (step_id, pre, fm)) in ids.iter().zip(&claims) {
            let tag = tag_for(*pre);
            let flagged = fm.flagged_for_review.unwrap_or(false);
            let fk = b.node(
                key(sg, "FailureMode", id),
                Props::new(tag)
                    .set("name", fm.name.as_str())
                    .set_opt("description", fm.description.as_deref())
                    .set_opt("confidence", fm.confidence.map(decimal))
                    .set_opt("confidence_method", fm.confidence_method.map(|m| m.as_str()))
                    .set_opt("source_scientist", fm.source_scientist.as_deref())
                    .set_opt("source_phrase", fm.source_phrase.as_deref())
                    .set_or_default("silent_failure_risk", fm.silent_failure_risk, false)
                    .set_or_default("is_critical_path", fm.is_critical_path, false)
                    .set_opt("frequency_min", fm.frequency_min.map(decimal))
                    .set_opt("frequency_best", fm.frequency_best.map(decimal))
                    .set_opt("frequency_max", fm.frequency_max.map(decimal))
                    .set("flagged_for_review", flagged),
            );
            count_method(fm.confidence_method);
            calibrated.push(fk.clone());
            b.edge("CAUSES_IF_INCOMPLETE", &step_keys[step_id], &fk);
            if flagged {
                let af = b.node(
                    key(sg, "AmbiguityFlag", &format!("AF-{id}")),
                    Props::new(tag)
                        .set("name", format!("Review: {}", fm.name))
                        .set("reason", "flagged during elicitation"),
                );
                b.edge("FLAGS", &af, &fk);
            }
            for target in &fm.cascades_to {
                let tk = match by_name.get(&normalize_label(target)) {
                    Some(k) => k.clone(),
                    None => {
                        let stub_id = format!("FM-{sg}-{}", slug(target));
                        let sk = b.node(key(sg, "FailureMode", &stub_id), stub_failure_mode(target));
                        let af = b.node(
                            key(sg, "AmbiguityFlag", &format!("AF-{stub_id}")),
                            stub(&format!("Review: {target}"))
                                .set("reason", "referenced but not elicited"),
                        );
                        b.edge("FLAGS", &af, &sk);
                        sk
                    }
                };
                b.edge("CASCADES_TO", &fk, &tk);
            }
            for asset in &fm.masked_by_assets {
                let ak = automation_asset(&mut b, asset, None);
                b.edge("MASKED_BY", &fk, &ak);
            }
            for signature in &fm.detected_by {
                let ek = b.node(
                    key(sg, "ErrorSignature", &format!("ES-{}", slug(signature))),
                    Props::new(tag).set("name", signature.as_str()),
                );
                b.edge("DETECTED_BY", &fk, &ek);
            }
        }
    }

    let full_scope = doc
        .decision_model
        .as_ref()
        .is_some_and(|d| d.elicitation_scope == ElicitationScope::Full);
    if doc.session_mode != SessionMode::Operational && full_scope {
        for (id, dp) in doc.decision_point_ids(sg).iter().zip(doc.decision_points()) {
            let tag = tag_for(dp.pre_extracted == Some(true));
            let dk = b.node(
                key(sg, "DecisionPoint", id),
                Props::new(tag)
                    .set("name", dp.name.as_str())
                    .set_opt("condition_type", dp.condition_type.as_deref())
                    .set_opt("threshold_value", dp.threshold_value.map(decimal))
                    .set_opt("comparator", dp.comparator.map(|c| c.as_str()))
                    .set_opt("units", dp.units.as_deref())
                    .set_opt("pass_action", dp.pass_action.as_deref())
                    .set_opt("fail_action", dp.fail_action.as_deref())
                    .set_opt("escalation_action", dp.escalation_action.as_deref())
                    .set_opt("confidence", dp.confidence.map(decimal))
                    .set_opt("confidence_method", dp.confidence_method.map(|m| m.as_str()))
                    .set_opt("source_scientist", dp.source_scientist.as_deref()),
            );
            count_method(dp.confidence_method);
            calibrated.push(dk.clone());
            let sk = match step_keys.get(dp.step_id.as_str()) {
                Some(k) => k.clone(),
                None => b.node(
                    key(sg, "WorkflowStep", &dp.step_id),
                    stub(&dp.step_id).set("step_index", Decimal::ZERO),
                ),
            };
            b.edge("HAS_DECISION_POINT", &sk, &dk);
        }
    }

    for (i, ma) in doc.method_alternatives.iter().flatten().enumerate() {
        let mk = b.node(
            key(sg, "MethodAlternative", &ordinal_id("MA", sg, i + 1)),
            Props::new(ic)
                .set("name", ma.name.as_str())
                .set_opt("description", ma.description.as_deref())
                .set_opt("tradeoff", ma.tradeoff.as_deref()),
        );
        let sk = match step_keys.get(ma.step_id.as_str()) {
            Some(k) => k.clone(),
            None => b.node(
                key(sg, "WorkflowStep", &ma.step_id),
                stub(&ma.step_id).set("step_index", Decimal::ZERO),
            ),
        };
        b.edge("HAS_ALTERNATIVE", &sk, &mk);
    }

    for ac in doc.automation_context.iter().flatten() {
        let ak = automation_asset(&mut b, &ac.asset_name, Some((ic, ac.log_scope.as_deref())));
        for uc in &ac.use_case_names {
            let uk = automation_use_case(&mut b, uc, Some(ic));
            b.edge("SUITABLE_FOR", &uk, &ak);
        }
    }

    if let Some(strategic) = &doc.strategic {
        let mut input_ordinal = 0;
        for (m, milestone) in strategic.program_milestones.iter().enumerate() {
            let pm_id = milestone.id.clone().unwrap_or_else(|| ordinal_id("PM", sg, m + 1));
            let pk = b.node(
                key(sg, "ProgramMilestone", &pm_id),
                Props::new(ic)
                    .set("name", milestone.name.as_str())
                    .set_opt("description", milestone.description.as_deref()),
            );
            for input in &milestone.evidentiary_inputs {
                input_ordinal += 1;
                let ei_id = input
                    .id
                    .clone()
                    .unwrap_or_else(|| ordinal_id("EI", sg, input_ordinal));
                let ek = b.node(
                    key(sg, "EvidentiaryInput", &ei_id),
                    Props::new(ic)
                        .set("name", input.name.as_str())
                        .set_opt("required_output", input.required_output.as_deref())
                        .set_opt("quality_threshold", input.quality_threshold.as_deref())
                        .set_opt("decision_consequence", input.decision_consequence.as_deref()),
                );
                b.edge("REQUIRES_EVIDENCE", &pk, &ek);
                for wf in &input.sourced_from {
                    let wk = b.node(
                        key(&wf.subgraph, "AssayWorkflow", &wf.workflow_id),
                        stub(&wf.workflow_id),
                    );
                    b.edge("SOURCED_FROM", &ek, &wk);
                }
            }
        }
    }

    if !calibrated.is_empty() {
        let ck = b.node(
            key(sg, "CalibrationRecord", &format!("CAL-{sg}-{}", &digest[..12])),
            Props::new(ic)
                .set("name", format!("Calibration {sg} {}", &digest[..12]))
                .set("scalar_confidence_method", ConfidenceMethod::LinguisticApproximation.as_str())
                .set("source_scientist", scientist.as_deref().unwrap_or(UNATTRIBUTED))
                .set("session_mode", doc.session_mode.as_str())
                .set_opt("session_date", meta.and_then(|m| m.session_date.as_deref()))
                .set_opt("calibration_status", meta.and_then(|m| m.calibration_status.as_deref()))
                .set("linguistic_count", Decimal::from_micros(linguistic * 1_000_000))
                .set("shelf_count", Decimal::from_micros(shelf * 1_000_000)),
        );
        for k in &calibrated {
            b.edge("CALIBRATED_BY", k, &ck);
        }
    }

    Ok(b.finish(
        registry,
        sg,
        PlanProvenance {
            document_digest: digest,
            source_scientist: scientist,
            session_mode: doc.session_mode,
        },
    ))
}

fn upsert_statement(
    graph: &mut Graph,
    st: &MergeStatement,
    pending: bool,
    registry: &SchemaRegistry,
) -> Result<(), GraphError> {
    match &st.target {
        StatementTarget::Node(k) => graph.upsert_node(Node {
            key: k.clone(),
            properties: st.set_properties.clone(),
        }),
        StatementTarget::Edge(k) => {
            let mut edge = Edge::new(k.edge_type.clone(), k.src.clone(), k.dst.clone()).pending(pending);
            edge.properties = st.set_properties.clone();
            graph.upsert_edge(edge, registry)
        }
    }
}

/// Applies the plan to a copy of `graph`; the input is untouched on error.
pub fn apply(plan: &MergePlan, graph: &Graph, registry: &SchemaRegistry) -> Result<Graph, GraphError> {
    if plan.registry_version != graph.registry_version() {
        return Err(GraphError::RegistryMismatch {
            graph: graph.registry_version().to_string(),
            registry: plan.registry_version.clone(),
        });
    }
    let mut out = graph.clone();
    for st in &plan.statements {
        upsert_statement(&mut out, st, false, registry)?;
    }
    for st in &plan.pending_edges {
        upsert_statement(&mut out, st, true, registry)?;
    }
    Ok(out)
}

/// Clears the pending flag on the selected edges, all or nothing.
pub fn approve_pending(graph: &Graph, selectors: &[EdgeKey]) -> Result<Graph, GraphError> {
    let mut out = graph.clone();
    out.approve(selectors)?;
    Ok(out)
}
