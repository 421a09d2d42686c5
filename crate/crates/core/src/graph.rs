//! Embedded typed property graph with per-property provenance.
//!
//! Nodes are keyed by `(subgraph, label, id)`; edges by `(edge_type, src, dst)`.
//! A [`Graph`] is a plain value: cloning it gives an independent snapshot and
//! all mutation goes through `&mut self`, so a single writer is enforced by
//! the borrow checker.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::canonical::Json;
use crate::decimal::Decimal;
use crate::ontology::SchemaRegistry;

/// Name of the node-level list property that records confirmed-vs-confirmed
/// overwrites.
pub const CONFLICT_LOG: &str = "conflict_log";

const FORMAT_NAME: &str = "skg-graph";
const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("key error: {0}")]
    KeyError(String),
    #[error("type conflict on property `{property}` of {target}: existing {existing}, incoming {incoming}")]
    TypeConflict {
        target: String,
        property: String,
        existing: ValueKind,
        incoming: ValueKind,
    },
    #[error("dangling edge {edge}: endpoint {missing} does not exist")]
    DanglingEdge { edge: String, missing: String },
    #[error("edge type `{0}` is not defined in the schema registry")]
    UnknownEdgeType(String),
    #[error("cross-subgraph violation: {0}")]
    CrossSubgraphViolation(String),
    #[error("endpoint label violation: {0}")]
    EndpointLabelViolation(String),
    #[error("invalid pending flag on {0}: pending edges must cross subgraphs")]
    InvalidPending(String),
    #[error("malformed store line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("registry version mismatch: graph uses `{graph}`, registry is `{registry}`")]
    RegistryMismatch { graph: String, registry: String },
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub(crate) fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Globally unique node address.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeKey {
    pub subgraph: String,
    pub label: String,
    pub id: String,
}

impl NodeKey {
    pub fn new(
        subgraph: impl Into<String>,
        label: impl Into<String>,
        id: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let key = NodeKey {
            subgraph: subgraph.into(),
            label: label.into(),
            id: id.into(),
        };
        key.check()?;
        Ok(key)
    }

    /// Subgraph and label share the id character set; the id must be non-empty
    /// and match `[A-Za-z0-9_-]+`.
    pub fn check(&self) -> Result<(), GraphError> {
        if !valid_id(&self.subgraph) {
            return Err(GraphError::KeyError(format!(
                "malformed subgraph `{}` in {self}",
                self.subgraph
            )));
        }
        if !valid_id(&self.label) {
            return Err(GraphError::KeyError(format!(
                "malformed label `{}` in {self}",
                self.label
            )));
        }
        if !valid_id(&self.id) {
            return Err(GraphError::KeyError(format!(
                "malformed id `{}` in {self}",
                self.id
            )));
        }
        Ok(())
    }

    pub(crate) fn to_json(&self) -> Json {
        Json::obj([
            ("id", Json::str(&self.id)),
            ("label", Json::str(&self.label)),
            ("subgraph", Json::str(&self.subgraph)),
        ])
    }

    pub(crate) fn from_json(v: &Value) -> Option<NodeKey> {
        Some(NodeKey {
            subgraph: v.get("subgraph")?.as_str()?.to_string(),
            label: v.get("label")?.as_str()?.to_string(),
            id: v.get("id")?.as_str()?.to_string(),
        })
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.subgraph, self.label, self.id)
    }
}

impl FromStr for NodeKey {
    type Err = GraphError;

    /// Parses `SUBGRAPH:Label:ID`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(sg), Some(label), Some(id)) => NodeKey::new(sg, label, id),
            _ => Err(GraphError::KeyError(format!(
                "expected SUBGRAPH:Label:ID, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Text,
    Number,
    Boolean,
    TextList,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Boolean => "boolean",
            ValueKind::TextList => "text list",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropertyValue {
    Text(String),
    Number(Decimal),
    Bool(bool),
    List(Vec<String>),
}

impl PropertyValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            PropertyValue::Text(_) => ValueKind::Text,
            PropertyValue::Number(_) => ValueKind::Number,
            PropertyValue::Bool(_) => ValueKind::Boolean,
            PropertyValue::List(_) => ValueKind::TextList,
        }
    }

    pub fn number(value: f64) -> Option<PropertyValue> {
        Decimal::from_f64(value).ok().map(PropertyValue::Number)
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropertyValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_decimal(&self) -> Option<Decimal> {
        match self {
            PropertyValue::Number(d) => Some(*d),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            PropertyValue::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            PropertyValue::List(items) => Some(items),
            _ => None,
        }
    }

    pub(crate) fn to_json(&self) -> Json {
        match self {
            PropertyValue::Text(s) => Json::str(s),
            PropertyValue::Number(d) => Json::Num(*d),
            PropertyValue::Bool(b) => Json::Bool(*b),
            PropertyValue::List(items) => Json::Arr(items.iter().map(Json::str).collect()),
        }
    }

    pub(crate) fn from_json(v: &Value) -> Option<PropertyValue> {
        match v {
            Value::String(s) => Some(PropertyValue::Text(s.clone())),
            Value::Bool(b) => Some(PropertyValue::Bool(*b)),
            Value::Number(n) => n.as_f64().and_then(PropertyValue::number),
            Value::Array(items) => items
                .iter()
                .map(|i| i.as_str().map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .map(PropertyValue::List),
            Value::Null | Value::Object(_) => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json().to_compact())
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Text(s.to_string())
    }
}

impl From<String> for PropertyValue {
    fn from(s: String) -> Self {
        PropertyValue::Text(s)
    }
}

impl From<bool> for PropertyValue {
    fn from(b: bool) -> Self {
        PropertyValue::Bool(b)
    }
}

impl From<Decimal> for PropertyValue {
    fn from(d: Decimal) -> Self {
        PropertyValue::Number(d)
    }
}

impl From<Vec<String>> for PropertyValue {
    fn from(items: Vec<String>) -> Self {
        PropertyValue::List(items)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProvenanceTag {
    #[serde(rename = "SCHEMA_DEFAULT")]
    SchemaDefault,
    #[serde(rename = "INTERVIEW_CONFIRMED")]
    InterviewConfirmed,
}

impl ProvenanceTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ProvenanceTag::SchemaDefault => "SCHEMA_DEFAULT",
            ProvenanceTag::InterviewConfirmed => "INTERVIEW_CONFIRMED",
        }
    }
}

impl FromStr for ProvenanceTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SCHEMA_DEFAULT" => Ok(ProvenanceTag::SchemaDefault),
            "INTERVIEW_CONFIRMED" => Ok(ProvenanceTag::InterviewConfirmed),
            other => Err(format!("unknown provenance tag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Property {
    pub value: PropertyValue,
    pub tag: ProvenanceTag,
}

impl Property {
    pub fn new(value: impl Into<PropertyValue>, tag: ProvenanceTag) -> Self {
        Property {
            value: value.into(),
            tag,
        }
    }

    pub fn confirmed(value: impl Into<PropertyValue>) -> Self {
        Property::new(value, ProvenanceTag::InterviewConfirmed)
    }

    pub fn default_value(value: impl Into<PropertyValue>) -> Self {
        Property::new(value, ProvenanceTag::SchemaDefault)
    }
}

pub type Properties = BTreeMap<String, Property>;

pub(crate) fn properties_to_json(props: &Properties) -> Json {
    Json::Obj(
        props
            .iter()
            .map(|(k, p)| {
                (
                    k.clone(),
                    Json::obj([("tag", Json::str(p.tag.as_str())), ("value", p.value.to_json())]),
                )
            })
            .collect(),
    )
}

pub(crate) fn properties_from_json(v: &Value) -> Result<Properties, String> {
    let map = v.as_object().ok_or("properties must be an object")?;
    let mut out = Properties::new();
    for (name, entry) in map {
        let tag = entry
            .get("tag")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("property `{name}` has no tag"))?
            .parse::<ProvenanceTag>()?;
        let value = entry
            .get("value")
            .and_then(PropertyValue::from_json)
            .ok_or_else(|| format!("property `{name}` has no valid value"))?;
        out.insert(name.clone(), Property { value, tag });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub key: NodeKey,
    pub properties: Properties,
}

impl Node {
    pub fn new(key: NodeKey) -> Self {
        Node {
            key,
            properties: Properties::new(),
        }
    }

    pub fn with(mut self, name: &str, property: Property) -> Self {
        self.properties.insert(name.to_string(), property);
        self
    }

    pub fn get(&self, name: &str) -> Option<&PropertyValue> {
        self.properties.get(name).map(|p| &p.value)
    }

    /// The `name` property, falling back to the id.
    pub fn display_name(&self) -> &str {
        self.get("name")
            .and_then(PropertyValue::as_str)
            .unwrap_or(&self.key.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub edge_type: String,
    pub src: NodeKey,
    pub dst: NodeKey,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})-[{}]->({})", self.src, self.edge_type, self.dst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub edge_type: String,
    pub src: NodeKey,
    pub dst: NodeKey,
    pub properties: Properties,
    pub pending: bool,
}

impl Edge {
    pub fn new(edge_type: impl Into<String>, src: NodeKey, dst: NodeKey) -> Self {
        Edge {
            edge_type: edge_type.into(),
            src,
            dst,
            properties: Properties::new(),
            pending: false,
        }
    }

    pub fn pending(mut self, pending: bool) -> Self {
        self.pending = pending;
        self
    }

    pub fn with(mut self, name: &str, property: Property) -> Self {
        self.properties.insert(name.to_string(), property);
        self
    }

    pub fn key(&self) -> EdgeKey {
        EdgeKey {
            edge_type: self.edge_type.clone(),
            src: self.src.clone(),
            dst: self.dst.clone(),
        }
    }

    pub fn crosses_subgraphs(&self) -> bool {
        self.src.subgraph != self.dst.subgraph
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            other => Err(format!("unknown direction `{other}` (expected out|in)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    registry_version: String,
    nodes: BTreeMap<NodeKey, Node>,
    edges: BTreeMap<EdgeKey, Edge>,
}

/// Applies the provenance merge policy to one property map.
///
/// | existing            | incoming            | result                         |
/// |---------------------|---------------------|--------------------------------|
/// | absent              | any                 | incoming                       |
/// | SCHEMA_DEFAULT      | any                 | incoming                       |
/// | INTERVIEW_CONFIRMED | SCHEMA_DEFAULT      | existing                       |
/// | INTERVIEW_CONFIRMED | INTERVIEW_CONFIRMED | incoming, change logged        |
///
/// The whole incoming map is kind-checked before anything is written.
pub(crate) fn merge_properties(
    target: &str,
    existing: &mut Properties,
    incoming: &Properties,
) -> Result<(), GraphError> {
    for (name, prop) in incoming {
        if name.is_empty() {
            return Err(GraphError::KeyError(format!("empty property name on {target}")));
        }
        if name == CONFLICT_LOG && prop.value.kind() != ValueKind::TextList {
            return Err(GraphError::TypeConflict {
                target: target.to_string(),
                property: name.clone(),
                existing: ValueKind::TextList,
                incoming: prop.value.kind(),
            });
        }
        if let Some(current) = existing.get(name) {
            if current.value.kind() != prop.value.kind() {
                return Err(GraphError::TypeConflict {
                    target: target.to_string(),
                    property: name.clone(),
                    existing: current.value.kind(),
                    incoming: prop.value.kind(),
                });
            }
        }
    }

    let mut log_entries = Vec::new();
    for (name, prop) in incoming {
        if name == CONFLICT_LOG {
            if let PropertyValue::List(entries) = &prop.value {
                log_entries.extend(entries.iter().cloned());
            }
            continue;
        }
        match existing.get(name) {
            None => {
                existing.insert(name.clone(), prop.clone());
            }
            Some(current) => match (current.tag, prop.tag) {
                (ProvenanceTag::SchemaDefault, _) => {
                    existing.insert(name.clone(), prop.clone());
                }
                (ProvenanceTag::InterviewConfirmed, ProvenanceTag::SchemaDefault) => {}
                (ProvenanceTag::InterviewConfirmed, ProvenanceTag::InterviewConfirmed) => {
                    if current.value != prop.value {
                        log_entries.push(format!("{name}: {} -> {}", current.value, prop.value));
                        existing.insert(name.clone(), prop.clone());
                    }
                }
            },
        }
    }

    if !log_entries.is_empty() {
        let mut log = match existing.get(CONFLICT_LOG) {
            Some(Property {
                value: PropertyValue::List(items),
                ..
            }) => items.clone(),
            _ => Vec::new(),
        };
        for entry in log_entries {
            if !log.contains(&entry) {
                log.push(entry);
            }
        }
        existing.insert(CONFLICT_LOG.to_string(), Property::confirmed(log));
    }
    Ok(())
}

impl Graph {
    pub fn new(registry_version: impl Into<String>) -> Self {
        Graph {
            registry_version: registry_version.into(),
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn registry_version(&self) -> &str {
        &self.registry_version
    }

    pub fn node(&self, key: &NodeKey) -> Option<&Node> {
        self.nodes.get(key)
    }

    pub fn edge(&self, key: &EdgeKey) -> Option<&Edge> {
        self.edges.get(key)
    }

    /// Nodes in canonical `(subgraph, label, id)` order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// All edges, pending included, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    /// Edges that have passed convergence.
    pub fn approved_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| !e.pending)
    }

    pub fn pending_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| e.pending)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes_with_label<'a>(
        &'a self,
        subgraph: &'a str,
        label: &'a str,
    ) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes
            .values()
            .filter(move |n| n.key.subgraph == subgraph && n.key.label == label)
    }

    pub fn has_subgraph(&self, subgraph: &str) -> bool {
        self.nodes.keys().any(|k| k.subgraph == subgraph)
    }

    pub fn subgraphs(&self) -> Vec<String> {
        let mut out: Vec<String> = self.nodes.keys().map(|k| k.subgraph.clone()).collect();
        out.dedup();
        out
    }

    /// Inserts the node or merges its properties into the existing one.
    /// Either the whole upsert applies or nothing changes.
    pub fn upsert_node(&mut self, node: Node) -> Result<(), GraphError> {
        node.key.check()?;
        let target = node.key.to_string();
        match self.nodes.get_mut(&node.key) {
            Some(existing) => merge_properties(&target, &mut existing.properties, &node.properties),
            None => {
                let mut props = Properties::new();
                merge_properties(&target, &mut props, &node.properties)?;
                self.nodes.insert(
                    node.key.clone(),
                    Node {
                        key: node.key,
                        properties: props,
                    },
                );
                Ok(())
            }
        }
    }

    /// Inserts or merges an edge. A merged edge stays approved once any
    /// upsert or approval has cleared its pending flag.
    pub fn upsert_edge(&mut self, edge: Edge, registry: &SchemaRegistry) -> Result<(), GraphError> {
        let key = edge.key();
        for endpoint in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(endpoint) {
                return Err(GraphError::DanglingEdge {
                    edge: key.to_string(),
                    missing: endpoint.to_string(),
                });
            }
        }
        let def = registry
            .edge_type(&edge.edge_type)
            .ok_or_else(|| GraphError::UnknownEdgeType(edge.edge_type.clone()))?;
        if !def.allowed_src_labels.contains(&edge.src.label.as_str())
            || !def.allowed_dst_labels.contains(&edge.dst.label.as_str())
        {
            return Err(GraphError::EndpointLabelViolation(format!(
                "{} cannot connect {} to {}",
                edge.edge_type, edge.src.label, edge.dst.label
            )));
        }
        if edge.crosses_subgraphs() && !def.cross_subgraph_allowed {
            return Err(GraphError::CrossSubgraphViolation(format!(
                "{} edges must stay within one subgraph: {key}",
                edge.edge_type
            )));
        }
        if edge.pending && !edge.crosses_subgraphs() {
            return Err(GraphError::InvalidPending(key.to_string()));
        }
        let target = key.to_string();
        match self.edges.get_mut(&key) {
            Some(existing) => {
                merge_properties(&target, &mut existing.properties, &edge.properties)?;
                existing.pending = existing.pending && edge.pending;
                Ok(())
            }
            None => {
                let mut props = Properties::new();
                merge_properties(&target, &mut props, &edge.properties)?;
                self.edges.insert(
                    key,
                    Edge {
                        properties: props,
                        ..edge
                    },
                );
                Ok(())
            }
        }
    }

    /// Clears the pending flag on each selected edge. All selectors are
    /// checked before any edge changes.
    pub fn approve(&mut self, selectors: &[EdgeKey]) -> Result<(), GraphError> {
        for key in selectors {
            match self.edges.get(key) {
                Some(edge) if edge.pending => {}
                Some(_) => {
                    return Err(GraphError::KeyError(format!("edge {key} is not pending")))
                }
                None => return Err(GraphError::KeyError(format!("no such edge {key}"))),
            }
        }
        for key in selectors {
            if let Some(edge) = self.edges.get_mut(key) {
                edge.pending = false;
            }
        }
        Ok(())
    }

    /// Edges of `edge_type` incident to `key` in the given direction, paired
    /// with the node at the other end, ordered by that node's key.
    pub fn neighbors(
        &self,
        key: &NodeKey,
        edge_type: &str,
        direction: Direction,
    ) -> Result<Vec<(&Edge, &Node)>, GraphError> {
        if !self.nodes.contains_key(key) {
            return Err(GraphError::KeyError(format!("no such node {key}")));
        }
        let mut out: Vec<(&Edge, &Node)> = self
            .edges
            .values()
            .filter(|e| e.edge_type == edge_type)
            .filter_map(|e| {
                let other = match direction {
                    Direction::Out if &e.src == key => &e.dst,
                    Direction::In if &e.dst == key => &e.src,
                    _ => return None,
                };
                self.nodes.get(other).map(|n| (e, n))
            })
            .collect();
        out.sort_by(|a, b| a.1.key.cmp(&b.1.key));
        Ok(out)
    }

    /// Deterministic byte form: a header line, then one JSON record per
    /// node, approved edge and pending edge, in that order, each section in
    /// key order.
    pub fn canonical_serialize(&self) -> Vec<u8> {
        let mut out = String::new();
        out.push_str(
            &Json::obj([
                ("format", Json::str(FORMAT_NAME)),
                ("registry_version", Json::str(&self.registry_version)),
                ("version", Json::Int(FORMAT_VERSION)),
            ])
            .to_compact(),
        );
        out.push('\n');
        for node in self.nodes.values() {
            let mut rec = match node.key.to_json() {
                Json::Obj(m) => m,
                _ => unreachable!(),
            };
            rec.insert("kind".into(), Json::str("node"));
            rec.insert("properties".into(), properties_to_json(&node.properties));
            out.push_str(&Json::Obj(rec).to_compact());
            out.push('\n');
        }
        for pending_section in [false, true] {
            for edge in self.edges.values().filter(|e| e.pending == pending_section) {
                let kind = if edge.pending { "pending_edge" } else { "edge" };
                let rec = Json::obj([
                    ("dst", edge.dst.to_json()),
                    ("edge_type", Json::str(&edge.edge_type)),
                    ("kind", Json::str(kind)),
                    ("properties", properties_to_json(&edge.properties)),
                    ("src", edge.src.to_json()),
                ]);
                out.push_str(&rec.to_compact());
                out.push('\n');
            }
        }
        out.into_bytes()
    }

    /// Lowercase hex SHA-256 of [`Graph::canonical_serialize`].
    pub fn graph_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_serialize()))
    }

    /// Parses the newline-delimited store format. Records must be unique
    /// and every edge endpoint must resolve.
    pub fn from_jsonl(text: &str) -> Result<Graph, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let fmt_err = |line: usize, message: String| GraphError::Format {
            line: line + 1,
            message,
        };
        let (hline, header) = lines
            .next()
            .ok_or_else(|| fmt_err(0, "missing header".into()))?;
        let header: Value =
            serde_json::from_str(header).map_err(|e| fmt_err(hline, e.to_string()))?;
        if header.get("format").and_then(Value::as_str) != Some(FORMAT_NAME) {
            return Err(fmt_err(hline, format!("not a {FORMAT_NAME} store")));
        }
        if header.get("version").and_then(Value::as_i64) != Some(FORMAT_VERSION) {
            return Err(fmt_err(hline, "unsupported store version".into()));
        }
        let registry_version = header
            .get("registry_version")
            .and_then(Value::as_str)
            .ok_or_else(|| fmt_err(hline, "missing registry_version".into()))?;
        let mut graph = Graph::new(registry_version);

        let mut edge_lines = Vec::new();
        for (i, line) in lines {
            let rec: Value = serde_json::from_str(line).map_err(|e| fmt_err(i, e.to_string()))?;
            let props = rec
                .get("properties")
                .map(properties_from_json)
                .unwrap_or_else(|| Ok(Properties::new()))
                .map_err(|m| fmt_err(i, m))?;
            match rec.get("kind").and_then(Value::as_str) {
                Some("node") => {
                    let key = NodeKey::from_json(&rec)
                        .ok_or_else(|| fmt_err(i, "node record without key".into()))?;
                    key.check().map_err(|e| fmt_err(i, e.to_string()))?;
                    if graph.nodes.contains_key(&key) {
                        return Err(fmt_err(i, format!("duplicate node {key}")));
                    }
                    graph.nodes.insert(
                        key.clone(),
                        Node {
                            key,
                            properties: props,
                        },
                    );
                }
                Some(kind @ ("edge" | "pending_edge")) => {
                    let src = rec.get("src").and_then(NodeKey::from_json);
                    let dst = rec.get("dst").and_then(NodeKey::from_json);
                    let edge_type = rec.get("edge_type").and_then(Value::as_str);
                    let (Some(src), Some(dst), Some(edge_type)) = (src, dst, edge_type) else {
                        return Err(fmt_err(i, "edge record missing src/dst/edge_type".into()));
                    };
                    edge_lines.push((
                        i,
                        Edge {
                            edge_type: edge_type.to_string(),
                            src,
                            dst,
                            properties: props,
                            pending: kind == "pending_edge",
                        },
                    ));
                }
                _ => return Err(fmt_err(i, "unknown record kind".into())),
            }
        }
        for (i, edge) in edge_lines {
            let key = edge.key();
            for endpoint in [&edge.src, &edge.dst] {
                if !graph.nodes.contains_key(endpoint) {
                    return Err(GraphError::DanglingEdge {
                        edge: format!("{key} (line {})", i + 1),
                        missing: endpoint.to_string(),
                    });
                }
            }
            if edge.pending && !edge.crosses_subgraphs() {
                return Err(GraphError::InvalidPending(key.to_string()));
            }
            if graph.edges.insert(key.clone(), edge).is_some() {
                return Err(fmt_err(i, format!("duplicate edge {key}")));
            }
        }
        Ok(graph)
    }

    pub fn load(path: &Path) -> Result<Graph, StoreError> {
        let text = fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Graph::from_jsonl(&text)?)
    }

    /// Writes the store and its digest file side by side.
    pub fn save(&self, path: &Path) -> Result<PathBuf, StoreError> {
        let io_err = |p: &Path| {
            let p = p.to_path_buf();
            move |source| StoreError::Io { path: p, source }
        };
        fs::write(path, self.canonical_serialize()).map_err(io_err(path))?;
        let digest_path = digest_path(path);
        fs::write(&digest_path, self.digest_record()).map_err(io_err(&digest_path))?;
        Ok(digest_path)
    }

    /// Contents of the `.skg.sha256` file.
    pub fn digest_record(&self) -> String {
        format!("{}  {}\n", self.graph_hash(), self.registry_version)
    }
}

/// `name.skg.jsonl` → `name.skg.sha256`; any other path gets `.sha256`
/// appended.
pub fn digest_path(store: &Path) -> PathBuf {
    let s = store.to_string_lossy();
    match s.strip_suffix(".jsonl") {
        Some(stem) => PathBuf::from(format!("{stem}.sha256")),
        None => PathBuf::from(format!("{s}.sha256")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::builtin_registry;

    fn key(sg: &str, label: &str, id: &str) -> NodeKey {
        NodeKey::new(sg, label, id).unwrap()
    }

    fn fm(conf: f64, tag: ProvenanceTag) -> Node {
        Node::new(key("ELISA", "FailureMode", "FM-ELISA-001")).with(
            "confidence",
            Property::new(Decimal::from_f64(conf).unwrap(), tag),
        )
    }

    #[test]
    fn upsert_into_empty_graph() {
        let mut g = Graph::new("v");
        g.upsert_node(fm(0.90, ProvenanceTag::InterviewConfirmed)).unwrap();
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn repeated_upsert_is_idempotent() {
        let mut once = Graph::new("v");
        once.upsert_node(fm(0.90, ProvenanceTag::InterviewConfirmed)).unwrap();
        let mut twice = once.clone();
        twice.upsert_node(fm(0.90, ProvenanceTag::InterviewConfirmed)).unwrap();
        assert_eq!(once.graph_hash(), twice.graph_hash());
    }

    #[test]
    fn merge_policy_table() {
        use ProvenanceTag::*;
        // (existing, incoming, expected value, expect log)
        let cases = [
            (SchemaDefault, SchemaDefault, 0.70, false),
            (SchemaDefault, InterviewConfirmed, 0.70, false),
            (InterviewConfirmed, SchemaDefault, 0.85, false),
            (InterviewConfirmed, InterviewConfirmed, 0.70, true),
        ];
        for (existing, incoming, expected, logged) in cases {
            let mut g = Graph::new("v");
            g.upsert_node(fm(0.85, existing)).unwrap();
            g.upsert_node(fm(0.70, incoming)).unwrap();
            let node = g.node(&key("ELISA", "FailureMode", "FM-ELISA-001")).unwrap();
            assert_eq!(
                node.get("confidence").unwrap().as_decimal().unwrap(),
                Decimal::from_f64(expected).unwrap(),
                "{existing:?} <- {incoming:?}"
            );
            assert_eq!(node.get(CONFLICT_LOG).is_some(), logged);
        }
    }

    #[test]
    fn confirmed_conflict_logs_once() {
        let mut g = Graph::new("v");
        g.upsert_node(fm(0.85, ProvenanceTag::InterviewConfirmed)).unwrap();
        g.upsert_node(fm(0.70, ProvenanceTag::InterviewConfirmed)).unwrap();
        let snapshot = g.clone();
        g.upsert_node(fm(0.70, ProvenanceTag::InterviewConfirmed)).unwrap();
        assert_eq!(g, snapshot);
        let node = g.node(&key("ELISA", "FailureMode", "FM-ELISA-001")).unwrap();
        assert_eq!(
            node.get(CONFLICT_LOG).unwrap().as_list().unwrap(),
            ["confidence: 0.85 -> 0.7"]
        );
    }

    #[test]
    fn kind_collision_is_a_type_conflict_and_atomic() {
        let mut g = Graph::new("v");
        g.upsert_node(fm(0.85, ProvenanceTag::InterviewConfirmed)).unwrap();
        let before = g.clone();
        let bad = Node::new(key("ELISA", "FailureMode", "FM-ELISA-001"))
            .with("a_new_prop", Property::confirmed("x"))
            .with("confidence", Property::confirmed("high"));
        assert!(matches!(g.upsert_node(bad), Err(GraphError::TypeConflict { .. })));
        assert_eq!(g, before);
    }

    #[test]
    fn malformed_keys_rejected() {
        assert!(NodeKey::new("ELISA", "FailureMode", "").is_err());
        assert!(NodeKey::new("", "FailureMode", "x").is_err());
        assert!(NodeKey::new("ELISA", "FailureMode", "has space").is_err());
        assert!(NodeKey::new("ELISA", "FailureMode", "FM-ELISA_01").is_ok());
        let mut g = Graph::new("v");
        let node = Node {
            key: NodeKey {
                subgraph: "ELISA".into(),
                label: "FailureMode".into(),
                id: "a/b".into(),
            },
            properties: Properties::new(),
        };
        assert!(matches!(g.upsert_node(node), Err(GraphError::KeyError(_))));
    }

    #[test]
    fn node_key_text_round_trip() {
        let k = key("LCMS_PRM", "FailureMode", "FM-LCMS-022");
        assert_eq!(k.to_string().parse::<NodeKey>().unwrap(), k);
        assert!("ELISA:FailureMode".parse::<NodeKey>().is_err());
    }

    fn masked_fixture() -> (Graph, NodeKey, NodeKey) {
        let mut g = Graph::new("v");
        let fm_key = key("ELISA", "FailureMode", "FM-ELISA-001");
        let asset = key("AUTOMATION", "AutomationAsset", "EL406");
        g.upsert_node(Node::new(fm_key.clone())).unwrap();
        g.upsert_node(Node::new(asset.clone()).with("name", Property::confirmed("EL406 Plate Washer")))
            .unwrap();
        (g, fm_key, asset)
    }

    #[test]
    fn pending_edge_is_stored_pending() {
        let reg = builtin_registry();
        let (mut g, fm_key, asset) = masked_fixture();
        let edge = Edge::new("MASKED_BY", fm_key.clone(), asset.clone()).pending(true);
        g.upsert_edge(edge.clone(), &reg).unwrap();
        g.upsert_edge(edge, &reg).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.pending_edges().count(), 1);
        let n = g.neighbors(&fm_key, "MASKED_BY", Direction::Out).unwrap();
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].1.key, asset);
    }

    #[test]
    fn approval_survives_reupsert() {
        let reg = builtin_registry();
        let (mut g, fm_key, asset) = masked_fixture();
        let edge = Edge::new("MASKED_BY", fm_key, asset).pending(true);
        g.upsert_edge(edge.clone(), &reg).unwrap();
        g.approve(&[edge.key()]).unwrap();
        g.upsert_edge(edge.clone(), &reg).unwrap();
        assert_eq!(g.pending_edges().count(), 0);
        assert!(matches!(g.approve(&[edge.key()]), Err(GraphError::KeyError(_))));
    }

    #[test]
    fn within_subgraph_type_cannot_cross() {
        let reg = builtin_registry();
        let mut g = Graph::new("v");
        let wf = key("ELISA", "AssayWorkflow", "WF-1");
        let step = key("LCMS_PRM", "WorkflowStep", "S1");
        g.upsert_node(Node::new(wf.clone())).unwrap();
        g.upsert_node(Node::new(step.clone())).unwrap();
        let err = g.upsert_edge(Edge::new("HAS_STEP", wf, step), &reg).unwrap_err();
        assert!(matches!(err, GraphError::CrossSubgraphViolation(_)));
    }

    #[test]
    fn dangling_and_unknown_edges_rejected() {
        let reg = builtin_registry();
        let (mut g, fm_key, _) = masked_fixture();
        let ghost = key("AUTOMATION", "AutomationAsset", "GHOST");
        let err = g
            .upsert_edge(Edge::new("MASKED_BY", fm_key.clone(), ghost), &reg)
            .unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge { .. }));
        let err = g
            .upsert_edge(Edge::new("NOT_A_TYPE", fm_key.clone(), fm_key), &reg)
            .unwrap_err();
        assert!(matches!(err, GraphError::UnknownEdgeType(_)));
    }

    #[test]
    fn neighbors_of_isolated_node_is_empty() {
        let (g, fm_key, _) = masked_fixture();
        assert!(g.neighbors(&fm_key, "MASKED_BY", Direction::In).unwrap().is_empty());
        let missing = key("ELISA", "FailureMode", "NOPE");
        assert!(g.neighbors(&missing, "MASKED_BY", Direction::Out).is_err());
    }

    #[test]
    fn empty_graph_serializes_to_header() {
        let g = Graph::new("bcp-1");
        assert_eq!(
            String::from_utf8(g.canonical_serialize()).unwrap(),
            "{\"format\":\"skg-graph\",\"registry_version\":\"bcp-1\",\"version\":1}\n"
        );
        assert_eq!(g.graph_hash().len(), 64);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let nodes: Vec<Node> = (0..5)
            .map(|i| {
                Node::new(key("ELISA", "WorkflowStep", &format!("S{i}")))
                    .with("step_index", Property::confirmed(Decimal::from_micros(i * 1_000_000)))
            })
            .collect();
        let mut a = Graph::new("v");
        let mut b = Graph::new("v");
        for n in &nodes {
            a.upsert_node(n.clone()).unwrap();
        }
        for n in nodes.iter().rev() {
            b.upsert_node(n.clone()).unwrap();
        }
        assert_eq!(a.canonical_serialize(), b.canonical_serialize());
    }

    #[test]
    fn one_value_changes_the_hash() {
        let mut a = Graph::new("v");
        a.upsert_node(fm(0.90, ProvenanceTag::InterviewConfirmed)).unwrap();
        let mut b = Graph::new("v");
        b.upsert_node(fm(0.89, ProvenanceTag::InterviewConfirmed)).unwrap();
        assert_ne!(a.graph_hash(), b.graph_hash());
    }

    #[test]
    fn store_round_trip_and_digest_file() {
        let reg = builtin_registry();
        let (mut g, fm_key, asset) = masked_fixture();
        g.upsert_edge(
            Edge::new("MASKED_BY", fm_key, asset)
                .pending(true)
                .with("note", Property::default_value(vec!["a".to_string()])),
            &reg,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.skg.jsonl");
        let digest = g.save(&path).unwrap();
        assert_eq!(digest, dir.path().join("g.skg.sha256"));
        let loaded = Graph::load(&path).unwrap();
        assert_eq!(loaded, g);
        let record = fs::read_to_string(digest).unwrap();
        assert!(record.starts_with(&g.graph_hash()));
        assert!(record.trim_end().ends_with("v"));
    }

    #[test]
    fn loader_rejects_dangling_edges() {
        let text = "{\"format\":\"skg-graph\",\"registry_version\":\"v\",\"version\":1}\n\
            {\"dst\":{\"id\":\"b\",\"label\":\"L\",\"subgraph\":\"S\"},\"edge_type\":\"T\",\"kind\":\"edge\",\"properties\":{},\"src\":{\"id\":\"a\",\"label\":\"L\",\"subgraph\":\"S\"}}\n";
        assert!(matches!(
            Graph::from_jsonl(text),
            Err(GraphError::DanglingEdge { .. })
        ));
    }
}
