//! Typed knowledge graph engine for laboratory workflow twins: elicitation
//! documents, schema registry, deterministic merge plans, federated queries
//! and extraction metrics.

pub mod annotator;
pub mod canonical;
pub mod cli;
pub mod decimal;
pub mod graph;
pub mod metrics;
pub mod ontology;
pub mod queries;
pub mod report;
pub mod seo;

pub use annotator::{apply, approve_pending, compile, emit_cypher, MergePlan, MergeStatement};
pub use decimal::Decimal;
pub use graph::{Edge, EdgeKey, Graph, GraphError, Node, NodeKey, Property, PropertyValue, ProvenanceTag};
pub use ontology::{builtin_registry, validate_graph, SchemaRegistry};
pub use report::{Issue, IssueKind, ValidationReport};
pub use seo::{parse_seo, validate_seo, SeoDocument};
