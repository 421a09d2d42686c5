use std::fmt::Write as _;

use super::{MergePlan, MergeStatement, StatementTarget};
use crate::graph::{NodeKey, Properties, PropertyValue};

pub const PENDING_BANNER: &str = "// PENDING CONVERGENCE";

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn literal(value: &PropertyValue) -> String {
    match value {
        PropertyValue::Text(s) => quote(s),
        PropertyValue::Number(d) => d.to_string(),
        PropertyValue::Bool(b) => b.to_string(),
        PropertyValue::List(items) => {
            let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
            format!("[{}]", inner.join(", "))
        }
    }
}

fn pattern(var: &str, key: &NodeKey) -> String {
    format!(
        "({var}:{} {{subgraph:{}, id:{}}})",
        key.label,
        quote(&key.subgraph),
        quote(&key.id)
    )
}

fn set_clause(var: &str, props: &Properties) -> String {
    if props.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = props
        .iter()
        .map(|(k, p)| format!("{var}.{k} = {}", literal(&p.value)))
        .collect();
    format!(" SET {}", parts.join(", "))
}

fn line(st: &MergeStatement) -> String {
    match &st.target {
        StatementTarget::Node(key) => format!(
            "MERGE {}{} ;",
            pattern("n", key),
            set_clause("n", &st.set_properties)
        ),
        StatementTarget::Edge(key) => format!(
            "MATCH {}, {} MERGE (a)-[r:{}]->(b){} ;",
            pattern("a", &key.src),
            pattern("b", &key.dst),
            key.edge_type,
            set_clause("r", &st.set_properties)
        ),
    }
}

/// One MERGE statement per line, nodes first; pending edges follow the
/// convergence banner. Provenance tags are not part of the output.
pub fn emit_cypher(plan: &MergePlan) -> String {
    let mut out = String::new();
    for st in &plan.statements {
        let _ = writeln!(out, "{}", line(st));
    }
    if !plan.pending_edges.is_empty() {
        let _ = writeln!(out, "{PENDING_BANNER}");
        for st in &plan.pending_edges {
            let _ = writeln!(out, "{}", line(st));
        }
    }
    out
}
