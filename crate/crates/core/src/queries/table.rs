use serde::{Serialize, Serializer};

use crate::graph::NodeKey;

pub(crate) fn key_string<S: Serializer>(key: &NodeKey, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(key)
}

/// A record that renders as one tab-separated row.
pub trait Tabular {
    fn headers() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tsv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(OutputFormat::Tsv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected tsv|json)")),
        }
    }
}

fn clean(cell: &str) -> String {
    cell.replace(['\t', '\n', '\r'], " ")
}

pub(crate) fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub(crate) fn list(items: &[String]) -> String {
    items.join("|")
}

pub fn to_tsv<T: Tabular>(rows: &[T]) -> String {
    let mut out = T::headers().join("\t");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.cells().iter().map(|c| clean(c)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize>(rows: &T) -> String {
    let mut text = serde_json::to_string_pretty(rows).expect("rows serialize");
    text.push('\n');
    text
}

pub fn render<T: Tabular + Serialize>(rows: &[T], format: OutputFormat) -> String {
    match format {
        OutputFormat::Tsv => to_tsv(rows),
        OutputFormat::Json => to_json(&rows),
    }
}
