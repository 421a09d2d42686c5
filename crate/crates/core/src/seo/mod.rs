//! Structured Extraction Object (SEO): the typed document an elicitation
//! session produces, before any graph is built.
//!
//! Parsing is strict: unknown fields are rejected at every level and the
//! seven top-level layer keys must all be present (absent layers are `null`).

mod confidence;
mod validate;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use confidence::{
    score_linguistic, validate_shelf, HedgeBand, HedgeLexicon, LinguisticScore, ScoreError,
    ShelfError,
};
pub use validate::validate_seo;

/// Top-level keys of every document, in schema order.
pub const TOP_LEVEL_KEYS: [&str; 7] = [
    "session_mode",
    "protocol",
    "decision_model",
    "strategic",
    "method_alternatives",
    "automation_context",
    "twin_metadata",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeoError {
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown field `{field}` at line {line}, column {column}")]
    UnknownField {
        field: String,
        line: usize,
        column: usize,
    },
    #[error("value kind mismatch at line {line}, column {column}: {message}")]
    ValueKindMismatch {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing field `{field}` at line {line}, column {column}")]
    MissingField {
        field: String,
        line: usize,
        column: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SessionMode {
    #[serde(rename = "OPERATIONAL")]
    Operational,
    #[serde(rename = "DESIGN_EXPERT")]
    DesignExpert,
    #[serde(rename = "DIRECTOR")]
    Director,
}

impl SessionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionMode::Operational => "OPERATIONAL",
            SessionMode::DesignExpert => "DESIGN_EXPERT",
            SessionMode::Director => "DIRECTOR",
        }
    }
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfidenceMethod {
    #[serde(rename = "linguistic_approximation")]
    LinguisticApproximation,
    #[serde(rename = "SHELF_elicited")]
    ShelfElicited,
}

impl ConfidenceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfidenceMethod::LinguisticApproximation => "linguistic_approximation",
            ConfidenceMethod::ShelfElicited => "SHELF_elicited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "within_range")]
    WithinRange,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
            Comparator::WithinRange => "within_range",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElicitationScope {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "operational_only")]
    OperationalOnly,
}

/// Lists accept `null` as "nothing elicited".
fn null_as_empty<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<Vec<T>>::deserialize(d)?.unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeoDocument {
    pub session_mode: SessionMode,
    pub protocol: Option<ProtocolLayer>,
    pub decision_model: Option<DecisionModelLayer>,
    pub strategic: Option<StrategicLayer>,
    pub method_alternatives: Option<Vec<MethodAlternativeClaim>>,
    pub automation_context: Option<Vec<AutomationContextClaim>>,
    pub twin_metadata: Option<TwinMetadata>,
}

/// Layer 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolLayer {
    pub workflow_id: String,
    pub workflow_name: String,
    pub subgraph: String,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub steps: Vec<StepClaim>,
    #[serde(default)]
    pub pre_extracted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepClaim {
    pub id: String,
    pub name: String,
    pub step_index: u32,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub is_critical_path: Option<bool>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub failure_modes: Vec<FailureModeClaim>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub required_use_cases: Vec<String>,
    #[serde(default)]
    pub pre_extracted: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureModeClaim {
    #[serde(default)]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub confidence_method: Option<ConfidenceMethod>,
    #[serde(default)]
    pub source_scientist: Option<String>,
    #[serde(default)]
    pub source_phrase: Option<String>,
    #[serde(default)]
    pub silent_failure_risk: Option<bool>,
    #[serde(default)]
    pub is_critical_path: Option<bool>,
    #[serde(default)]
    pub frequency_min: Option<f64>,
    #[serde(default)]
    pub frequency_best: Option<f64>,
    #[serde(default)]
    pub frequency_max: Option<f64>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub cascades_to: Vec<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub masked_by_assets: Vec<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub detected_by: Vec<String>,
    #[serde(default)]
    pub flagged_for_review: Option<bool>,
    #[serde(default)]
    pub pre_extracted: Option<bool>,
}

impl FailureModeClaim {
    pub fn has_shelf_fields(&self) -> bool {
        self.frequency_min.is_some() || self.frequency_best.is_some() || self.frequency_max.is_some()
    }
}

/// Layer 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionModelLayer {
    #[serde(rename = "_elicitation_scope")]
    pub elicitation_scope: ElicitationScope,
    #[serde(default)]
    pub decision_points: Option<Vec<DecisionPointClaim>>,
    #[serde(default)]
    pub design_rationale: Option<String>,
}

impl DecisionModelLayer {
    /// The marker an operational session must carry.
    pub fn operational_only() -> Self {
        DecisionModelLayer {
            elicitation_scope: ElicitationScope::OperationalOnly,
            decision_points: None,
            design_rationale: None,
        }
    }

    pub fn has_content(&self) -> bool {
        self.decision_points.is_some() || self.design_rationale.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionPointClaim {
    #[serde(default)]
    pub id: Option<String>,
    pub step_id: String,
    pub name: String,
    #[serde(default)]
    pub condition_type: Option<String>,
    #[serde(default)]
    pub threshold_value: Option<f64>,
    #[serde(default)]
    pub comparator: Option<Comparator>,
    #[serde(default)]
    pub units: Option<String>,
    #[serde(default)]
    pub pass_action: Option<String>,
    #[serde(default)]
    pub fail_action: Option<String>,
    #[serde(default)]
    pub escalation_action: Option<String>,
    #[serde(default)]
    pub confidence: Option<f64>,
    #[serde(default)]
    pub confidence_method: Option<ConfidenceMethod>,
    #[serde(default)]
    pub source_scientist: Option<String>,
    #[serde(default)]
    pub pre_extracted: Option<bool>,
}

/// Layer 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategicLayer {
    #[serde(default, deserialize_with = "null_as_empty")]
    pub cross_domain_knowledge: Vec<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub capability_gaps: Vec<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub future_design_questions: Vec<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub program_milestones: Vec<ProgramMilestoneClaim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramMilestoneClaim {
    #[serde(default)]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub evidentiary_inputs: Vec<EvidentiaryInputClaim>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidentiaryInputClaim {
    #[serde(default)]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub required_output: Option<String>,
    #[serde(default)]
    pub quality_threshold: Option<String>,
    #[serde(default)]
    pub decision_consequence: Option<String>,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub sourced_from: Vec<WorkflowRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowRef {
    pub subgraph: String,
    pub workflow_id: String,
}

/// Layer 4.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodAlternativeClaim {
    pub step_id: String,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub tradeoff: Option<String>,
}

/// Layer 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomationContextClaim {
    pub asset_name: String,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub use_case_names: Vec<String>,
    #[serde(default)]
    pub log_scope: Option<String>,
}

/// Layer 6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinMetadata {
    #[serde(default)]
    pub source_scientist: Option<String>,
    pub session_mode: SessionMode,
    #[serde(default)]
    pub calibration_status: Option<String>,
    #[serde(default)]
    pub session_date: Option<String>,
    #[serde(default)]
    pub elicitation_agent: Option<String>,
}

/// Maps a serde_json data error onto the document error classes.
fn classify(err: serde_json::Error) -> SeoError {
    let (line, column) = (err.line(), err.column());
    if err.is_syntax() || err.is_eof() || err.is_io() {
        return SeoError::ParseError {
            line,
            column,
            message: err.to_string(),
        };
    }
    let msg = err.to_string();
    let quoted = |prefix: &str| -> Option<String> {
        let rest = msg.strip_prefix(prefix)?;
        let rest = rest.strip_prefix('`')?;
        Some(rest.split('`').next().unwrap_or_default().to_string())
    };
    if let Some(field) = quoted("unknown field ") {
        SeoError::UnknownField {
            field,
            line,
            column,
        }
    } else if let Some(field) = quoted("missing field ") {
        SeoError::MissingField {
            field,
            line,
            column,
        }
    } else {
        SeoError::ValueKindMismatch {
            line,
            column,
            message: msg,
        }
    }
}

/// Parses a `.seo.json` document.
pub fn parse_seo(bytes: &[u8]) -> Result<SeoDocument, SeoError> {
    let value: Value = serde_json::from_slice(bytes).map_err(classify)?;
    let Value::Object(top) = &value else {
        return Err(SeoError::ValueKindMismatch {
            line: 1,
            column: 1,
            message: "document must be a JSON object".into(),
        });
    };
    if let Some(extra) = top.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(SeoError::UnknownField {
            field: extra.clone(),
            line: 1,
            column: 1,
        });
    }
    if let Some(missing) = TOP_LEVEL_KEYS.iter().find(|k| !top.contains_key(**k)) {
        return Err(SeoError::MissingField {
            field: missing.to_string(),
            line: 1,
            column: 1,
        });
    }
    // Second pass over the bytes keeps line/column information for
    // nested errors.
    serde_json::from_slice(bytes).map_err(classify)
}

impl SeoDocument {
    /// Pretty JSON; every layer key is written, `null` when absent.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// SHA-256 of the compact serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("document serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn failure_modes(&self) -> impl Iterator<Item = (&StepClaim, &FailureModeClaim)> {
        self.protocol
            .iter()
            .flat_map(|p| &p.steps)
            .flat_map(|s| s.failure_modes.iter().map(move |fm| (s, fm)))
    }

    pub fn decision_points(&self) -> impl Iterator<Item = &DecisionPointClaim> {
        self.decision_model
            .iter()
            .filter_map(|d| d.decision_points.as_ref())
            .flatten()
    }

    /// Failure-mode ids in document order: explicit ids as given, the rest
    /// numbered `FM-<SUBGRAPH>-<nnn>` by their ordinal among all failure modes.
    pub fn failure_mode_ids(&self, subgraph: &str) -> Vec<String> {
        self.failure_modes()
            .enumerate()
            .map(|(i, (_, fm))| {
                fm.id
                    .clone()
                    .unwrap_or_else(|| ordinal_id("FM", subgraph, i + 1))
            })
            .collect()
    }

    pub fn decision_point_ids(&self, subgraph: &str) -> Vec<String> {
        self.decision_points()
            .enumerate()
            .map(|(i, dp)| {
                dp.id
                    .clone()
                    .unwrap_or_else(|| ordinal_id("DP", subgraph, i + 1))
            })
            .collect()
    }

    pub fn is_populated<T>(layer: &Option<Vec<T>>) -> bool {
        layer.as_ref().is_some_and(|v| !v.is_empty())
    }
}

pub(crate) fn ordinal_id(prefix: &str, subgraph: &str, ordinal: usize) -> String {
    format!("{prefix}-{subgraph}-{ordinal:03}")
}
