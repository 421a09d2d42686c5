//! Set-matching metrics between two extractions of the same session:
//! label normalization, exact matching, precision/recall/F1, and
//! multi-run consistency reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use serde::Serialize;
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::graph::Graph;
use crate::seo::SeoDocument;

const BUILTIN_ALIASES: &str = include_str!("../data/aliases.txt");

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("need at least two runs, or one run and a reference; got {runs} run(s)")]
    ArityError { runs: usize },
    #[error("alias table line {line}: {message}")]
    AliasSyntax { line: usize, message: String },
    #[error("cannot read alias table {path}: {source}")]
    AliasIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercase, NFKC-normalized, bracketed qualifiers and punctuation removed,
/// whitespace collapsed. No alias lookup.
pub fn normalize_plain(name: &str) -> String {
    let folded: String = name.nfkc().collect::<String>().to_lowercase();
    let mut out = String::with_capacity(folded.len());
    let mut depth = 0usize;
    for c in folded.chars() {
        match c {
            '(' | '[' | '{' => {
                depth += 1;
                out.push(' ');
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                out.push(' ');
            }
            _ if depth > 0 => {}
            c if c.is_alphanumeric() => out.push(c),
            _ => out.push(' '),
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Variant → canonical label map. Keys and values are stored normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasTable {
    entries: BTreeMap<String, String>,
}

impl AliasTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Parses `variant = canonical` lines; blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((variant, canonical)) = line.split_once('=') else {
                return Err(MetricsError::AliasSyntax {
                    line: i + 1,
                    message: "expected `variant = canonical`".into(),
                });
            };
            let (v, c) = (normalize_plain(variant), normalize_plain(canonical));
            if v.is_empty() || c.is_empty() {
                return Err(MetricsError::AliasSyntax {
                    line: i + 1,
                    message: "empty alias side".into(),
                });
            }
            entries.insert(v, c);
        }
        Ok(AliasTable { entries })
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(|source| MetricsError::AliasIo {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn builtin() -> &'static AliasTable {
        static TABLE: OnceLock<AliasTable> = OnceLock::new();
        TABLE.get_or_init(|| AliasTable::parse(BUILTIN_ALIASES).expect("builtin alias table parses"))
    }

    /// Builtin entries overlaid with `other`.
    pub fn merged_with(&self, other: &AliasTable) -> AliasTable {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.clone());
        AliasTable { entries }
    }

    pub fn normalize(&self, name: &str) -> String {
        let plain = normalize_plain(name);
        self.entries.get(&plain).cloned().unwrap_or(plain)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Normalization with the builtin alias table.
pub fn normalize_label(name: &str) -> String {
    AliasTable::builtin().normalize(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub matched_pairs: Vec<(String, String)>,
    pub unmatched_reference: Vec<String>,
    pub unmatched_candidate: Vec<String>,
}

/// First spelling seen for each normalized label.
fn by_normalized<'a>(
    names: impl IntoIterator<Item = &'a str>,
    aliases: &AliasTable,
) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for n in names {
        out.entry(aliases.normalize(n)).or_insert_with(|| n.to_string());
    }
    out
}

/// Exact matching on normalized labels. Names that normalize identically
/// collapse to one entry, so the pairing is one-to-one.
pub fn match_failure_modes<'a>(
    reference: impl IntoIterator<Item = &'a str>,
    candidate: impl IntoIterator<Item = &'a str>,
    aliases: &AliasTable,
) -> MatchResult {
    let reference = by_normalized(reference, aliases);
    let candidate = by_normalized(candidate, aliases);
    let mut matched_pairs = Vec::new();
    let mut unmatched_reference = Vec::new();
    for (norm, name) in &reference {
        match candidate.get(norm) {
            Some(c) => matched_pairs.push((name.clone(), c.clone())),
            None => unmatched_reference.push(name.clone()),
        }
    }
    let unmatched_candidate: Vec<String> = candidate
        .iter()
        .filter(|(norm, _)| !reference.contains_key(*norm))
        .map(|(_, n)| n.clone())
        .collect();
    MatchResult {
        true_positives: matched_pairs.len(),
        false_positives: unmatched_candidate.len(),
        false_negatives: unmatched_reference.len(),
        matched_pairs,
        unmatched_reference,
        unmatched_candidate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Standard precision/recall/F1; any zero denominator yields 0.
pub fn f1(m: &MatchResult) -> Scores {
    let precision = ratio(m.true_positives, m.true_positives + m.false_positives);
    let recall = ratio(m.true_positives, m.true_positives + m.false_negatives);
    let f1 = if m.true_positives == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
    }
}

pub fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

/// Something a pipeline run produced: an elicitation document or a graph.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Extraction {
    Document(SeoDocument),
    Graph(Graph),
    Names {
        failure_modes: Vec<String>,
        method_alternatives: Vec<String>,
    },
}

impl Extraction {
    pub fn failure_mode_names(&self) -> Vec<String> {
        match self {
            Extraction::Document(doc) => doc
                .protocol
                .iter()
                .flat_map(|p| &p.steps)
                .flat_map(|s| &s.failure_modes)
                .map(|fm| fm.name.clone())
                .collect(),
            Extraction::Graph(g) => g
                .nodes()
                .filter(|n| n.key.label == "FailureMode")
                .map(|n| n.display_name().to_string())
                .collect(),
            Extraction::Names { failure_modes, .. } => failure_modes.clone(),
        }
    }

    pub fn method_alternative_names(&self) -> Vec<String> {
        match self {
            Extraction::Document(doc) => doc
                .method_alternatives
                .iter()
                .flatten()
                .map(|m| m.name.clone())
                .collect(),
            Extraction::Graph(g) => g
                .nodes()
                .filter(|n| n.key.label == "MethodAlternative")
                .map(|n| n.display_name().to_string())
                .collect(),
            Extraction::Names {
                method_alternatives,
                ..
            } => method_alternatives.clone(),
        }
    }

    pub fn digest(&self) -> String {
        match self {
            Extraction::Document(doc) => doc.digest(),
            Extraction::Graph(g) => g.graph_hash(),
            Extraction::Names {
                failure_modes,
                method_alternatives,
            } => {
                let mut h = Sha256::new();
                for n in failure_modes {
                    h.update(n.as_bytes());
                    h.update(b"\n");
                }
                h.update(b"--\n");
                for n in method_alternatives {
                    h.update(n.as_bytes());
                    h.update(b"\n");
                }
                hex::encode(h.finalize())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    WithinAgent,
    CrossAgent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScore {
    /// Run index used as reference; `None` means the external reference.
    pub reference: Option<usize>,
    pub candidate: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub method_alternative_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub mode: ComparisonMode,
    pub fm_precision: f64,
    pub fm_recall: f64,
    pub fm_f1: f64,
    pub fm_f1_variance: f64,
    pub method_alternative_recall: Option<f64>,
    pub comparisons: Vec<PairScore>,
    pub run_digests: Vec<String>,
    pub warnings: Vec<String>,
}

fn score_pair(
    reference: &Extraction,
    candidate: &Extraction,
    reference_idx: Option<usize>,
    candidate_idx: usize,
    aliases: &AliasTable,
    warnings: &mut Vec<String>,
) -> PairScore {
    let ref_fm = reference.failure_mode_names();
    let cand_fm = candidate.failure_mode_names();
    let m = match_failure_modes(
        ref_fm.iter().map(String::as_str),
        cand_fm.iter().map(String::as_str),
        aliases,
    );
    let mut s = f1(&m);
    let label = |i: Option<usize>| i.map_or("reference".to_string(), |i| format!("run {i}"));
    if ref_fm.is_empty() && cand_fm.is_empty() {
        s = Scores {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
        warnings.push(format!(
            "{} vs run {candidate_idx}: both failure-mode sets are empty; reported as identical",
            label(reference_idx)
        ));
    }
    let ref_ma = reference.method_alternative_names();
    let cand_ma = candidate.method_alternative_names();
    let ma_recall = if ref_ma.is_empty() && cand_ma.is_empty() {
        None
    } else if ref_ma.is_empty() {
        warnings.push(format!(
            "{} has no method alternatives; recall for run {candidate_idx} reported as 0",
            label(reference_idx)
        ));
        Some(0.0)
    } else {
        let mm = match_failure_modes(
            ref_ma.iter().map(String::as_str),
            cand_ma.iter().map(String::as_str),
            aliases,
        );
        Some(f1(&mm).recall)
    };
    PairScore {
        reference: reference_idx,
        candidate: candidate_idx,
        true_positives: m.true_positives,
        false_positives: m.false_positives,
        false_negatives: m.false_negatives,
        precision: round4(s.precision),
        recall: round4(s.recall),
        f1: round4(s.f1),
        method_alternative_recall: ma_recall.map(round4),
    }
}

/// Within-agent mode (no reference): every unordered pair of runs.
/// Cross-agent mode: each run against the reference.
pub fn compare_extractions(
    runs: &[Extraction],
    reference: Option<&Extraction>,
    aliases: &AliasTable,
) -> Result<ConsistencyReport, MetricsError> {
    let mut warnings = Vec::new();
    let (mode, comparisons) = match reference {
        Some(r) if !runs.is_empty() => (
            ComparisonMode::CrossAgent,
            runs.iter()
                .enumerate()
                .map(|(i, run)| score_pair(r, run, None, i, aliases, &mut warnings))
                .collect::<Vec<_>>(),
        ),
        None if runs.len() >= 2 => {
            let mut out = Vec::new();
            for i in 0..runs.len() {
                for j in i + 1..runs.len() {
                    out.push(score_pair(&runs[i], &runs[j], Some(i), j, aliases, &mut warnings));
                }
            }
            (ComparisonMode::WithinAgent, out)
        }
        _ => return Err(MetricsError::ArityError { runs: runs.len() }),
    };
    let n = comparisons.len() as f64;
    let mean = |f: fn(&PairScore) -> f64| comparisons.iter().map(f).sum::<f64>() / n;
    let fm_f1 = mean(|c| c.f1);
    let fm_f1_variance = comparisons
        .iter()
        .map(|c| (c.f1 - fm_f1).powi(2))
        .sum::<f64>()
        / n;
    let ma: Vec<f64> = comparisons
        .iter()
        .filter_map(|c| c.method_alternative_recall)
        .collect();
    Ok(ConsistencyReport {
        mode,
        fm_precision: round4(mean(|c| c.precision)),
        fm_recall: round4(mean(|c| c.recall)),
        fm_f1: round4(fm_f1),
        fm_f1_variance: round4(fm_f1_variance),
        method_alternative_recall: (!ma.is_empty())
            .then(|| round4(ma.iter().sum::<f64>() / ma.len() as f64)),
        run_digests: runs.iter().map(Extraction::digest).collect(),
        comparisons,
        warnings,
    })
}

impl ConsistencyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(out, "mode\t{}", match self.mode {
            ComparisonMode::WithinAgent => "within_agent",
            ComparisonMode::CrossAgent => "cross_agent",
        });
        let _ = writeln!(out, "fm_precision\t{:.4}", self.fm_precision);
        let _ = writeln!(out, "fm_recall\t{:.4}", self.fm_recall);
        let _ = writeln!(out, "fm_f1\t{:.4}", self.fm_f1);
        let _ = writeln!(out, "fm_f1_variance\t{:.4}", self.fm_f1_variance);
        let _ = writeln!(out, "method_alternative_recall\t{}", opt(self.method_alternative_recall));
        let _ = writeln!(out, "reference\tcandidate\ttp\tfp\tfn\tprecision\trecall\tf1\tma_recall");
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{}",
                c.reference.map_or("reference".to_string(), |i| i.to_string()),
                c.candidate,
                c.true_positives,
                c.false_positives,
                c.false_negatives,
                c.precision,
                c.recall,
                c.f1,
                opt(c.method_alternative_recall)
            );
        }
        for (i, d) in self.run_digests.iter().enumerate() {
            let _ = writeln!(out, "digest\t{i}\t{d}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning\t{w}");
        }
        out
    }
}

/// Distinct normalized labels; used for set-level checks.
pub fn normalized_set<'a>(names: impl IntoIterator<Item = &'a str>, aliases: &AliasTable) -> BTreeSet<String> {
    names.into_iter().map(|n| aliases.normalize(n)).collect()
}
