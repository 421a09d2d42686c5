//! Confidence utilities: hedge-lexicon scoring and three-point frequency checks.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::decimal::Decimal;
use crate::ontology::{CONFIDENCE_MAX, CONFIDENCE_MIN};

const BUILTIN_LEXICON: &str = include_str!("../../data/hedge_lexicon.toml");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("phrase is empty")]
    EmptyPhrase,
    #[error("no hedge term found in {0:?}")]
    NoHedgeDetected(String),
    #[error("invalid hedge lexicon: {0}")]
    Lexicon(String),
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum ShelfError {
    #[error("frequency_{field} = {value} is outside [0, 1]")]
    RangeError { field: &'static str, value: f64 },
    #[error("frequencies not ordered: min {min}, best {best}, max {max}")]
    OrderViolation { min: f64, best: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeBand {
    pub name: String,
    pub low: Decimal,
    pub high: Decimal,
    pub phrases: Vec<String>,
}

impl HedgeBand {
    pub fn midpoint(&self) -> Decimal {
        Decimal::from_micros((self.low.micros() + self.high.micros()) / 2).round_to(3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeLexicon {
    #[serde(rename = "band")]
    pub bands: Vec<HedgeBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinguisticScore {
    pub confidence: Decimal,
    pub band: String,
    pub matched: String,
}

fn words(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

impl HedgeLexicon {
    pub fn parse(text: &str) -> Result<Self, ScoreError> {
        let lexicon: HedgeLexicon =
            toml::from_str(text).map_err(|e| ScoreError::Lexicon(e.to_string()))?;
        for band in &lexicon.bands {
            if band.low > band.high || band.low < CONFIDENCE_MIN || band.high > CONFIDENCE_MAX {
                return Err(ScoreError::Lexicon(format!(
                    "band {} has bounds [{}, {}]",
                    band.name, band.low, band.high
                )));
            }
            if band.phrases.iter().any(|p| words(p).is_empty()) {
                return Err(ScoreError::Lexicon(format!("band {} has an empty phrase", band.name)));
            }
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScoreError::Lexicon(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn builtin() -> &'static HedgeLexicon {
        static LEXICON: OnceLock<HedgeLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| HedgeLexicon::parse(BUILTIN_LEXICON).expect("builtin lexicon"))
    }

    /// Longest phrase wins; ties go to the earliest position, then to
    /// lexicon order.
    pub fn score(&self, phrase: &str) -> Result<LinguisticScore, ScoreError> {
        let tokens = words(phrase);
        if tokens.is_empty() {
            return Err(ScoreError::EmptyPhrase);
        }
        let mut best: Option<((usize, usize, usize), &HedgeBand, &str)> = None;
        let mut order = 0usize;
        for band in &self.bands {
            for term in &band.phrases {
                let needle = words(term);
                let hit = tokens
                    .windows(needle.len())
                    .position(|w| w == needle.as_slice());
                if let Some(pos) = hit {
                    // smaller is better on every component
                    let rank = (usize::MAX - needle.len(), pos, order);
                    if best.as_ref().is_none_or(|(r, _, _)| rank < *r) {
                        best = Some((rank, band, term));
                    }
                }
                order += 1;
            }
        }
        match best {
            Some((_, band, term)) => Ok(LinguisticScore {
                confidence: band.midpoint(),
                band: band.name.clone(),
                matched: term.to_string(),
            }),
            None => Err(ScoreError::NoHedgeDetected(phrase.to_string())),
        }
    }
}

/// Scores expert phrasing against the builtin hedge lexicon.
pub fn score_linguistic(phrase: &str) -> Result<LinguisticScore, ScoreError> {
    HedgeLexicon::builtin().score(phrase)
}

pub fn validate_shelf(min: f64, best: f64, max: f64) -> Result<(), ShelfError> {
    for (field, value) in [("min", min), ("best", best), ("max", max)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ShelfError::RangeError { field, value });
        }
    }
    if min <= best && best <= max {
        Ok(())
    } else {
        Err(ShelfError::OrderViolation { min, best, max })
    }
}
