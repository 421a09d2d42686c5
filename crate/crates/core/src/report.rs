use std::fmt;

use serde::Serialize;

/// Every issue class produced by graph and document validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum IssueKind {
    // graph / registry
    UnknownLabel,
    UnknownEdgeType,
    EndpointLabelViolation,
    MissingRequiredProperty,
    ValueKindMismatch,
    InvalidEnumValue,
    ConfidenceOutOfRange,
    ShelfOrderViolation,
    ShelfRangeViolation,
    CrossSubgraphViolation,
    TierViolation,
    SilentFlagInconsistent,
    // elicitation documents
    ContaminationGuardViolation,
    ModeGateViolation,
    MissingMandatoryField,
    ShelfEligibilityViolation,
    ShelfIncomplete,
    MetadataMissing,
    MetadataInconsistent,
    StepIndexViolation,
    DuplicateId,
    EmptyName,
    InvalidId,
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Issue {
    pub location: String,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.kind, self.location, self.message)
    }
}

/// Ordered list of issues; an empty report means "valid".
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidationReport {
    issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: IssueKind, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            location: location.into(),
            kind,
            message: message.into(),
        });
    }

    /// Sorts by (location, kind, message) and drops exact duplicates.
    pub fn finish(mut self) -> Self {
        self.issues.sort();
        self.issues.dedup();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn kinds(&self) -> Vec<IssueKind> {
        self.issues.iter().map(|i| i.kind).collect()
    }

    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "{issue}")?;
        }
        Ok(())
    }
}
