use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use super::{
    ConfidenceMethod, DecisionModelLayer, ElicitationScope, FailureModeClaim, SeoDocument,
    SessionMode,
};
use crate::decimal::Decimal;
use crate::graph::valid_id;
use crate::ontology::{CONFIDENCE_MAX, CONFIDENCE_MIN};
use crate::report::{IssueKind, ValidationReport};

fn check_name(report: &mut ValidationReport, loc: &str, field: &str, value: &str) {
    if value.trim().is_empty() {
        report.push(IssueKind::EmptyName, loc, format!("{field} is empty"));
    }
}

fn check_id(report: &mut ValidationReport, loc: &str, field: &str, value: &str) {
    if !valid_id(value) {
        report.push(
            IssueKind::InvalidId,
            loc,
            format!("{field} {value:?} must match [A-Za-z0-9_-]+"),
        );
    }
}

fn check_confidence(
    report: &mut ValidationReport,
    loc: &str,
    confidence: Option<f64>,
    method: Option<ConfidenceMethod>,
    scientist: Option<&str>,
) {
    match confidence {
        None => report.push(IssueKind::MissingMandatoryField, loc, "confidence is null"),
        Some(c) => {
            let in_range = Decimal::from_f64(c)
                .is_ok_and(|d| (CONFIDENCE_MIN..=CONFIDENCE_MAX).contains(&d));
            if !in_range {
                report.push(
                    IssueKind::ConfidenceOutOfRange,
                    loc,
                    format!("confidence {c} outside [0.60, 1.00]"),
                );
            }
        }
    }
    if method.is_none() {
        report.push(IssueKind::MissingMandatoryField, loc, "confidence_method is null");
    }
    if scientist.is_none_or(|s| s.trim().is_empty()) {
        report.push(IssueKind::MissingMandatoryField, loc, "source_scientist is null");
    }
}

fn check_shelf(report: &mut ValidationReport, loc: &str, fm: &FailureModeClaim) {
    let fields = [
        ("frequency_min", fm.frequency_min),
        ("frequency_max", fm.frequency_max),
        ("frequency_best", fm.frequency_best),
    ];
    let present = fields.iter().filter(|(_, v)| v.is_some()).count();
    let shelf_method = fm.confidence_method == Some(ConfidenceMethod::ShelfElicited);
    if present > 0
        && !(fm.silent_failure_risk == Some(true) || fm.is_critical_path == Some(true))
    {
        report.push(
            IssueKind::ShelfEligibilityViolation,
            loc,
            "frequency fields require silent_failure_risk or is_critical_path",
        );
    }
    if (present > 0 || shelf_method) && present < 3 {
        report.push(
            IssueKind::ShelfIncomplete,
            loc,
            "frequency_min, frequency_best and frequency_max must all be present",
        );
    }
    let mut in_range = true;
    for (name, value) in fields {
        if let Some(v) = value {
            if !(0.0..=1.0).contains(&v) {
                in_range = false;
                report.push(
                    IssueKind::ShelfRangeViolation,
                    loc,
                    format!("{name} {v} outside [0, 1]"),
                );
            }
        }
    }
    if let (Some(min), Some(best), Some(max)) = (fm.frequency_min, fm.frequency_best, fm.frequency_max) {
        if in_range && !(min <= best && best <= max) {
            report.push(
                IssueKind::ShelfOrderViolation,
                loc,
                format!("expected min <= best <= max, got {min}, {best}, {max}"),
            );
        }
    }
}

fn check_mode_gates(report: &mut ValidationReport, doc: &SeoDocument) {
    let gate = |report: &mut ValidationReport, loc: &str, msg: &str| {
        report.push(IssueKind::ModeGateViolation, loc, msg.to_string());
    };
    match doc.session_mode {
        SessionMode::Operational => {
            match &doc.decision_model {
                None => gate(
                    report,
                    "decision_model",
                    "OPERATIONAL sessions must carry _elicitation_scope \"operational_only\"",
                ),
                Some(dm) => check_guard(report, dm),
            }
            if doc.strategic.is_some() {
                gate(report, "strategic", "OPERATIONAL sessions may populate Layer 1 only");
            }
            if doc.method_alternatives.is_some() {
                gate(report, "method_alternatives", "OPERATIONAL sessions may populate Layer 1 only");
            }
            if doc.automation_context.is_some() {
                gate(report, "automation_context", "OPERATIONAL sessions may populate Layer 1 only");
            }
        }
        SessionMode::DesignExpert => {
            if doc.strategic.is_some() {
                gate(report, "strategic", "DESIGN_EXPERT sessions may not populate Layer 3");
            }
        }
        SessionMode::Director => {
            if doc.protocol.is_some() {
                gate(report, "protocol", "DIRECTOR sessions have no protocol anchor");
            }
            if doc.method_alternatives.is_some() {
                gate(report, "method_alternatives", "DIRECTOR sessions may not populate Layer 4");
            }
            if doc.automation_context.is_some() {
                gate(report, "automation_context", "DIRECTOR sessions may not populate Layer 5");
            }
        }
    }
    if doc.session_mode != SessionMode::Operational {
        if let Some(dm) = &doc.decision_model {
            if dm.elicitation_scope == ElicitationScope::OperationalOnly && dm.has_content() {
                gate(
                    report,
                    "decision_model",
                    "_elicitation_scope \"operational_only\" requires every other field to be null",
                );
            }
        }
    }
}

fn check_guard(report: &mut ValidationReport, dm: &DecisionModelLayer) {
    let guard = IssueKind::ContaminationGuardViolation;
    if dm.elicitation_scope != ElicitationScope::OperationalOnly {
        report.push(
            guard,
            "decision_model._elicitation_scope",
            "OPERATIONAL sessions must use \"operational_only\"",
        );
    }
    if dm.decision_points.is_some() {
        report.push(
            guard,
            "decision_model.decision_points",
            "decision points populated from an OPERATIONAL session",
        );
    }
    if dm.design_rationale.is_some() {
        report.push(
            guard,
            "decision_model.design_rationale",
            "design rationale populated from an OPERATIONAL session",
        );
    }
}

fn check_metadata(report: &mut ValidationReport, doc: &SeoDocument) {
    let Some(meta) = &doc.twin_metadata else {
        report.push(IssueKind::MetadataMissing, "twin_metadata", "twin_metadata is null");
        return;
    };
    let loc = "twin_metadata";
    if meta.source_scientist.as_deref().is_none_or(|s| s.trim().is_empty()) {
        report.push(IssueKind::MetadataMissing, loc, "source_scientist is null or empty");
    }
    match meta.session_date.as_deref() {
        None => report.push(IssueKind::MetadataMissing, loc, "session_date is null"),
        Some(d) if NaiveDate::parse_from_str(d, "%Y-%m-%d").is_err() => report.push(
            IssueKind::MetadataInconsistent,
            loc,
            format!("session_date {d:?} is not an ISO-8601 date"),
        ),
        Some(_) => {}
    }
    if meta.session_mode != doc.session_mode {
        report.push(
            IssueKind::MetadataInconsistent,
            loc,
            format!(
                "session_mode {} differs from document mode {}",
                meta.session_mode, doc.session_mode
            ),
        );
    }
}

/// Checks a parsed document against session-mode gates, the contamination
/// guard, mandatory fields, confidence and SHELF rules, and metadata.
pub fn validate_seo(doc: &SeoDocument) -> ValidationReport {
    let mut report = ValidationReport::new();
    check_mode_gates(&mut report, doc);
    check_metadata(&mut report, doc);

    let mut step_ids = BTreeSet::new();
    if let Some(protocol) = &doc.protocol {
        check_id(&mut report, "protocol", "workflow_id", &protocol.workflow_id);
        check_id(&mut report, "protocol", "subgraph", &protocol.subgraph);
        check_name(&mut report, "protocol", "workflow_name", &protocol.workflow_name);

        let mut indices: Vec<u32> = Vec::new();
        for (i, step) in protocol.steps.iter().enumerate() {
            let loc = format!("protocol.steps[{i}]");
            check_id(&mut report, &loc, "id", &step.id);
            check_name(&mut report, &loc, "name", &step.name);
            if !step_ids.insert(step.id.as_str()) {
                report.push(IssueKind::DuplicateId, &loc, format!("step id {} repeated", step.id));
            }
            indices.push(step.step_index);
            for (u, name) in step.required_use_cases.iter().enumerate() {
                check_name(&mut report, &loc, &format!("required_use_cases[{u}]"), name);
            }
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &s)| s as usize != i + 1) {
            report.push(
                IssueKind::StepIndexViolation,
                "protocol.steps",
                format!("step_index values {indices:?} are not unique and contiguous from 1"),
            );
        }

        let ids = doc.failure_mode_ids(&protocol.subgraph);
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        let mut n = 0;
        for (s, step) in protocol.steps.iter().enumerate() {
            for (f, fm) in step.failure_modes.iter().enumerate() {
                let loc = format!("protocol.steps[{s}].failure_modes[{f}]");
                let id = ids[n].as_str();
                n += 1;
                check_id(&mut report, &loc, "id", id);
                if seen.insert(id, n).is_some() || step_ids.contains(id) {
                    report.push(IssueKind::DuplicateId, &loc, format!("failure mode id {id} repeated"));
                }
                check_name(&mut report, &loc, "name", &fm.name);
                check_confidence(
                    &mut report,
                    &loc,
                    fm.confidence,
                    fm.confidence_method,
                    fm.source_scientist.as_deref(),
                );
                check_shelf(&mut report, &loc, fm);
                if !fm.masked_by_assets.is_empty() && fm.silent_failure_risk != Some(true) {
                    report.push(
                        IssueKind::SilentFlagInconsistent,
                        &loc,
                        "masked_by_assets present but silent_failure_risk is not true",
                    );
                }
                for (field, names) in [
                    ("cascades_to", &fm.cascades_to),
                    ("masked_by_assets", &fm.masked_by_assets),
                    ("detected_by", &fm.detected_by),
                ] {
                    for (k, name) in names.iter().enumerate() {
                        check_name(&mut report, &loc, &format!("{field}[{k}]"), name);
                    }
                }
            }
        }
    }

    let subgraph = doc.protocol.as_ref().map_or("DOC", |p| p.subgraph.as_str());
    let dp_ids = doc.decision_point_ids(subgraph);
    let mut seen_dp = BTreeSet::new();
    for (i, dp) in doc.decision_points().enumerate() {
        let loc = format!("decision_model.decision_points[{i}]");
        check_id(&mut report, &loc, "id", &dp_ids[i]);
        if !seen_dp.insert(dp_ids[i].as_str()) {
            report.push(IssueKind::DuplicateId, &loc, format!("decision point id {} repeated", dp_ids[i]));
        }
        check_id(&mut report, &loc, "step_id", &dp.step_id);
        if doc.protocol.is_some() && !step_ids.contains(dp.step_id.as_str()) {
            report.push(IssueKind::InvalidId, &loc, format!("step_id {} names no protocol step", dp.step_id));
        }
        check_name(&mut report, &loc, "name", &dp.name);
        check_confidence(
            &mut report,
            &loc,
            dp.confidence,
            dp.confidence_method,
            dp.source_scientist.as_deref(),
        );
    }

    for (i, ma) in doc.method_alternatives.iter().flatten().enumerate() {
        let loc = format!("method_alternatives[{i}]");
        check_name(&mut report, &loc, "name", &ma.name);
        check_id(&mut report, &loc, "step_id", &ma.step_id);
        if doc.protocol.is_some() && !step_ids.contains(ma.step_id.as_str()) {
            report.push(IssueKind::InvalidId, &loc, format!("step_id {} names no protocol step", ma.step_id));
        }
    }

    for (i, ac) in doc.automation_context.iter().flatten().enumerate() {
        let loc = format!("automation_context[{i}]");
        check_name(&mut report, &loc, "asset_name", &ac.asset_name);
        for (u, name) in ac.use_case_names.iter().enumerate() {
            check_name(&mut report, &loc, &format!("use_case_names[{u}]"), name);
        }
    }

    if let Some(strategic) = &doc.strategic {
        for (field, items) in [
            ("cross_domain_knowledge", &strategic.cross_domain_knowledge),
            ("capability_gaps", &strategic.capability_gaps),
            ("future_design_questions", &strategic.future_design_questions),
        ] {
            for (k, text) in items.iter().enumerate() {
                check_name(&mut report, "strategic", &format!("{field}[{k}]"), text);
            }
        }
        for (m, milestone) in strategic.program_milestones.iter().enumerate() {
            let loc = format!("strategic.program_milestones[{m}]");
            check_name(&mut report, &loc, "name", &milestone.name);
            if let Some(id) = &milestone.id {
                check_id(&mut report, &loc, "id", id);
            }
            for (e, input) in milestone.evidentiary_inputs.iter().enumerate() {
                let loc = format!("{loc}.evidentiary_inputs[{e}]");
                check_name(&mut report, &loc, "name", &input.name);
                if let Some(id) = &input.id {
                    check_id(&mut report, &loc, "id", id);
                }
                for field in [&input.required_output, &input.quality_threshold, &input.decision_consequence] {
                    if field.is_none() {
                        report.push(
                            IssueKind::MissingMandatoryField,
                            &loc,
                            "required_output, quality_threshold and decision_consequence are mandatory",
                        );
                    }
                }
                for r in &input.sourced_from {
                    check_id(&mut report, &loc, "sourced_from.subgraph", &r.subgraph);
                    check_id(&mut report, &loc, "sourced_from.workflow_id", &r.workflow_id);
                }
            }
        }
    }

    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seo::parse_seo;

    const DESIGN: &str = r#"{
  "session_mode": "DESIGN_EXPERT",
  "protocol": {
    "workflow_id": "WF-ELISA", "workflow_name": "Sandwich ELISA", "subgraph": "ELISA",
    "steps": [
      {"id": "S01", "name": "Plate Washing", "step_index": 1, "failure_modes": [
        {"name": "Washer Carryover", "confidence": 0.9, "confidence_method": "SHELF_elicited",
         "source_scientist": "Scientist A", "silent_failure_risk": true, "is_critical_path": true,
         "frequency_min": 0.01, "frequency_best": 0.05, "frequency_max": 0.15,
         "masked_by_assets": ["EL406 Plate Washer"]}
      ]},
      {"id": "S02", "name": "Plate Readout", "step_index": 2}
    ]
  },
  "decision_model": {"_elicitation_scope": "full", "decision_points": [
    {"step_id": "S02", "name": "Blank OD check", "threshold_value": 0.1, "comparator": "<",
     "pass_action": "continue", "fail_action": "rewash", "escalation_action": "notify",
     "confidence": 0.8, "confidence_method": "linguistic_approximation", "source_scientist": "Scientist A"}
  ], "design_rationale": null},
  "strategic": null,
  "method_alternatives": null,
  "automation_context": null,
  "twin_metadata": {"source_scientist": "Scientist A", "session_mode": "DESIGN_EXPERT", "calibration_status": "uncalibrated", "session_date": "2025-03-14", "elicitation_agent": "copilot"}
}"#;

    fn design() -> SeoDocument {
        parse_seo(DESIGN.as_bytes()).unwrap()
    }

    fn first_fm(doc: &mut SeoDocument) -> &mut FailureModeClaim {
        &mut doc.protocol.as_mut().unwrap().steps[0].failure_modes[0]
    }

    #[test]
    fn valid_design_document() {
        let report = validate_seo(&design());
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn contamination_guard() {
        let text = super::super::tests::MINIMAL_OPERATIONAL;
        let mut doc = parse_seo(text.as_bytes()).unwrap();
        assert!(validate_seo(&doc).is_empty());
        let mut dps = design().decision_model.unwrap().decision_points;
        dps.as_mut().unwrap()[0].step_id = "S01".into();
        doc.decision_model.as_mut().unwrap().decision_points = dps;
        assert_eq!(
            validate_seo(&doc).kinds(),
            [IssueKind::ContaminationGuardViolation]
        );
    }

    #[test]
    fn director_with_protocol() {
        let mut doc = design();
        doc.session_mode = SessionMode::Director;
        doc.twin_metadata.as_mut().unwrap().session_mode = SessionMode::Director;
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::ModeGateViolation]);
    }

    #[test]
    fn shelf_eligibility() {
        let mut doc = design();
        let fm = first_fm(&mut doc);
        fm.silent_failure_risk = Some(false);
        fm.is_critical_path = Some(false);
        fm.masked_by_assets.clear();
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::ShelfEligibilityViolation]);
    }

    #[test]
    fn shelf_order_and_range() {
        let mut doc = design();
        first_fm(&mut doc).frequency_best = Some(0.5);
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::ShelfOrderViolation]);
        first_fm(&mut doc).frequency_max = Some(1.5);
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::ShelfRangeViolation]);
        first_fm(&mut doc).frequency_max = None;
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::ShelfIncomplete]);
    }

    #[test]
    fn confidence_boundaries() {
        for (c, ok) in [(0.599, false), (0.6, true), (1.0, true), (1.001, false)] {
            let mut doc = design();
            first_fm(&mut doc).confidence = Some(c);
            let report = validate_seo(&doc);
            assert_eq!(report.is_empty(), ok, "{c}: {report}");
            if !ok {
                assert_eq!(report.kinds(), [IssueKind::ConfidenceOutOfRange]);
            }
        }
    }

    #[test]
    fn mandatory_fields() {
        let mut doc = design();
        first_fm(&mut doc).source_scientist = None;
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::MissingMandatoryField]);
    }

    #[test]
    fn metadata_rules() {
        let mut doc = design();
        doc.twin_metadata.as_mut().unwrap().session_date = Some("14/03/2025".into());
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::MetadataInconsistent]);
        doc.twin_metadata = None;
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::MetadataMissing]);
    }

    #[test]
    fn step_indices_and_ids() {
        let mut doc = design();
        doc.protocol.as_mut().unwrap().steps[1].step_index = 3;
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::StepIndexViolation]);
        let mut doc = design();
        doc.protocol.as_mut().unwrap().steps[1].id = "S01".into();
        assert!(validate_seo(&doc).has(IssueKind::DuplicateId));
        let mut doc = design();
        doc.protocol.as_mut().unwrap().steps[1].id = "S 02".into();
        assert!(validate_seo(&doc).has(IssueKind::InvalidId));
    }

    #[test]
    fn masked_requires_silent_flag() {
        let mut doc = design();
        first_fm(&mut doc).silent_failure_risk = Some(false);
        assert_eq!(validate_seo(&doc).kinds(), [IssueKind::SilentFlagInconsistent]);
    }
}
