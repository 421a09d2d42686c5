mod common;

use std::collections::BTreeSet;

use common::*;
use skg_core::queries::{
    q1_elisa_failures, q2_decision_logic, q3_cascade, q4a_coverage_gaps, q4b_confidence_floor,
    q5_lcms_failures, q6_masking_audit, q7_shared_assets, q_ranked_failures, render, subgraph_stats,
    CascadeDirection, OutputFormat, OverlapTier, QueryError, SubgraphStats,
};
use skg_core::Decimal;

#[test]
fn ranked_rows_are_sorted_by_confidence_then_id() {
    let g = federated();
    for rows in [q1_elisa_failures(&g).unwrap(), q5_lcms_failures(&g).unwrap()] {
        for w in rows.windows(2) {
            let a = (std::cmp::Reverse(w[0].confidence), &w[0].failure_mode.id);
            let b = (std::cmp::Reverse(w[1].confidence), &w[1].failure_mode.id);
            assert!(a < b, "{} before {}", w[0].name, w[1].name);
        }
    }
}

#[test]
fn silent_flag_follows_masking_or_undetected_risk() {
    let g = federated();
    let rows = q1_elisa_failures(&g).unwrap();
    let silent: BTreeSet<&str> = rows.iter().filter(|r| r.silent).map(|r| r.name.as_str()).collect();
    assert_eq!(silent, BTreeSet::from(["Washer Carryover", "High Background / Nonspecific Signal"]));

    let lcms = q5_lcms_failures(&g).unwrap();
    let by_id = |id: &str| lcms.iter().find(|r| r.failure_mode.id == id).unwrap();
    // at risk, no detector, no masking asset
    assert!(by_id("FM-LCMS-022").silent);
    // at risk but detected
    assert!(by_id("FM-LCMS-019").silent_failure_risk && !by_id("FM-LCMS-019").silent);
}

#[test]
fn masking_needs_convergence_for_the_silent_flag_too() {
    let pending = federated_pending();
    let rows = q1_elisa_failures(&pending).unwrap();
    let wc = rows.iter().find(|r| r.name == "Washer Carryover").unwrap();
    assert!(wc.masking_assets.is_empty());
    // silent_failure_risk with no detector still marks it
    assert!(wc.silent);
}

#[test]
fn unknown_subgraph_and_node_are_key_errors() {
    let g = federated();
    assert!(matches!(q_ranked_failures(&g, "NMR"), Err(QueryError::KeyError(_))));
    assert!(matches!(subgraph_stats(&g, "NMR"), Err(QueryError::KeyError(_))));
    assert!(matches!(
        q2_decision_logic(&g, &key("ELISA:WorkflowStep:S99")),
        Err(QueryError::KeyError(_))
    ));
    assert!(matches!(
        q2_decision_logic(&g, &key("ELISA:FailureMode:FM-ELISA-001")),
        Err(QueryError::KeyError(_))
    ));
    assert!(matches!(
        q3_cascade(&g, &key("ELISA:WorkflowStep:S01"), 2, CascadeDirection::Downstream),
        Err(QueryError::KeyError(_))
    ));
}

#[test]
fn threshold_outside_scale_is_a_range_error() {
    let g = federated();
    for t in [0.59, 1.01, -1.0, f64::NAN] {
        assert!(matches!(q4b_confidence_floor(&g, "LCMS", t), Err(QueryError::RangeError(_))), "{t}");
    }
    assert_eq!(q4b_confidence_floor(&g, "LCMS", 1.0).unwrap().len(), 23);
    let doc = read_doc("seo/lcms_design.seo.json");
    let at_most = doc.failure_modes().filter(|(_, f)| f.confidence.unwrap() <= 0.65).count();
    assert_eq!(q4b_confidence_floor(&g, "LCMS", 0.65).unwrap().len(), at_most);
}

#[test]
fn upstream_cascade_reaches_the_root_cause() {
    let g = federated();
    let paths = q3_cascade(&g, &key("ELISA:FailureMode:FM-ELISA-003"), 2, CascadeDirection::Upstream).unwrap();
    let last = paths.iter().max_by_key(|p| p.depth).unwrap();
    assert_eq!(last.nodes, ["Standard Curve Failure", "High Background / Nonspecific Signal", "Washer Carryover"]);
    let shallow = q3_cascade(&g, &key("ELISA:FailureMode:FM-ELISA-001"), 1, CascadeDirection::Downstream).unwrap();
    assert!(shallow.iter().all(|p| p.depth <= 1));
}

#[test]
fn gaps_are_steps_without_failure_modes() {
    let g = federated();
    let gaps: Vec<String> = q4a_coverage_gaps(&g, "ELISA").into_iter().map(|r| r.step.id).collect();
    let doc = elisa_doc();
    let expected: Vec<String> = doc
        .protocol
        .unwrap()
        .steps
        .into_iter()
        .filter(|s| s.failure_modes.is_empty())
        .map(|s| s.id)
        .collect();
    assert_eq!(gaps, expected);
    let lcms: Vec<String> = q4a_coverage_gaps(&g, "LCMS").into_iter().map(|r| r.name).collect();
    assert_eq!(lcms, ["Quantitation Review"]);
}

#[test]
fn shared_asset_tiers_follow_use_case_demand() {
    let rows = q7_shared_assets(&federated());
    let count = |t: OverlapTier| rows.iter().filter(|r| r.overlap_tier == t).count();
    assert_eq!(
        (count(OverlapTier::SharedBoth), count(OverlapTier::ElisaOnly), count(OverlapTier::LcmsOnly)),
        (9, 6, 7)
    );
    let washer = rows.iter().find(|r| r.asset == "EL406 Plate Washer").unwrap();
    assert_eq!(washer.use_cases, ["Plate Washing"]);
}

#[test]
fn self_masking_loop_path_runs_through_the_asset() {
    let rows = q6_masking_audit(&federated());
    let wc = rows.iter().find(|r| r.self_masking_loop).unwrap();
    let path = wc.loop_path.as_ref().unwrap();
    assert_eq!(path.first().map(String::as_str), Some("Plate Washing"));
    assert_eq!(path.last().map(String::as_str), Some("Washer Carryover"));
    assert!(path.iter().any(|p| p == "EL406 Plate Washer"));
    let hb = rows.iter().find(|r| !r.self_masking_loop).unwrap();
    assert_eq!(hb.failure_mode, "High Background / Nonspecific Signal");
}

#[test]
fn stats_histogram_matches_a_direct_count() {
    let g = federated();
    for sg in ["ELISA", "LCMS"] {
        let s = subgraph_stats(&g, sg).unwrap();
        let confidences: Vec<Decimal> = q_ranked_failures(&g, sg).unwrap().into_iter().map(|r| r.confidence).collect();
        let edges = SubgraphStats::bin_edges();
        let mut expected = [0usize; 8];
        for c in &confidences {
            let bin = edges.iter().rposition(|e| c >= e).unwrap();
            expected[bin] += 1;
        }
        assert_eq!(s.histogram, expected, "{sg}");
        assert_eq!(s.histogram.iter().sum::<usize>(), s.n_failure_modes);
    }
    let lcms = subgraph_stats(&g, "LCMS").unwrap();
    assert_eq!(lcms.n_at_floor, 3);
    assert_eq!(lcms.mean_confidence, Some(dec("0.71")));
}

#[test]
fn renderers() {
    let g = federated();
    let rows = q2_decision_logic(&g, &key("ELISA:WorkflowStep:S09")).unwrap();
    let tsv = render(&rows, OutputFormat::Tsv);
    assert_eq!(tsv.lines().count(), 7);
    assert!(tsv.lines().all(|l| l.split('\t').count() == 10));
    let json: serde_json::Value = serde_json::from_str(&render(&rows, OutputFormat::Json)).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 6);
    assert_eq!(json[0]["decision_point"], "ELISA:DecisionPoint:DP-ELISA-001");
    assert!("xml".parse::<OutputFormat>().is_err());
}
