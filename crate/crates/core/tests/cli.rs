mod common;

use std::path::Path;
use std::process::Command;

use common::*;
use skg_core::cli::run;

fn skg(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("skg").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn pipeline_rebuilds_the_shipped_stores() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("lab.skg.jsonl");
    for (doc, sg) in [
        ("seo/elisa_design.seo.json", "ELISA"),
        ("seo/lcms_design.seo.json", "LCMS"),
        ("seo/automation.seo.json", "AUTOMATION"),
        ("seo/program_director.seo.json", "PROGRAM"),
    ] {
        let plan = dir.path().join(format!("{sg}.plan.json"));
        let (code, _, err) = skg(&["compile", p(&fixture(doc)), "--subgraph", sg, "--output", p(&plan)]);
        assert_eq!(code, 0, "{err}");
        let (code, out, err) = skg(&["apply", p(&plan), "--graph", p(&store)]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out.trim().len(), 64);
    }
    let (_, hash, _) = skg(&["hash", "--graph", p(&store)]);
    assert_eq!(hash.trim(), federated_pending().graph_hash());

    let (code, out, _) = skg(&["converge", "--graph", p(&store), "--all"]);
    assert_eq!(code, 0);
    let pending = federated_pending().pending_edges().count();
    assert_eq!(out, format!("approved\t{pending}\nhash\t{}\n", federated().graph_hash()));
    assert!(!dir.path().join("lab.skg.jsonl.lock").exists());
}

#[test]
fn apply_accepts_documents_directly() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("a.skg.jsonl");
    let (code, _, err) = skg(&["apply", p(&fixture("seo/automation.seo.json")), "--graph", p(&store)]);
    assert_eq!(code, 2, "protocol-less document needs --subgraph: {err}");
    let (code, once, _) = skg(&[
        "apply",
        p(&fixture("seo/automation.seo.json")),
        "--graph",
        p(&store),
        "--subgraph",
        "AUTOMATION",
    ]);
    assert_eq!(code, 0);
    let (_, twice, _) = skg(&[
        "apply",
        p(&fixture("seo/automation.seo.json")),
        "--graph",
        p(&store),
        "--subgraph",
        "AUTOMATION",
    ]);
    assert_eq!(once, twice);
}

#[test]
fn converge_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("f.skg.jsonl");
    std::fs::copy(fixture("graphs/federated_pending.skg.jsonl"), &store).unwrap();
    let (code, out, err) = skg(&[
        "converge",
        "--graph",
        p(&store),
        "--edge",
        "MASKED_BY",
        "ELISA:FailureMode:FM-ELISA-001",
        "AUTOMATION:AutomationAsset:AA-EL406-PLATE-WASHER",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("approved\t1\n"));
    let (_, rows, _) = skg(&["query", "q6", "--graph", p(&store)]);
    assert_eq!(rows.lines().count(), 2, "{rows}");

    let (code, _, _) = skg(&["converge", "--graph", p(&store)]);
    assert_eq!(code, 2);
    let (code, _, _) = skg(&["converge", "--graph", p(&store), "--edge", "MASKED_BY", "bad", "key"]);
    assert_eq!(code, 2);
}

#[test]
fn query_outputs() {
    let g = p(&fixture("graphs/federated.skg.jsonl")).to_string();
    let (code, out, _) = skg(&["query", "q1", "--graph", &g]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 19);

    let (_, out, _) = skg(&["query", "q2", "--graph", &g, "--step", "ELISA:WorkflowStep:S09", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 6);

    let (_, out, _) = skg(&["query", "q3", "--graph", &g, "--root", "ELISA:FailureMode:FM-ELISA-001"]);
    assert!(out.contains("Washer Carryover -> High Background / Nonspecific Signal -> Standard Curve Failure"));

    let (_, out, _) = skg(&["query", "q4b", "--graph", &g]);
    assert_eq!(out.lines().count(), 4);
    let (code, _, err) = skg(&["query", "q4b", "--graph", &g, "--threshold", "0.5"]);
    assert_eq!(code, 2, "{err}");

    let (_, out, _) = skg(&["query", "q7", "--graph", &g]);
    assert_eq!(out.lines().count(), 23);

    let (code, _, _) = skg(&["query", "q2", "--graph", &g]);
    assert_eq!(code, 2);
    let (code, _, _) = skg(&["query", "q1", "--graph", &g, "--subgraph", "NMR"]);
    assert_eq!(code, 2);
}

#[test]
fn stats_tsv() {
    let (code, out, _) = skg(&["stats", "--graph", p(&fixture("graphs/federated.skg.jsonl")), "--subgraph", "ELISA"]);
    assert_eq!(code, 0);
    assert!(out.contains("n_failure_modes\t18\n"));
    assert!(out.contains("mean_confidence\t0.82\n"));
}

#[test]
fn validation_exit_codes() {
    let (code, out, _) = skg(&["validate", p(&fixture("guard/contaminated_01.seo.json"))]);
    assert_eq!(code, 1);
    assert!(out.starts_with("ContaminationGuardViolation\t"));
    let (code, out, _) = skg(&["validate", p(&fixture("seo/elisa_design.seo.json"))]);
    assert_eq!((code, out.as_str()), (0, ""));
    let (code, out, _) = skg(&["compile", p(&fixture("guard/contaminated_02.seo.json")), "--subgraph", "ELISA"]);
    assert_eq!(code, 1);
    assert!(out.contains("ContaminationGuardViolation"));
    let (code, _, _) = skg(&["validate", "/nonexistent/doc.json"]);
    assert_eq!(code, 3);
    let (code, _, _) = skg(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, _) = skg(&["compile", p(&fixture("seo/elisa_design.seo.json")), "--subgraph", "LCMS"]);
    assert_eq!(code, 2);
}

#[test]
fn held_lock_blocks_writers() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("l.skg.jsonl");
    std::fs::copy(fixture("graphs/federated_pending.skg.jsonl"), &store).unwrap();
    std::fs::write(dir.path().join("l.skg.jsonl.lock"), "").unwrap();
    let (code, _, err) = skg(&["converge", "--graph", p(&store), "--all"]);
    assert_eq!(code, 3);
    assert!(err.contains("lock"));
}

#[test]
fn metrics_commands() {
    let (code, out, _) = skg(&[
        "f1",
        "--reference",
        p(&fixture("metrics/elisa_reference.seo.json")),
        "--candidate",
        p(&fixture("metrics/elisa_candidate.seo.json")),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("fm_f1\t0.4286\n"));
    assert!(out.contains("method_alternative_recall\t0.2222\n"));

    let run = p(&fixture("graphs/federated.skg.jsonl")).to_string();
    let (code, out, _) = skg(&["consistency", "--runs", &run, &run, &run, "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["fm_f1"], 1.0);
    assert_eq!(v["fm_f1_variance"], 0.0);

    let (code, _, _) = skg(&["consistency", "--runs", &run]);
    assert_eq!(code, 2);
}

#[test]
fn emit_cypher_flag_writes_golden_text() {
    let dir = tempfile::tempdir().unwrap();
    let cypher = dir.path().join("elisa.cypher");
    let (code, out, _) = skg(&[
        "compile",
        p(&fixture("seo/elisa_design.seo.json")),
        "--subgraph",
        "ELISA",
        "--emit-cypher",
        p(&cypher),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("\"format\": \"skg-plan\""));
    assert_eq!(
        std::fs::read_to_string(cypher).unwrap(),
        std::fs::read_to_string(fixture("golden/elisa.cypher")).unwrap()
    );
}

#[test]
fn binary_reports_exit_status() {
    let bin = env!("CARGO_BIN_EXE_skg");
    let status = Command::new(bin).arg("schema").output().unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains("MASKED_BY"));
    let bad = Command::new(bin)
        .args(["validate", p(&fixture("guard/contaminated_05.seo.json"))])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
