#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use skg_core::annotator::{compile, MergePlan};
use skg_core::{builtin_registry, parse_seo, Decimal, Graph, NodeKey, SeoDocument};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn read_doc(rel: &str) -> SeoDocument {
    let bytes = std::fs::read(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
    parse_seo(&bytes).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn elisa_doc() -> SeoDocument {
    read_doc("seo/elisa_design.seo.json")
}

pub fn elisa_plan() -> MergePlan {
    compile(&elisa_doc(), "ELISA", &builtin_registry()).expect("elisa fixture compiles")
}

pub fn federated() -> Graph {
    Graph::load(&fixture("graphs/federated.skg.jsonl")).expect("federated store")
}

pub fn federated_pending() -> Graph {
    Graph::load(&fixture("graphs/federated_pending.skg.jsonl")).expect("pending store")
}

pub fn labelled<'a>(graph: &'a Graph, label: &'a str) -> impl Iterator<Item = &'a skg_core::Node> + 'a {
    graph.nodes().filter(move |n| n.key.label == label)
}

pub fn key(s: &str) -> NodeKey {
    s.parse().unwrap()
}

pub fn dec(s: &str) -> Decimal {
    s.parse().unwrap()
}

/// Checks the aggregate constraints the shipped stores must satisfy.
/// Returns one message per violated constraint.
pub fn feasibility(graph: &Graph) -> Vec<String> {
    let mut out = Vec::new();
    let mut expect = |what: &str, ok: bool| {
        if !ok {
            out.push(what.to_string());
        }
    };
    let confidences = |sg: &str| -> Vec<Decimal> {
        graph
            .nodes_with_label(sg, "FailureMode")
            .filter_map(|n| n.get("confidence").and_then(|v| v.as_decimal()))
            .collect()
    };
    for (sg, n, mean) in [("ELISA", 18, 0.82), ("LCMS", 23, 0.71)] {
        let c = confidences(sg);
        expect(&format!("{sg} has {n} failure modes"), c.len() == n);
        let m = c.iter().map(|d| d.to_f64()).sum::<f64>() / c.len().max(1) as f64;
        expect(&format!("{sg} mean confidence {mean}"), (m - mean).abs() <= 0.005);
    }
    expect(
        "three LCMS failure modes at 0.60",
        confidences("LCMS").iter().filter(|d| **d == dec("0.60")).count() == 3,
    );
    let fm22 = graph.node(&key("LCMS:FailureMode:FM-LCMS-022"));
    expect(
        "FM-LCMS-022 at 0.65 and silent",
        fm22.is_some_and(|n| {
            n.get("confidence").and_then(|v| v.as_decimal()) == Some(dec("0.65"))
                && n.get("silent_failure_risk").and_then(|v| v.as_bool()) == Some(true)
        }),
    );
    expect("22 automation assets", labelled(graph, "AutomationAsset").count() == 22);
    let use_cases: BTreeSet<&str> = labelled(graph, "UseCase").map(|n| n.display_name()).collect();
    expect("15 use cases", use_cases.len() == 15);
    for uc in ["Serial Dilution", "Plate Washing", "Precious Reagent Dispensing"] {
        expect(&format!("use case {uc}"), use_cases.contains(uc));
    }
    expect(
        "31 REQUIRES_AUTOMATION edges",
        graph.edges().filter(|e| e.edge_type == "REQUIRES_AUTOMATION").count() == 31,
    );
    let readout = key("ELISA:WorkflowStep:S09");
    expect(
        "Plate Readout has 6 decision points",
        graph
            .edges()
            .filter(|e| e.edge_type == "HAS_DECISION_POINT" && e.src == readout)
            .count()
            == 6,
    );
    let cascade = |a: &str, b: &str| {
        graph.edges().any(|e| {
            e.edge_type == "CASCADES_TO"
                && graph.node(&e.src).map(|n| n.display_name()) == Some(a)
                && graph.node(&e.dst).map(|n| n.display_name()) == Some(b)
        })
    };
    expect(
        "cascade chain to Standard Curve Failure",
        cascade("Washer Carryover", "High Background / Nonspecific Signal")
            && cascade("High Background / Nonspecific Signal", "Standard Curve Failure"),
    );
    out
}

/// Parsed form of one emitted Cypher statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Node {
        label: String,
        subgraph: String,
        id: String,
        set: Vec<(String, String)>,
    },
    Edge {
        src: (String, String, String),
        dst: (String, String, String),
        edge_type: String,
        set: Vec<(String, String)>,
    },
    Banner,
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn eat(&mut self, lit: &str) -> Option<()> {
        self.rest = self.rest.strip_prefix(lit)?;
        Some(())
    }

    fn ident(&mut self) -> Option<String> {
        let end = self
            .rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest.len());
        if end == 0 {
            return None;
        }
        let (head, tail) = self.rest.split_at(end);
        self.rest = tail;
        Some(head.to_string())
    }

    fn string(&mut self) -> Option<String> {
        self.eat("\"")?;
        let mut out = String::new();
        let mut chars = self.rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\\' => {
                    let (_, e) = chars.next()?;
                    if e != '"' && e != '\\' {
                        return None;
                    }
                    out.push(e);
                }
                '"' => {
                    self.rest = &self.rest[i + 1..];
                    return Some(out);
                }
                c => out.push(c),
            }
        }
        None
    }

    fn value(&mut self) -> Option<String> {
        let start = self.rest;
        if self.rest.starts_with('"') {
            self.string()?;
        } else if self.rest.starts_with('[') {
            self.eat("[")?;
            if self.eat("]").is_none() {
                loop {
                    self.string()?;
                    if self.eat("]").is_some() {
                        break;
                    }
                    self.eat(", ")?;
                }
            }
        } else if self.eat("true").is_some() || self.eat("false").is_some() {
        } else {
            let end = self
                .rest
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
                .unwrap_or(self.rest.len());
            let num = &self.rest[..end];
            let canonical = num
                .strip_prefix('-')
                .unwrap_or(num)
                .split_once('.')
                .map_or(!num.is_empty(), |(i, f)| !i.is_empty() && !f.is_empty() && !f.ends_with('0'));
            if !canonical || num.parse::<f64>().is_err() {
                return None;
            }
            self.rest = &self.rest[end..];
        }
        Some(start[..start.len() - self.rest.len()].to_string())
    }

    fn pattern(&mut self, var: &str) -> Option<(String, String, String)> {
        self.eat("(")?;
        self.eat(var)?;
        self.eat(":")?;
        let label = self.ident()?;
        self.eat(" {subgraph:")?;
        let sg = self.string()?;
        self.eat(", id:")?;
        let id = self.string()?;
        self.eat("})")?;
        Some((label, sg, id))
    }

    fn set(&mut self, var: &str) -> Option<Vec<(String, String)>> {
        let mut out = Vec::new();
        if self.eat(" SET ").is_some() {
            loop {
                self.eat(var)?;
                self.eat(".")?;
                let k = self.ident()?;
                self.eat(" = ")?;
                out.push((k, self.value()?));
                if self.eat(", ").is_none() {
                    break;
                }
            }
        }
        let sorted = out.windows(2).all(|w| w[0].0 < w[1].0);
        sorted.then_some(out)
    }
}

/// Minimal parser for the MERGE statement grammar; `None` means the line
/// does not conform.
pub fn parse_statement(line: &str) -> Option<Statement> {
    if line == "// PENDING CONVERGENCE" {
        return Some(Statement::Banner);
    }
    let mut c = Cursor { rest: line };
    let st = if c.eat("MERGE ").is_some() {
        let (label, subgraph, id) = c.pattern("n")?;
        let set = c.set("n")?;
        Statement::Node {
            label,
            subgraph,
            id,
            set,
        }
    } else {
        c.eat("MATCH ")?;
        let src = c.pattern("a")?;
        c.eat(", ")?;
        let dst = c.pattern("b")?;
        c.eat(" MERGE (a)-[r:")?;
        let edge_type = c.ident()?;
        c.eat("]->(b)")?;
        let set = c.set("r")?;
        Statement::Edge {
            src,
            dst,
            edge_type,
            set,
        }
    };
    c.eat(" ;")?;
    c.rest.is_empty().then_some(st)
}

const STEP_NAMES: &[&str] = &[
    "Plate Coating", "Blocking", "Sample Dilution", "Incubation", "Washing", "Detection",
    "Development", "Stop", "Readout", "Curve Fitting", "Digestion", "Extraction",
];
const FM_NAMES: &[&str] = &[
    "Edge Effect", "Bubble Formation", "Reagent Depletion", "Pipette Drift", "Tip Clog",
    "Temperature Excursion", "Plate Warping", "Lot Variability", "Carryover", "Timing Drift",
    "Evaporation Loss", "Label Swap", "Calibration Bias", "Signal Saturation", "Ionization Drop",
];
const USE_CASES: &[&str] = &["Plate Washing", "Serial Dilution", "Plate Sealing", "Plate Transport", "Cold Storage"];
const ASSETS: &[&str] = &["Washer One", "Liquid Handler", "Robot Arm", "Sealer", "Freezer"];
const COMPARATORS: &[&str] = &["<", "<=", ">", ">=", "==", "within_range"];
const PHRASES: &[&str] = &["usually", "sometimes", "definitely", "I think", "might"];

/// A valid DESIGN_EXPERT document with random topology, drawn from `rng`.
pub fn random_document(rng: &mut ChaCha8Rng, subgraph: &str) -> Value {
    let n_steps = rng.gen_range(1..=6);
    let mut fm_pool: Vec<&str> = FM_NAMES.to_vec();
    fm_pool.shuffle(rng);
    let mut fm_names: Vec<&str> = Vec::new();
    let mut steps = Vec::new();
    for i in 0..n_steps {
        let n_fm = rng.gen_range(0..=3).min(fm_pool.len());
        let mut fms = Vec::new();
        for _ in 0..n_fm {
            let name = fm_pool.pop().unwrap();
            fm_names.push(name);
            let silent = rng.gen_bool(0.3);
            let critical = rng.gen_bool(0.3);
            let conf = rng.gen_range(60..=100) as f64 / 100.0;
            let mut fm = json!({
                "name": name,
                "confidence": conf,
                "confidence_method": "linguistic_approximation",
                "source_scientist": "Scientist R",
                "source_phrase": PHRASES.choose(rng).unwrap(),
                "silent_failure_risk": silent,
                "is_critical_path": critical,
            });
            if (silent || critical) && rng.gen_bool(0.5) {
                let lo = rng.gen_range(0..30) as f64 / 100.0;
                let best = lo + rng.gen_range(0..30) as f64 / 100.0;
                let hi = best + rng.gen_range(0..30) as f64 / 100.0;
                fm["confidence_method"] = json!("SHELF_elicited");
                fm["frequency_min"] = json!(lo);
                fm["frequency_best"] = json!(best);
                fm["frequency_max"] = json!(hi);
            }
            if silent && rng.gen_bool(0.5) {
                fm["masked_by_assets"] = json!([ASSETS.choose(rng).unwrap()]);
            }
            if rng.gen_bool(0.3) {
                fm["detected_by"] = json!(["Alarm ".to_string() + &rng.gen_range(1..4).to_string()]);
            }
            if rng.gen_bool(0.2) {
                fm["flagged_for_review"] = json!(true);
            }
            fms.push(fm);
        }
        let n_uc = rng.gen_range(0..=2);
        let ucs: Vec<&str> = USE_CASES.choose_multiple(rng, n_uc).copied().collect();
        steps.push(json!({
            "id": format!("S{:02}", i + 1),
            "name": STEP_NAMES[i % STEP_NAMES.len()],
            "step_index": i + 1,
            "required_use_cases": ucs,
            "failure_modes": fms,
            "pre_extracted": rng.gen_bool(0.2),
        }));
    }
    // cascades point at names in this document or at unknown names (stubs)
    for step in steps.iter_mut() {
        for fm in step["failure_modes"].as_array_mut().unwrap() {
            if rng.gen_bool(0.4) {
                let target = if rng.gen_bool(0.7) && !fm_names.is_empty() {
                    fm_names.choose(rng).unwrap().to_string()
                } else {
                    "Unseen Consequence".to_string()
                };
                fm["cascades_to"] = json!([target]);
            }
        }
    }
    let mut dps = Vec::new();
    for _ in 0..rng.gen_range(0..4) {
        let s = rng.gen_range(1..=n_steps);
        dps.push(json!({
            "step_id": format!("S{s:02}"),
            "name": format!("Gate {}", dps.len() + 1),
            "condition_type": "signal",
            "threshold_value": rng.gen_range(1..100),
            "comparator": COMPARATORS.choose(rng).unwrap(),
            "units": "AU",
            "pass_action": "continue",
            "fail_action": "repeat",
            "escalation_action": "notify",
            "confidence": rng.gen_range(60..=100) as f64 / 100.0,
            "confidence_method": "linguistic_approximation",
            "source_scientist": "Scientist R",
        }));
    }
    let alternatives: Vec<Value> = (0..rng.gen_range(0..3))
        .map(|i| json!({"step_id": "S01", "name": format!("Alternative {i}"), "description": null, "tradeoff": "cost"}))
        .collect();
    json!({
        "session_mode": "DESIGN_EXPERT",
        "protocol": {
            "workflow_id": format!("WF-{subgraph}"),
            "workflow_name": "Generated Workflow",
            "subgraph": subgraph,
            "steps": steps,
        },
        "decision_model": {"_elicitation_scope": "full", "decision_points": dps, "design_rationale": null},
        "strategic": null,
        "method_alternatives": if alternatives.is_empty() { Value::Null } else { Value::Array(alternatives) },
        "automation_context": null,
        "twin_metadata": {
            "source_scientist": "Scientist R",
            "session_mode": "DESIGN_EXPERT",
            "calibration_status": null,
            "session_date": "2025-05-01",
            "elicitation_agent": null,
        },
    })
}

pub fn parse_value(v: &Value) -> SeoDocument {
    parse_seo(serde_json::to_string(v).unwrap().as_bytes()).expect("generated document parses")
}
