#!/usr/bin/env python3
"""Writes the elicitation-document fixtures under fixtures/seo, fixtures/metrics and fixtures/guard."""

import copy
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def meta(mode, scientist, date):
    return {
        "source_scientist": scientist,
        "session_mode": mode,
        "calibration_status": "uncalibrated",
        "session_date": date,
        "elicitation_agent": "interview-copilot",
    }


def doc(mode, protocol=None, decision_model=None, strategic=None,
        method_alternatives=None, automation_context=None, twin_metadata=None):
    return {
        "session_mode": mode,
        "protocol": protocol,
        "decision_model": decision_model,
        "strategic": strategic,
        "method_alternatives": method_alternatives,
        "automation_context": automation_context,
        "twin_metadata": twin_metadata,
    }


def fm(fid, name, conf, scientist, phrase, silent=False, critical=False, method="linguistic_approximation",
       cascades=None, masked=None, detected=None, shelf=None, flagged=False):
    out = {
        "id": fid,
        "name": name,
        "confidence": conf,
        "confidence_method": method,
        "source_scientist": scientist,
        "source_phrase": phrase,
        "silent_failure_risk": silent,
        "is_critical_path": critical,
        "flagged_for_review": flagged,
    }
    if shelf:
        out["frequency_min"], out["frequency_best"], out["frequency_max"] = shelf
    if cascades:
        out["cascades_to"] = cascades
    if masked:
        out["masked_by_assets"] = masked
    if detected:
        out["detected_by"] = detected
    return out


def step(sid, name, index, use_cases, fms, critical=None, description=None):
    out = {"id": sid, "name": name, "step_index": index, "required_use_cases": use_cases, "failure_modes": fms}
    if critical is not None:
        out["is_critical_path"] = critical
    if description:
        out["description"] = description
    return out


def dp(step_id, name, cond, value, comparator, units, passa, faila, esc, conf, scientist):
    return {
        "step_id": step_id,
        "name": name,
        "condition_type": cond,
        "threshold_value": value,
        "comparator": comparator,
        "units": units,
        "pass_action": passa,
        "fail_action": faila,
        "escalation_action": esc,
        "confidence": conf,
        "confidence_method": "linguistic_approximation",
        "source_scientist": scientist,
    }


# ---------------------------------------------------------------- ELISA
SA = "Scientist A"
EL406 = "EL406 Plate Washer"

elisa_steps = [
    step("S01", "Plate Coating", 1,
         ["Precious Reagent Dispensing", "Plate Incubation", "Plate Sealing"],
         [fm("FM-ELISA-010", "Uneven Coating", 0.81, SA, "usually shows up as edge rows"),
          fm("FM-ELISA-011", "Capture Antibody Degradation", 0.77, SA, "sometimes after a bad freeze")]),
    step("S02", "Blocking", 2,
         ["Bulk Reagent Dispensing", "Plate Incubation"],
         [fm("FM-ELISA-002", "High Background / Nonspecific Signal", 0.85, SA,
             "definitely the first thing you see", silent=True,
             cascades=["Standard Curve Failure"], masked=[EL406]),
          fm("FM-ELISA-012", "Incomplete Blocking", 0.79, SA, "generally from short blocking times")]),
    step("S03", "Sample Dilution Strategy", 3,
         ["Serial Dilution", "Sample Tracking", "Cold Storage"], []),
    step("S04", "Sample Incubation", 4,
         ["Plate Incubation", "Plate Transport"],
         [fm("FM-ELISA-004", "Matrix Interference", 0.88, SA, "always with lipemic samples", critical=True),
          fm("FM-ELISA-013", "Incubation Temperature Drift", 0.76, SA, "sometimes in summer"),
          fm("FM-ELISA-005", "Hook Effect", 0.92, SA, "every time above the top standard",
             critical=True, detected=["Dilution Linearity Check"])]),
    step("S05", "Plate Washing", 5,
         ["Plate Washing"],
         [fm("FM-ELISA-001", "Washer Carryover", 0.90, SA, "invariably after a clogged manifold",
             silent=True, critical=True, method="SHELF_elicited", shelf=(0.02, 0.05, 0.12),
             cascades=["High Background / Nonspecific Signal"], masked=[EL406]),
          fm("FM-ELISA-014", "Overwashing Signal Loss", 0.75, SA, "I think it happens with extra cycles")]),
    step("S06", "Detection Antibody Incubation", 6,
         ["Precious Reagent Dispensing", "Plate Incubation"],
         [fm("FM-ELISA-006", "Detection Antibody Cross-Reactivity", 0.86, SA, "definitely with related isoforms"),
          fm("FM-ELISA-015", "Conjugate Aggregation", 0.72, SA, "sometimes with old conjugate lots",
             flagged=True)]),
    step("S07", "Substrate Development", 7,
         ["Bulk Reagent Dispensing"],
         [fm("FM-ELISA-007", "Substrate Contamination", 0.84, SA, "usually a shared reservoir problem"),
          fm("FM-ELISA-016", "Development Timing Drift", 0.80, SA, "generally when plates queue"),
          fm("FM-ELISA-017", "Light Exposure of Substrate", 0.78, SA, "usually on the bench")]),
    step("S08", "Stop Reaction", 8, ["Bulk Reagent Dispensing"], []),
    step("S09", "Plate Readout", 9, ["Absorbance Readout", "Plate Transport"], []),
    step("S10", "Standard Curve Fitting", 10, [],
         [fm("FM-ELISA-003", "Standard Curve Failure", 0.88, SA, "always visible in the fit",
             critical=True, detected=["Curve Fit R2 Alarm"]),
          fm("FM-ELISA-008", "Standard Dilution Error", 0.85, SA, "definitely if the top standard is off"),
          fm("FM-ELISA-009", "Curve Fit Model Misspecification", 0.82, SA, "most of the time a 4PL is fine"),
          fm("FM-ELISA-018", "Calibrator Lot Shift", 0.78, SA, "usually at lot changeover")]),
]

readout_dps = [
    dp("S09", "Blank Well OD", "absorbance", 0.1, "<", "OD450", "accept plate", "rewash and reread",
       "notify assay lead", 0.85, SA),
    dp("S09", "Top Standard OD", "absorbance", 2.0, ">=", "OD450", "accept curve", "repeat standards",
       "notify assay lead", 0.82, SA),
    dp("S09", "Replicate CV", "precision", 15, "<=", "percent", "report mean", "rerun sample",
       "flag sample for review", 0.88, SA),
    dp("S09", "Curve R2", "fit_quality", 0.99, ">=", "ratio", "accept fit", "refit with weighting",
       "escalate to statistician", 0.8, SA),
    dp("S09", "Control Recovery", "accuracy", 20, "within_range", "percent", "accept run", "repeat run",
       "open deviation", 0.86, SA),
    dp("S09", "Sample Within Curve", "range", 1, "==", "flag", "report value", "redilute sample",
       "notify study director", 0.78, SA),
]

elisa = doc(
    "DESIGN_EXPERT",
    protocol={"workflow_id": "WF-ELISA", "workflow_name": "Sandwich ELISA", "subgraph": "ELISA",
              "steps": elisa_steps},
    decision_model={"_elicitation_scope": "full",
                     "decision_points": readout_dps + [
                         dp("S07", "Development Endpoint", "time", 30, "<=", "minutes", "stop reaction",
                            "shorten development", "notify assay lead", 0.75, SA)],
                     "design_rationale": "Readout acceptance gates protect the standard curve."},
    method_alternatives=[
        {"step_id": "S05", "name": "Manual Plate Washing", "description": "Multichannel wash",
         "tradeoff": "lower throughput, no manifold carryover"},
        {"step_id": "S09", "name": "Chemiluminescent Readout", "description": None,
         "tradeoff": "wider dynamic range"},
    ],
    twin_metadata=meta("DESIGN_EXPERT", SA, "2025-02-11"),
)

# ---------------------------------------------------------------- LC-MS/PRM
SB = "Scientist B"
lcms_steps = [
    step("L01", "Sample Receipt", 1, ["Sample Tracking", "Cold Storage"],
         [fm("FM-LCMS-001", "Freeze-Thaw Degradation", 0.78, SB, "usually after the second thaw"),
          fm("FM-LCMS-002", "Sample Mislabeling", 0.66, SB, "possibly at intake")]),
    step("L02", "Denaturation and Reduction", 2, ["Precious Reagent Dispensing"],
         [fm("FM-LCMS-003", "Incomplete Reduction", 0.72, SB, "sometimes with old DTT"),
          fm("FM-LCMS-004", "Over-Alkylation", 0.60, SB, "outside my experience")]),
    step("L03", "Tryptic Digestion", 3, ["Protein Digestion", "Plate Sealing"],
         [fm("FM-LCMS-005", "Incomplete Digestion", 0.85, SB, "definitely with short digests", critical=True),
          fm("FM-LCMS-006", "Missed Cleavage Variability", 0.70, SB, "often enough to matter"),
          fm("FM-LCMS-007", "Trypsin Autolysis Interference", 0.61, SB, "could be, rarely")]),
    step("L04", "Internal Standard Spiking", 4, ["Precious Reagent Dispensing", "Plate Sealing"],
         [fm("FM-LCMS-008", "Recombinant/Endogenous Mismatch", 0.90, SB,
             "every time the standard is recombinant", critical=True),
          fm("FM-LCMS-009", "Internal Standard Spike Error", 0.76, SB, "sometimes with viscous stocks"),
          fm("FM-LCMS-010", "Heavy Label Impurity", 0.60, SB, "never run this myself")]),
    step("L05", "Solid Phase Extraction", 5, ["Solid Phase Extraction"],
         [fm("FM-LCMS-011", "Peptide Breakthrough", 0.74, SB, "sometimes with overloaded wells"),
          fm("FM-LCMS-012", "Cartridge Lot Variability", 0.65, SB, "might vary by lot")]),
    step("L06", "Evaporation and Reconstitution", 6, ["Sample Evaporation"],
         [fm("FM-LCMS-013", "Incomplete Reconstitution", 0.69, SB, "not sure how often"),
          fm("FM-LCMS-022", "Sample Evaporation / Well Edge Effect", 0.65, SB,
             "might happen on outer wells", silent=True)]),
    step("L07", "Calibration Curve Preparation", 7, ["Serial Dilution", "Sample Tracking"],
         [fm("FM-LCMS-014", "Calibrator Matrix Mismatch", 0.80, SB, "usually with surrogate matrix"),
          fm("FM-LCMS-015", "Calibration Range Truncation", 0.68, SB, "possibly at the low end")]),
    step("L08", "Plate Transfer", 8, ["Plate Transport"],
         [fm("FM-LCMS-016", "Adsorptive Peptide Loss", 0.82, SB, "generally with hydrophobic peptides")]),
    step("L09", "LC Separation", 9, ["Liquid Chromatography Separation"],
         [fm("FM-LCMS-017", "Retention Time Drift", 0.75, SB, "sometimes after column change",
             detected=["Retention Window Alarm"]),
          fm("FM-LCMS-018", "Column Carryover", 0.72, SB, "sometimes after high samples")]),
    step("L10", "PRM Acquisition", 10, ["Mass Spectrometry Acquisition"],
         [fm("FM-LCMS-019", "Ion Suppression", 0.70, SB, "often enough in plasma", silent=True,
             detected=["Internal Standard Area Deviation"]),
          fm("FM-LCMS-020", "Transition Interference", 0.68, SB, "might show as ratio shifts"),
          fm("FM-LCMS-021", "Source Contamination", 0.60, SB, "outside my experience")]),
    step("L11", "Peak Integration", 11, [],
         [fm("FM-LCMS-023", "Peak Integration Boundary Error", 0.67, SB, "possibly with shoulders")]),
    step("L12", "Quantitation Review", 12, [], []),
]

lcms = doc(
    "DESIGN_EXPERT",
    protocol={"workflow_id": "WF-LCMS", "workflow_name": "LC-MS/PRM Peptide Quantitation", "subgraph": "LCMS",
              "steps": lcms_steps},
    decision_model={"_elicitation_scope": "full",
                    "decision_points": [
                        dp("L12", "Internal Standard Area", "area_ratio", 50, "within_range", "percent",
                           "accept injection", "reinject", "notify mass spec lead", 0.8, SB),
                        dp("L12", "Calibration Accuracy", "accuracy", 15, "<=", "percent",
                           "accept batch", "reprocess batch", "open deviation", 0.78, SB),
                    ],
                    "design_rationale": None},
    method_alternatives=[
        {"step_id": "L03", "name": "Immobilized Trypsin Digestion", "description": None,
         "tradeoff": "faster, costlier"},
    ],
    twin_metadata=meta("DESIGN_EXPERT", SB, "2025-03-04"),
)

# ---------------------------------------------------------------- automation
assets = [
    # ELISA-only use cases
    ("EL406 Plate Washer", ["Plate Washing"]),
    ("405 TS Washer", ["Plate Washing"]),
    ("MultiFlo FX Dispenser", ["Bulk Reagent Dispensing"]),
    ("Shaking Incubator", ["Plate Incubation"]),
    ("Synergy H1 Reader", ["Absorbance Readout"]),
    ("SpectraMax ABS Reader", ["Absorbance Readout"]),
    # shared use cases
    ("Hamilton STAR", ["Serial Dilution"]),
    ("Biomek i7", ["Serial Dilution"]),
    ("I.DOT Dispenser", ["Precious Reagent Dispensing"]),
    ("Mantis Dispenser", ["Precious Reagent Dispensing"]),
    ("PlateLoc Sealer", ["Plate Sealing"]),
    ("PF400 Robot Arm", ["Plate Transport"]),
    ("Spinnaker Plate Mover", ["Plate Transport"]),
    ("Barcode Reader Station", ["Sample Tracking"]),
    ("LiCONiC Cold Store", ["Cold Storage"]),
    # LC-MS-only use cases
    ("Vanquish UHPLC", ["Liquid Chromatography Separation"]),
    ("Orbitrap Exploris", ["Mass Spectrometry Acquisition"]),
    ("AssayMAP Bravo", ["Protein Digestion"]),
    ("Thermomixer", ["Protein Digestion"]),
    ("Positive Pressure Manifold", ["Solid Phase Extraction"]),
    ("SpeedVac Concentrator", ["Sample Evaporation"]),
    ("Nitrogen Evaporator", ["Sample Evaporation"]),
]

automation = doc(
    "DESIGN_EXPERT",
    automation_context=[{"asset_name": a, "use_case_names": u, "log_scope": "run_status"} for a, u in assets],
    twin_metadata=meta("DESIGN_EXPERT", "Automation Engineer", "2025-03-18"),
)

program = doc(
    "DIRECTOR",
    decision_model=None,
    strategic={
        "cross_domain_knowledge": ["Ligand binding and mass spec disagree when the standard is recombinant"],
        "capability_gaps": ["No automated evaporation monitoring"],
        "future_design_questions": ["Should hybrid LBA-LC-MS replace the ELISA for the PK assay?"],
        "program_milestones": [
            {"id": "PM-PROGRAM-001", "name": "IND-Enabling PK Package", "description": None,
             "evidentiary_inputs": [
                 {"name": "Validated ELISA PK Data", "required_output": "concentration-time profiles",
                  "quality_threshold": "accuracy within 20 percent",
                  "decision_consequence": "dose selection for first-in-human",
                  "sourced_from": [{"subgraph": "ELISA", "workflow_id": "WF-ELISA"}]},
                 {"name": "Orthogonal LC-MS Confirmation", "required_output": "peptide concentrations",
                  "quality_threshold": "bias within 15 percent",
                  "decision_consequence": "confidence in exposure margins",
                  "sourced_from": [{"subgraph": "LCMS", "workflow_id": "WF-LCMS"}]},
             ]},
        ],
    },
    twin_metadata=meta("DIRECTOR", "Program Director", "2025-03-25"),
)

# ---------------------------------------------------------------- metrics
def names_doc(subgraph, fm_names, ma_names, scientist, mode="DESIGN_EXPERT"):
    steps = [step("S01", "Workflow", 1, [], [
        fm(None, n, 0.8, scientist, "usually") for n in fm_names])]
    for s in steps[0]["failure_modes"]:
        del s["id"]
    return doc(
        mode,
        protocol={"workflow_id": "WF-" + subgraph, "workflow_name": subgraph, "subgraph": subgraph,
                  "steps": steps},
        decision_model={"_elicitation_scope": "full", "decision_points": None, "design_rationale": None},
        method_alternatives=[{"step_id": "S01", "name": n, "description": None, "tradeoff": None}
                             for n in ma_names] or None,
        twin_metadata=meta(mode, scientist, "2025-04-01"),
    )


ref_fms = ["Washer Carryover", "High Background / Nonspecific Signal", "Standard Curve Failure",
           "Hook Effect", "Matrix Interference", "Uneven Coating", "Incomplete Blocking",
           "Substrate Contamination", "Calibrator Lot Shift"]
cand_fms = ["washer carryover", "High background (nonspecific signal)", "Hook Effect",
            "Pipetting Error", "Reader Lamp Drift"]
ref_mas = ["Manual Plate Washing", "Chemiluminescent Readout", "Bead-Based Immunoassay",
           "Automated Serial Dilution", "Pre-Coated Plates", "Overnight Coating", "Fluorescent Substrate",
           "Single-Wash Protocol", "Acoustic Dispensing"]
cand_mas = ["manual plate washing", "Pre-coated plates", "Microfluidic Immunoassay"]

lcms13 = ["Freeze-Thaw Degradation", "Incomplete Reduction", "Over-Alkylation", "Incomplete Digestion",
          "Missed Cleavage Variability", "Recombinant/Endogenous Mismatch", "Internal Standard Spike Error",
          "Peptide Breakthrough", "Sample Evaporation / Well Edge Effect", "Retention Time Drift",
          "Column Carryover", "Ion Suppression", "Source Contamination"]

# ---------------------------------------------------------------- guard
def operational(decision_model, steps=None, **layers):
    proto = {"workflow_id": "WF-ELISA", "workflow_name": "Sandwich ELISA", "subgraph": "ELISA",
             "steps": steps or [step("S01", "Plate Washing", 1, [],
                                     [fm(None, "Washer Carryover", 0.9, "Technician C",
                                         "every time the manifold clogs", silent=True)])]}
    for s in proto["steps"]:
        for f in s["failure_modes"]:
            f.pop("id", None)
    return doc("OPERATIONAL", protocol=proto, decision_model=decision_model,
               twin_metadata=meta("OPERATIONAL", "Technician C", "2025-02-20"), **layers)


one_dp = [dp("S01", "Residual Volume", "volume", 5, "<=", "uL", "continue", "rewash", "notify", 0.8,
             "Technician C")]
two_dp = one_dp + [dp("S01", "Wash Count", "count", 3, ">=", "cycles", "continue", "add cycle", "notify",
                      0.7, "Technician C")]
OO = "operational_only"
contaminated = [
    {"_elicitation_scope": OO, "decision_points": one_dp, "design_rationale": None},
    {"_elicitation_scope": OO, "decision_points": two_dp, "design_rationale": None},
    {"_elicitation_scope": OO, "decision_points": [], "design_rationale": None},
    {"_elicitation_scope": OO, "decision_points": None, "design_rationale": "Wash thrice because of carryover."},
    {"_elicitation_scope": OO, "decision_points": None, "design_rationale": ""},
    {"_elicitation_scope": OO, "decision_points": one_dp, "design_rationale": "guessed"},
    {"_elicitation_scope": "full", "decision_points": None, "design_rationale": None},
    {"_elicitation_scope": "full", "decision_points": one_dp, "design_rationale": None},
    {"_elicitation_scope": "full", "decision_points": [], "design_rationale": None},
    {"_elicitation_scope": "full", "decision_points": None, "design_rationale": "rationale"},
    {"_elicitation_scope": "full", "decision_points": two_dp, "design_rationale": "rationale"},
]
# unpopulated-looking content still counts as populated
for extra in [
    {"name": "Residual Volume", "step_id": "S01", "confidence": None, "confidence_method": None,
     "source_scientist": None},
    {"name": "Inferred Threshold", "step_id": "S01", "threshold_value": 0.5, "comparator": ">",
     "confidence": 0.6, "confidence_method": "linguistic_approximation", "source_scientist": "Technician C"},
]:
    contaminated.append({"_elicitation_scope": OO, "decision_points": [extra], "design_rationale": None})
    contaminated.append({"_elicitation_scope": "full", "decision_points": [extra], "design_rationale": None})
contaminated += [
    {"_elicitation_scope": OO, "decision_points": one_dp * 1, "design_rationale": " "},
    {"_elicitation_scope": OO, "decision_points": [dict(one_dp[0], step_id="S99")], "design_rationale": None},
    {"_elicitation_scope": "full", "decision_points": [], "design_rationale": ""},
    {"_elicitation_scope": OO, "decision_points": [dict(one_dp[0], name="Blank OD", comparator="within_range")],
     "design_rationale": None},
    {"_elicitation_scope": "full", "decision_points": [dict(one_dp[0], id="DP-ELISA-900")],
     "design_rationale": None},
]
assert len(contaminated) == 20, len(contaminated)

accepted = [
    operational({"_elicitation_scope": OO, "decision_points": None, "design_rationale": None}),
    operational({"_elicitation_scope": OO, "decision_points": None, "design_rationale": None},
                steps=[step("S01", "Plate Coating", 1, [], []),
                       step("S02", "Plate Washing", 2, ["Plate Washing"],
                            [fm(None, "Washer Carryover", 0.9, "Technician C", "always", silent=True,
                                masked=[EL406])])]),
    operational({"_elicitation_scope": OO, "decision_points": None, "design_rationale": None},
                steps=[step("S01", "Plate Readout", 1, ["Absorbance Readout"], [])]),
    operational({"_elicitation_scope": OO, "decision_points": None, "design_rationale": None},
                steps=[step("S01", "Stop Reaction", 1, [], [
                    fm(None, "Incomplete Stop", 0.7, "Technician C", "sometimes",
                       cascades=["Signal Drift"])])]),
    operational({"_elicitation_scope": OO, "decision_points": None, "design_rationale": None},
                steps=[step("S01", "Blocking", 1, [], [
                    fm(None, "Incomplete Blocking", 0.6, "Technician C", "outside my experience")])]),
]


def write(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2, ensure_ascii=False) + "\n")


def main():
    write(ROOT / "seo" / "elisa_design.seo.json", elisa)
    write(ROOT / "seo" / "lcms_design.seo.json", lcms)
    write(ROOT / "seo" / "automation.seo.json", automation)
    write(ROOT / "seo" / "program_director.seo.json", program)
    write(ROOT / "metrics" / "elisa_reference.seo.json", names_doc("ELISA", ref_fms, ref_mas, "Agent A"))
    write(ROOT / "metrics" / "elisa_candidate.seo.json", names_doc("ELISA", cand_fms, cand_mas, "Agent B"))
    write(ROOT / "metrics" / "lcms_run1.seo.json", names_doc("LCMS", lcms13, [], "Agent A"))
    write(ROOT / "metrics" / "lcms_run2.seo.json", names_doc("LCMS", list(reversed(lcms13)), [], "Agent A"))
    for i, dm in enumerate(contaminated, 1):
        write(ROOT / "guard" / f"contaminated_{i:02}.seo.json", operational(copy.deepcopy(dm)))
    for i, d in enumerate(accepted, 1):
        write(ROOT / "guard" / f"accepted_{i:02}.seo.json", d)


if __name__ == "__main__":
    main()
