#!/usr/bin/env python3
"""Feasibility check over the shipped fixture stores and documents. Exits 1 on any failed constraint."""

import collections
import json
import pathlib
import sys
from decimal import Decimal

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def load_store(path):
    nodes, edges = {}, []
    lines = path.read_text().splitlines()
    for line in lines[1:]:
        rec = json.loads(line)
        if rec["kind"] == "node":
            nodes[(rec["subgraph"], rec["label"], rec["id"])] = {
                k: v["value"] for k, v in rec["properties"].items()}
        else:
            edges.append(dict(rec, pending=rec["kind"] == "pending_edge"))
    return nodes, edges


def key(ref):
    return (ref["subgraph"], ref["label"], ref["id"])


def main():
    failures = []

    def check(name, ok, detail=""):
        print(f"{'ok  ' if ok else 'FAIL'} {name}{' ' + str(detail) if detail else ''}")
        if not ok:
            failures.append(name)

    nodes, edges = load_store(ROOT / "graphs" / "federated.skg.jsonl")
    _, pending_edges = load_store(ROOT / "graphs" / "federated_pending.skg.jsonl")

    def fms(sg):
        return {k: v for k, v in nodes.items() if k[0] == sg and k[1] == "FailureMode"}

    for sg, n, mean in [("ELISA", 18, Decimal("0.82")), ("LCMS", 23, Decimal("0.71"))]:
        conf = [Decimal(str(v["confidence"])) for v in fms(sg).values()]
        check(f"{sg} failure modes", len(conf) == n, len(conf))
        avg = sum(conf) / len(conf)
        check(f"{sg} mean confidence", abs(avg - mean) <= Decimal("0.005"), avg)

    lcms = fms("LCMS")
    floor = [k for k, v in lcms.items() if Decimal(str(v["confidence"])) == Decimal("0.6")]
    check("LCMS nodes at 0.60", len(floor) == 3, len(floor))
    fm22 = lcms.get(("LCMS", "FailureMode", "FM-LCMS-022"), {})
    check("FM-LCMS-022", Decimal(str(fm22.get("confidence"))) == Decimal("0.65")
          and fm22.get("silent_failure_risk") is True, fm22.get("confidence"))

    assets = [k for k in nodes if k[1] == "AutomationAsset"]
    use_cases = {nodes[k]["name"] for k in nodes if k[1] == "UseCase"}
    check("automation assets", len(assets) == 22, len(assets))
    check("use cases", len(use_cases) == 15, len(use_cases))
    check("named use cases", {"Serial Dilution", "Plate Washing", "Precious Reagent Dispensing"} <= use_cases)
    bridges = [e for e in edges if e["edge_type"] == "REQUIRES_AUTOMATION"]
    check("REQUIRES_AUTOMATION edges", len(bridges) == 31, len(bridges))

    readout = ("ELISA", "WorkflowStep", "S09")
    dps = [e for e in edges if e["edge_type"] == "HAS_DECISION_POINT" and key(e["src"]) == readout]
    check("Plate Readout decision points", len(dps) == 6 and nodes[readout]["name"] == "Plate Readout", len(dps))

    cascades = collections.defaultdict(set)
    for e in edges:
        if e["edge_type"] == "CASCADES_TO":
            cascades[nodes[key(e["src"])]["name"]].add(nodes[key(e["dst"])]["name"])
    chain = ("Washer Carryover" in cascades and "High Background / Nonspecific Signal" in cascades["Washer Carryover"]
             and "Standard Curve Failure" in cascades["High Background / Nonspecific Signal"])
    check("cascade chain", chain)

    masked = [e for e in pending_edges if e["edge_type"] == "MASKED_BY"]
    check("MASKED_BY edges pending before convergence", len(masked) == 2 and all(e.get("pending") for e in masked),
          len(masked))
    for e in (e for e in edges if e["edge_type"] == "MASKED_BY"):
        check(f"MASKED_BY source silent {e['src']['id']}", nodes[key(e["src"])]["silent_failure_risk"] is True)

    guard = sorted((ROOT / "guard").glob("contaminated_*.seo.json"))
    check("contaminated guard documents", len(guard) == 20, len(guard))
    for path in guard:
        doc = json.loads(path.read_text())
        dm = doc["decision_model"]
        populated = (doc["session_mode"] == "OPERATIONAL"
                     and (dm["_elicitation_scope"] != "operational_only" or dm["decision_points"] is not None
                          or dm["design_rationale"] is not None))
        check(f"guard {path.name}", populated)

    if failures:
        print(f"{len(failures)} constraint(s) failed", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
