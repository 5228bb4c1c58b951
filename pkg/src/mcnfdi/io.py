"""JSON documents: model ingestion and deterministic report emission.

Reports are written with a fixed key order and floats rounded to 12
significant digits, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import __version__
from .errors import ModelError
from .fdi import DetectabilityReport, FailureClassSet, FailureConfig
from .flow import HOLD_LAST, ZERO_OUT, gamma_by_simulation, gamma_coefficients
from .graph import Edge, ScheduledGraph, TreeDiagnosis, Violation, validate_topology
from .lti import ContinuousLTI
from .model import CTRL, MCN, OBS
from .subspace import ToleranceConfig

MODEL_KIND = "mcn-model"
SIG_DIGITS = 12


# ---------------------------------------------------------------- schemas

def schema(name: str) -> dict:
    text = resources.files("mcnfdi").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def check_schema(doc: dict, name: str) -> None:
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelError(f"{name} document invalid at {where}: {exc.message}") from None


# ---------------------------------------------------------------- encoding

def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ModelError(f"non-finite value {x} cannot be encoded")
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    if isinstance(obj, (set, frozenset)):
        return sorted(_clean(v) for v in obj)
    return obj


def _is_flat(v: Any) -> bool:
    # lists of scalars, or lists of lists of scalars (matrices), go on one line
    scalar = lambda x: not isinstance(x, (dict, list))
    return isinstance(v, list) and all(
        scalar(x) or (isinstance(x, list) and all(map(scalar, x))) for x in v)


def _emit(v: Any, indent: int) -> str:
    pad = "  " * (indent + 1)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(k, ensure_ascii=False)}: {_emit(x, indent + 1)}"
                 for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(v, list) and v and not _is_flat(v):
        items = [pad + _emit(x, indent + 1) for x in v]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    return json.dumps(v, ensure_ascii=False, separators=(", ", ": "))


def dumps(doc: dict) -> str:
    return _emit(_clean(doc), 0) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON: {exc}") from None


def read_document(path: str | Path) -> dict:
    try:
        return loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None


# ---------------------------------------------------------------- models

def _edges_from(doc: list[dict]) -> tuple[Edge, ...]:
    return tuple(Edge(e["from"], e["to"], float(e.get("weight", 1.0)),
                      None if e.get("slot") is None else int(e["slot"])) for e in doc)


def graph_from_doc(doc: dict, tag: str, Pi: int) -> ScheduledGraph:
    if tag == CTRL:
        source, sinks = doc["controller"], [doc["actuator"]]
    else:
        source, sinks = doc["sensor"], list(doc["terminating"])
    edges = _edges_from(doc.get("edges", []))
    nodes = doc.get("nodes")
    if nodes is None:
        return ScheduledGraph.build(edges, source, sinks, Pi)
    return ScheduledGraph(tuple(nodes), edges, source, tuple(sinks), Pi)


def graph_to_doc(g: ScheduledGraph, tag: str) -> dict:
    out: dict[str, Any] = {"nodes": list(g.nodes)}
    if tag == CTRL:
        out["controller"] = g.source
        out["actuator"] = g.sinks[0]
    else:
        out["sensor"] = g.source
        out["terminating"] = list(g.sinks)
    out["edges"] = [{"from": e.src, "to": e.dst, "weight": e.weight, "slot": e.slot}
                    for e in g.edges]
    return out


def parse_parts(doc: dict) -> tuple[dict, ScheduledGraph, ScheduledGraph]:
    """Schema-check a model document and build its graphs (unvalidated)."""
    check_schema(doc, "model")
    Pi = int(doc["pi"])
    return (doc["plant"], graph_from_doc(doc["controllability"], CTRL, Pi),
            graph_from_doc(doc["observability"], OBS, Pi))


def plant_from_doc(p: dict, minimality_tol: float = 1e-9) -> ContinuousLTI:
    return ContinuousLTI(np.array(p["A"], float), np.array(p["B"], float),
                         np.array(p["C"], float), minimality_tol)


def model_from_doc(doc: dict) -> MCN:
    p, g_R, g_O = parse_parts(doc)
    for tag, g in ((CTRL, g_R), (OBS, g_O)):
        v = validate_topology(g)
        if v:
            raise ModelError(f"graph {tag}: " + "; ".join(map(str, v)))
    return MCN(plant_from_doc(p), g_R, g_O, float(p["delta"]))


def model_protocol(doc: dict) -> str:
    return doc.get("protocol", ZERO_OUT)


def model_to_doc(m: MCN, protocol: str = ZERO_OUT) -> dict:
    return {
        "kind": MODEL_KIND,
        "version": __version__,
        "pi": m.Pi,
        "protocol": protocol,
        "plant": {"A": m.plant.A_c, "B": m.plant.B_c, "C": m.plant.C_c, "delta": m.delta},
        "controllability": graph_to_doc(m.g_R, CTRL),
        "observability": graph_to_doc(m.g_O, OBS),
    }


def load_model(path: str | Path) -> MCN:
    return model_from_doc(read_document(path))


def fixture_path(name: str) -> Path:
    p = resources.files("mcnfdi").joinpath("fixtures", f"{name}.json")
    return Path(str(p))


def fixture_names() -> list[str]:
    d = resources.files("mcnfdi").joinpath("fixtures")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> MCN:
    return load_model(fixture_path(name))


# ---------------------------------------------------------------- reports

def _header(kind: str, tol: ToleranceConfig | None = None) -> dict:
    h: dict[str, Any] = {"kind": kind, "version": __version__}
    if tol is not None:
        h["tolerances"] = {"rank_tol": tol.rank_tol, "eq_tol": tol.eq_tol}
    return h


def edge_doc(e: tuple[str, str, str]) -> list[str]:
    return list(e)


def failure_from_doc(items: list) -> FailureConfig:
    return FailureConfig(frozenset(tuple(x) for x in items))


def validation_report(parts_errors: list[str], violations: dict[str, list[Violation]],
                      extra: list[str]) -> dict:
    doc = _header("validation")
    doc["valid"] = not parts_errors and not any(violations.values()) and not extra
    doc["violations"] = [{"graph": tag, "rule": v.rule, "element": v.element}
                         for tag in (CTRL, OBS) for v in violations.get(tag, [])]
    doc["errors"] = list(parts_errors) + list(extra)
    return doc


def gamma_report(m: MCN) -> dict:
    doc = _header("gamma")
    chans = [(CTRL, m.g_R, m.g_R.sinks[0])] + [(OBS, m.g_O, s) for s in m.g_O.sinks]
    rows = []
    agree = True
    for tag, g, sink in chans:
        by_paths = [float(v) for v in gamma_coefficients(g, sink)]
        by_sim = [float(v) for v in gamma_by_simulation(g, sink)]
        D = max(len(by_paths), len(by_sim))
        by_paths += [0.0] * (D - len(by_paths))
        by_sim += [0.0] * (D - len(by_sim))
        dev = max((abs(a - b) for a, b in zip(by_paths, by_sim)), default=0.0)
        ok = dev < 1e-12
        agree &= ok
        rows.append({"graph": tag, "sink": sink, "D": D, "gamma": by_paths,
                     "gamma_simulated": by_sim, "max_deviation": dev, "agree": ok})
    doc["Pi"] = m.Pi
    doc["T"] = m.T
    doc["channels"] = rows
    doc["D_R"] = m.D_R
    doc["D_O"] = m.D_O
    doc["dims"] = dict(zip(("n_O", "n_P", "n_R"), m.dims))
    doc["methods_agree"] = agree
    return doc


def _class_doc(c, include_members: bool) -> dict:
    d = {"index": c.index, "label": c.label,
         "representative": sorted(edge_doc(e) for e in c.representative),
         "size": len(c.members), "in_sigma": c.in_sigma,
         "delta_R": c.signature.delta_R, "delta_O": c.signature.delta_O,
         "signature_dim": c.signature.image.dim}
    if include_members:
        d["members"] = [sorted(edge_doc(e) for e in s) for s in c.members]
    return d


def classes_report(m: MCN, cs: FailureClassSet, tol: ToleranceConfig,
                   include_members: bool = True) -> dict:
    doc = _header("classes", tol)
    doc["case"] = m.case()
    doc["scope"] = sorted({t for t, _, _ in cs.universe})
    doc["universe"] = [edge_doc(e) for e in cs.universe]
    doc["exhaustive"] = cs.exhaustive
    doc["max_cardinality"] = cs.max_cardinality
    doc["omega"] = [_class_doc(c, include_members) for c in cs.omega]
    doc["sigma"] = [c.label for c in cs.sigma]
    doc["phi"] = [c.label for c in cs.phi]
    return doc


def tree_doc(t: TreeDiagnosis) -> dict:
    return {"is_tree": t.is_tree, "offending_nodes": list(t.offending_nodes),
            "unreachable": list(t.unreachable), "leaf_mismatch": list(t.leaf_mismatch)}


def analysis_report(m: MCN, r: DetectabilityReport, tol: ToleranceConfig,
                    include_members: bool = False) -> dict:
    doc = _header("analysis", tol)
    g = gamma_report(m)
    doc["case"] = r.case
    doc["scope"] = list(r.scope)
    doc["gamma"] = [{"graph": c["graph"], "sink": c["sink"], "gamma": c["gamma"]}
                    for c in g["channels"]]
    doc["dims"] = g["dims"]
    doc["classes"] = [_class_doc(c, include_members) for c in r.classes.omega]
    doc["phi"] = [c.label for c in r.classes.phi]
    doc["verdicts"] = [{"class": r.classes.omega[i].label, "solvable": v}
                       for i, v in sorted(r.verdicts.items())]
    doc["all_solvable"] = r.all_solvable
    doc["tree"] = tree_doc(r.tree)
    doc["tree_after_trimming"] = r.tree_trimmed
    doc["n_S"] = r.n_S
    doc["n_phi"] = r.n_phi
    doc["d_L_phi"] = r.d_L_phi
    doc["L_phi_is_output_space"] = r.L_phi_is_output_space
    doc["prediction"] = r.prediction
    doc["anomalies"] = list(r.anomalies)
    doc["notes"] = list(r.notes)
    doc["recommendation"] = r.recommendation
    return doc


def trace_report(trace, m: MCN, scenario_doc: dict) -> dict:
    doc = _header("trace")
    doc["scenario"] = scenario_doc
    doc["labels"] = list(trace.labels)
    frames = []
    for k in range(trace.frames):
        row: dict[str, Any] = {"frame": k, "u": trace.u[k], "u_tilde": trace.u_tilde[k],
                               "x_P": trace.x_P[k], "y": trace.y[k]}
        if trace.residuals is not None:
            row["r"] = trace.residuals[k]
        if trace.detected is not None:
            row["detected"] = sorted(trace.detected[k])
        frames.append(row)
    doc["frames"] = frames
    if trace.slots is not None:
        doc["slots"] = [{"frame": s["frame"], "slot": s["slot"],
                         "R": {f"{a}->{b}": v for (a, b), v in s["R"].items()},
                         "O": {f"{a}->{b}": v for (a, b), v in s["O"].items()}}
                        for s in trace.slots]
    return doc


def trace_csv(trace) -> str:
    n_S = trace.y.shape[1]
    m = 0 if trace.residuals is None else trace.residuals.shape[1]
    head = ["frame", "u", "u_tilde"] + [f"y_{i + 1}" for i in range(n_S)]
    head += [f"r_{j + 1}" for j in range(m)] + ["detected"]
    lines = [",".join(head)]
    fmt = lambda x: repr(_clean(float(x)))
    for k in range(trace.frames):
        cells = [str(k), fmt(trace.u[k]), fmt(trace.u_tilde[k])]
        cells += [fmt(v) for v in trace.y[k]]
        if m:
            cells += [fmt(v) for v in trace.residuals[k]]
        det = sorted(trace.detected[k]) if trace.detected is not None else []
        cells.append('"' + ";".join(det) + '"' if det else "")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
