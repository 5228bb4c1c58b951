"""Command-line interface: ``mcnfdi <command> ...``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure (a tolerance
certificate was violated), 3 enumeration budget exceeded. Verdicts such as
"unsolvable" are report data, not errors.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import MCNError, ModelError
from .fdi import FailureConfig, classify_detectability, enumerate_failure_classes
from .flow import HOLD_LAST, ZERO_OUT
from .graph import design_observability_tree, is_jointly_connected, validate_topology
from .io import (analysis_report, check_schema, classes_report, dumps, gamma_report,
                 graph_to_doc, model_from_doc, model_protocol, parse_parts, plant_from_doc,
                 read_document, trace_csv, trace_report, validation_report)
from .model import CTRL, MCN, OBS
from .residuals import (DEFAULT_PERSISTENCE, DEFAULT_THRESHOLD, DetectorConfig,
                        synthesize_residual_bank, run_detector)
from .selftest import run_selftest
from .simulator import Impulse, RandomInput, Samples, Scenario, Step, simulate_scenario
from .subspace import ToleranceConfig


class _Parser(argparse.ArgumentParser):
    # usage errors are input-validation failures (exit 1), not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ModelError(message)


def _tol(args) -> ToleranceConfig:
    return ToleranceConfig(args.rank_tol, args.eq_tol)


def _emit(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _scope(args):
    return None if args.scope == "auto" else args.scope


# ---------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    doc = read_document(args.model)
    try:
        p, g_R, g_O = parse_parts(doc)
    except (ModelError, KeyError, TypeError, ValueError) as exc:
        _emit(args, dumps(validation_report([str(exc)], {}, [])))
        return 1
    violations = {CTRL: validate_topology(g_R), OBS: validate_topology(g_O)}
    extra = []
    try:
        plant_from_doc(p)
    except ModelError as exc:
        extra.append(f"plant: {exc}")
    if not any(violations.values()):
        if len(g_R.sinks) != 1:
            extra.append("controllability graph must have exactly one actuator")
        for tag, g in ((CTRL, g_R), (OBS, g_O)):
            if not is_jointly_connected(g):
                extra.append(f"graph {tag} is not jointly connected by its schedule")
    if model_protocol(doc) not in (ZERO_OUT, HOLD_LAST):
        extra.append(f"unknown protocol {model_protocol(doc)!r}")
    rep = validation_report([], violations, extra)
    _emit(args, dumps(rep))
    return 0 if rep["valid"] else 1


def _load(args) -> MCN:
    return model_from_doc(read_document(args.model))


def cmd_gamma(args) -> int:
    _emit(args, dumps(gamma_report(_load(args))))
    return 0


def cmd_classes(args) -> int:
    m = _load(args)
    tol = _tol(args)
    cs = enumerate_failure_classes(m, args.max_cardinality, _scope(args), tol)
    _emit(args, dumps(classes_report(m, cs, tol, include_members=not args.no_members)))
    return 0


def cmd_analyze(args) -> int:
    m = _load(args)
    tol = _tol(args)
    r = classify_detectability(m, _scope(args), args.max_cardinality, tol)
    _emit(args, dumps(analysis_report(m, r, tol, include_members=args.members)))
    return 0


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ModelError(f"expected comma-separated integers, got {text!r}") from None


def cmd_design_tree(args) -> int:
    delays = _int_list(args.delays) if args.delays else [1] * args.n_s
    depth = args.depth if args.depth is not None else max(delays)
    g = design_observability_tree(args.n_s, delays, depth)
    if args.model:
        # splice into an existing model document; the frame length follows the tree
        doc = read_document(args.model)
        check_schema(doc, "model")
        doc["pi"] = depth
        doc["observability"] = graph_to_doc(g, OBS)
        for e in doc["controllability"]["edges"]:
            if e.get("slot") is not None and e["slot"] > depth:
                raise ModelError(f"controllability slot {e['slot']} exceeds the designed "
                                 f"frame length {depth}")
        model_from_doc(doc)
    else:
        doc = {"kind": "design", "version": __version__, "pi": depth,
               "leaf_delays": delays, "observability": graph_to_doc(g, OBS)}
        check_schema(doc, "design")
    _emit(args, dumps(doc))
    return 0


def _parse_input(spec: str):
    kind, _, arg = spec.partition(":")
    if kind == "impulse":
        return Impulse(float(arg) if arg else 1.0)
    if kind == "step":
        return Step(float(arg) if arg else 1.0)
    if kind == "random":
        return RandomInput(float(arg) if arg else 1.0)
    if kind == "samples":
        if not arg:
            raise ModelError("samples input needs values or a file: samples:1,0,2 or samples:@file")
        if arg.startswith("@"):
            text = Path(arg[1:]).read_text()
            vals = [float(t) for t in text.replace(",", " ").split()]
        else:
            vals = [float(t) for t in arg.split(",")]
        return Samples(tuple(vals))
    raise ModelError(f"unknown input kind {kind!r} (impulse, step, random, samples)")


def _parse_injection(spec: str) -> tuple[int, FailureConfig]:
    """``K0:TAG:SRC:DST[+TAG:SRC:DST...]``."""
    head, _, rest = spec.partition(":")
    try:
        k0 = int(head)
    except ValueError:
        raise ModelError(f"injection {spec!r} must start with a frame number") from None
    edges = []
    for part in rest.split("+"):
        bits = part.split(":")
        if len(bits) != 3 or bits[0] not in (CTRL, OBS):
            raise ModelError(f"link {part!r} must be TAG:SRC:DST with TAG R or O")
        edges.append(tuple(bits))
    return k0, FailureConfig(frozenset(edges))


def _scenario(args, doc) -> Scenario:
    protocol = args.protocol or model_protocol(doc)
    inj = tuple(_parse_injection(s) for s in args.inject or [])
    return Scenario(args.frames, _parse_input(args.input), inj, protocol, args.seed)


def _scenario_doc(args, s: Scenario) -> dict:
    return {"frames": s.frames, "input": args.input, "protocol": s.protocol, "seed": s.seed,
            "injections": [{"frame": k0, "links": sorted(list(e) for e in f.edges)}
                           for k0, f in s.injections]}


def _bank(m: MCN, args, required: bool):
    try:
        return synthesize_residual_bank(m, tol=_tol(args))
    except ModelError:
        if required:
            raise
        return None


def cmd_simulate(args) -> int:
    doc = read_document(args.model)
    m = model_from_doc(doc)
    s = _scenario(args, doc)
    bank = _bank(m, args, required=False) if args.residuals else None
    detector = DetectorConfig(args.threshold, args.persistence)
    tr = simulate_scenario(m, s, bank, detector, verbose_slots=args.verbose_slots)
    if args.format == "csv":
        _emit(args, trace_csv(tr))
    else:
        rep = trace_report(tr, m, _scenario_doc(args, s))
        _emit(args, dumps(rep))
    return 0


def _read_trace(path: str, n_S: int) -> tuple[np.ndarray, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".csv"):
        rows = list(csv.DictReader(_stdio.StringIO(text)))
        u = np.array([float(r["u"]) for r in rows])
        y = np.array([[float(r[f"y_{i + 1}"]) for i in range(n_S)] for r in rows])
        return u, y.reshape(len(rows), n_S)
    from .io import loads
    doc = loads(text)
    frames = doc.get("frames", [])
    u = np.array([f["u"] for f in frames], float)
    y = np.array([f["y"] for f in frames], float).reshape(len(frames), n_S)
    return u, y


def cmd_detect(args) -> int:
    doc = read_document(args.model)
    m = model_from_doc(doc)
    bank = _bank(m, args, required=True)
    cfg = DetectorConfig(args.threshold, args.persistence)
    if args.trace:
        u, y = _read_trace(args.trace, m.n_S)
    else:
        tr = simulate_scenario(m, _scenario(args, doc))
        u, y = tr.u, tr.y
    r = bank.residuals(u, y)
    det = run_detector(bank, u, y, cfg, residuals=r)
    first = {lab: next((k for k, d in enumerate(det) if lab in d), None) for lab in bank.labels}
    rep = {"kind": "detection", "version": __version__, "threshold": cfg.threshold,
           "persistence": cfg.persistence, "transient": bank.transient,
           "labels": bank.labels,
           "frames": [{"frame": k, "r": r[k], "detected": sorted(det[k])}
                      for k in range(len(det))],
           "first_detection": first}
    _emit(args, dumps(rep))
    return 0


def cmd_selftest(args) -> int:
    results = run_selftest(args.seed, args.scale)
    rep = {"kind": "selftest", "version": __version__,
           "passed": all(r.passed for r in results),
           "checks": [{"name": r.name, "passed": r.passed, "instances": r.instances,
                       "detail": r.detail} for r in results]}
    _emit(args, dumps(rep))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} "
              f"({r.instances} instances, {r.seconds:.2f}s)", file=sys.stderr)
    return 0 if rep["passed"] else 2


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mcnfdi", description="Link-failure detectability for multi-hop "
                                           "control networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=1e-10)
    common.add_argument("--eq-tol", type=float, default=1e-8)
    common.add_argument("-o", "--output", help="write the document here instead of stdout")
    enum = _Parser(add_help=False)
    enum.add_argument("--max-cardinality", type=int, default=None,
                      help="largest link set to enumerate (default: all subsets)")
    enum.add_argument("--scope", default="auto",
                      help="failure-prone graphs: auto, all, R, O or R,O")
    scen = _Parser(add_help=False)
    scen.add_argument("--frames", type=int, default=50)
    scen.add_argument("--input", default="impulse",
                      help="impulse[:a], step[:a], random[:scale], samples:v1,v2,... or samples:@file")
    scen.add_argument("--inject", action="append", metavar="K0:TAG:SRC:DST[+...]",
                      help="fail links from frame K0 on (repeatable)")
    scen.add_argument("--protocol", choices=(ZERO_OUT, HOLD_LAST), default=None)
    scen.add_argument("--seed", type=int, default=0)
    det = _Parser(add_help=False)
    det.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    det.add_argument("--persistence", type=int, default=DEFAULT_PERSISTENCE)

    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("validate", parents=[common], help="topology, schedule and plant checks")
    s.add_argument("model")
    s.set_defaults(func=cmd_validate)
    s = sub.add_parser("gamma", parents=[common], help="network transfer coefficients")
    s.add_argument("model")
    s.set_defaults(func=cmd_gamma)
    s = sub.add_parser("classes", parents=[common, enum], help="failure equivalence classes")
    s.add_argument("model")
    s.add_argument("--no-members", action="store_true", help="omit member link sets")
    s.set_defaults(func=cmd_classes)
    s = sub.add_parser("analyze", parents=[common, enum], help="detectability report")
    s.add_argument("model")
    s.add_argument("--members", action="store_true", help="list member link sets per class")
    s.set_defaults(func=cmd_analyze)
    s = sub.add_parser("design-tree", parents=[common], help="design an observability tree")
    s.add_argument("--n-s", type=int, required=True, help="number of terminating nodes")
    s.add_argument("--delays", help="comma-separated frame delay per leaf (default all 1)")
    s.add_argument("--depth", type=int, help="hops per branch (default: largest delay)")
    s.add_argument("--model", help="splice the tree into this model document")
    s.set_defaults(func=cmd_design_tree)
    s = sub.add_parser("simulate", parents=[common, scen, det], help="run a failure scenario")
    s.add_argument("model")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--verbose-slots", action="store_true", help="include per-slot link values")
    s.add_argument("--no-residuals", dest="residuals", action="store_false",
                   help="skip the residual bank even when one exists")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("detect", parents=[common, scen, det], help="residuals and detections")
    s.add_argument("model")
    s.add_argument("--trace", help="trace file (JSON from simulate, or CSV); "
                                   "otherwise the scenario flags are simulated")
    s.set_defaults(func=cmd_detect)
    s = sub.add_parser("selftest", parents=[common], help="run the randomized oracle checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale", type=float, default=1.0, help="multiply instance counts")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except MCNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
