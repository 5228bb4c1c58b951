import json

import numpy as np
import pytest

from mcnfdi.errors import ModelError
from mcnfdi.fdi import classify_detectability, enumerate_failure_classes
from mcnfdi.io import (
    analysis_report,
    check_schema,
    classes_report,
    dumps,
    fixture_names,
    fixture_path,
    gamma_report,
    load_fixture,
    loads,
    model_from_doc,
    model_to_doc,
    read_document,
)
from mcnfdi.subspace import DEFAULT_TOL


def test_fixture_names():
    assert fixture_names() == ["chain", "diamond", "tree2", "tree3"]


def test_model_round_trip(any_fixture):
    name, m = any_fixture
    doc = model_to_doc(m)
    text = dumps(doc)
    assert text == fixture_path(name).read_text()
    m2 = model_from_doc(loads(text))
    assert np.array_equal(m2.system.A, m.system.A)
    assert m2.g_O == m.g_O and m2.g_R == m.g_R


def test_reports_round_trip_and_schema(any_fixture):
    _, m = any_fixture
    r = classify_detectability(m)
    for doc, kind in ((gamma_report(m), "gamma"),
                      (classes_report(m, r.classes, DEFAULT_TOL), "classes"),
                      (analysis_report(m, r, DEFAULT_TOL), "analysis")):
        text = dumps(doc)
        check_schema(loads(text), kind)
        assert dumps(loads(text)) == text


def test_float_formatting():
    text = dumps({"x": 1 / 3, "y": -0.0, "z": [1e-20, 123456789012345.0]})
    assert json.loads(text) == {"x": 0.333333333333, "y": 0.0, "z": [1e-20, 123456789012000.0]}
    with pytest.raises(ModelError):
        dumps({"x": float("nan")})


def test_determinism(tree2):
    r1 = classify_detectability(tree2)
    r2 = classify_detectability(load_fixture("tree2"))
    assert dumps(analysis_report(tree2, r1, DEFAULT_TOL)) == \
        dumps(analysis_report(tree2, r2, DEFAULT_TOL))


def test_schema_rejects_bad_model():
    doc = read_document(fixture_path("chain"))
    del doc["plant"]["delta"]
    with pytest.raises(ModelError, match="delta"):
        model_from_doc(doc)
    doc = read_document(fixture_path("chain"))
    doc["controllability"]["edges"][0]["weight"] = "heavy"
    with pytest.raises(ModelError):
        model_from_doc(doc)


def test_topology_violation_reported():
    doc = read_document(fixture_path("chain"))
    doc["controllability"]["edges"][0]["weight"] = 0.0
    with pytest.raises(ModelError, match="NonPositiveWeight"):
        model_from_doc(doc)


def test_mismatched_frame_length():
    doc = read_document(fixture_path("chain"))
    doc["pi"] = 1
    with pytest.raises(ModelError, match="SlotOutOfRange"):
        model_from_doc(doc)


def test_malformed_json():
    with pytest.raises(ModelError):
        loads("{not json")


def test_classes_report_members(diamond):
    cs = enumerate_failure_classes(diamond)
    doc = classes_report(diamond, cs, DEFAULT_TOL)
    assert sum(c["size"] for c in doc["omega"]) == 16
    total = doc["omega"][-1]
    assert total["in_sigma"] and list(total["delta_R"]) == [0.5, 0.5]
    assert "members" not in classes_report(diamond, cs, DEFAULT_TOL, include_members=False)["omega"][0]
