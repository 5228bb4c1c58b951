import numpy as np
import pytest

from mcnfdi.io import load_fixture


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["chain", "diamond", "tree2", "tree3"])
def any_fixture(request):
    return request.param, load_fixture(request.param)


@pytest.fixture
def chain():
    return load_fixture("chain")


@pytest.fixture
def diamond():
    return load_fixture("diamond")


@pytest.fixture
def tree2():
    return load_fixture("tree2")


@pytest.fixture
def tree3():
    return load_fixture("tree3")


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
