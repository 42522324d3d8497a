import pytest

from femtosim.model import GBR, NonGBR, ModelParams
from femtosim.topology import FbsNode, UeNode, build_topology, simple_topology


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def singleton_gbr():
    return build_topology([FbsNode(1, 0.0, 0.0)], [UeNode(1, 5.0, 0.0, GBR(10.0))])


@pytest.fixture
def singleton_non_gbr():
    return build_topology([FbsNode(1, 0.0, 0.0)], [UeNode(1, 5.0, 0.0, NonGBR(20.0))])


@pytest.fixture
def two_cell():
    """UE 1 served by FBS 1 and also covered by FBS 2, which serves UE 2."""
    fbs = [FbsNode(1, 0.0, 0.0), FbsNode(2, 15.0, 0.0)]
    ues = [UeNode(1, 7.5, 0.0, NonGBR(20.0)), UeNode(2, 20.0, 0.0, NonGBR(20.0))]
    return build_topology(fbs, ues)


@pytest.fixture(scope="session")
def simple():
    return simple_topology()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
