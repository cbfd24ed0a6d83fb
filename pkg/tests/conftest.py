"""
Shared fixtures for the scsl test suite
"""

import pytest

import config
from engine.evaluator import constant_values
from language.parser import parse, parse_file
from managers.systest_manager import SystestManager
from models.specification import Specification
from persistence.artifact_store import ArtifactStore
from testgen.suite_io import read_suite


def load_spec(source: str, filename: str = "<test>") -> Specification:
    """Parse source and fail the calling test with the diagnostics on error"""
    result = parse(source, filename)
    if isinstance(result, list):
        pytest.fail("\n".join(str(d) for d in result))
    return result


@pytest.fixture(scope="session")
def rover_spec() -> Specification:
    spec = parse_file(config.ROVER_SPEC_FILE)
    assert isinstance(spec, Specification), spec
    return spec


@pytest.fixture(scope="session")
def rover_consts(rover_spec):
    return constant_values(rover_spec)


@pytest.fixture(scope="session")
def figure_spec() -> Specification:
    spec = parse_file(config.FIGURE_SPEC_FILE)
    assert isinstance(spec, Specification), spec
    return spec


@pytest.fixture
def init_suite():
    suite, diagnostics = read_suite(config.INIT_SUITE_FILE)
    assert suite is not None, diagnostics
    return suite


@pytest.fixture
def store(tmp_path) -> ArtifactStore:
    return ArtifactStore(str(tmp_path / "store"))


@pytest.fixture
def manager(store) -> SystestManager:
    return SystestManager(store)


@pytest.fixture(scope="session")
def experiments():
    return SystestManager().load_experiments()


def pytest_addoption(parser):
    parser.addoption("--run-udp", action="store_true", default=False,
                     help="run tests that need a loopback multicast route")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-udp"):
        return
    skip_udp = pytest.mark.skip(reason="needs --run-udp")
    for item in items:
        if "udp" in item.keywords:
            item.add_marker(skip_udp)
