import os

import pytest
from hypothesis import HealthCheck, settings

from spraysim import cli
from spraysim.scenario import GeneratorSpec, generate_scenario

settings.register_profile("default", max_examples=60, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
FIELD_SEEDS = "1,2,3"

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def record_acceptance(number: int, title: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES[number] = f"[{status}] criterion {number:2d}: {title}" + (f" ({detail})" if detail else "")
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def naju():
    return generate_scenario(GeneratorSpec(), seed=0)


@pytest.fixture(scope="session")
def field_compare(tmp_path_factory):
    """``spraysim compare`` on the built-in row with the field seeds; returns the output dir."""
    out = tmp_path_factory.mktemp("compare_a")
    rc = cli.main(["compare", "--scenario", "naju_default", "--seeds", FIELD_SEEDS,
                   "--out", str(out), "--jobs", "1"])
    assert rc == 0
    return out
