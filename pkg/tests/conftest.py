import math

import pytest

from santalo_lab.bodies import HullBodyParams
from santalo_lab.profile import polar_centroid_height
from santalo_lab.volmc import RandomStream

SEED = 20240001
_RESULTS: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Store the outcome of an acceptance criterion for the end-of-run summary."""
    _RESULTS[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        ok, detail = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def centroid200():
    return polar_centroid_height(HullBodyParams(200), 64, 100_000, RandomStream(SEED))


@pytest.fixture(scope="session")
def centroid100():
    return polar_centroid_height(HullBodyParams(100), 64, 100_000, RandomStream(SEED), max_tail_fraction=math.inf)
