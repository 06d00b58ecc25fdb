import functools

import pytest

from modeforge.codebook import build_codebook
from modeforge.combiners import CombinerSpec
from modeforge.patterns import make_grid, synthesize_prototype_patterns

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sphere():
    return make_grid(181, 360)


@pytest.fixture(scope="session")
def coarse():
    # 5 degree steps: holds all 37 cut targets and keeps searches fast
    return make_grid(37, 72)


@pytest.fixture(scope="session")
def pset4(sphere):
    return synthesize_prototype_patterns(4, sphere, 0)


@pytest.fixture(scope="session")
def pset2(sphere):
    return synthesize_prototype_patterns(2, sphere, 0)


@pytest.fixture(scope="session")
def coarse4(coarse):
    return synthesize_prototype_patterns(4, coarse, 0)


@pytest.fixture(scope="session")
def codebooks4(pset4):
    """Lazily built 37-target codebooks on the M = 4 set, keyed by spec arguments."""

    @functools.lru_cache(maxsize=None)
    def get(scheme, criterion, phase_levels=None, closed_form=True):
        spec = CombinerSpec(scheme, criterion, phase_levels)
        return build_codebook(pset4, 37, spec, closed_form=closed_form)

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
