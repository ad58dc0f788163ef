import math
import re

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from ifbsa.fock import ModeLabel, OccupationVector, PhotonicState, normalize

# exact Fock simulations are slow per example; timing is not what these tests check
settings.register_profile("ifbsa", deadline=None)
settings.load_profile("ifbsa")

INPUT_MODES = [ModeLabel(p, s, t) for p in ("a", "b") for s in (0, 1) for t in (0, 1)]


@st.composite
def occupations(draw, max_photons=3):
    n = draw(st.integers(1, max_photons))
    modes = draw(st.lists(st.sampled_from(INPUT_MODES), min_size=n, max_size=n))
    counts: dict = {}
    for m in modes:
        counts[m] = counts.get(m, 0) + 1
    return OccupationVector.from_counts(counts)


@st.composite
def random_states(draw, max_terms=4, max_photons=3):
    """Normalized superpositions on ports a, b (slots 0-1, tags 0-1)."""
    vecs = draw(st.lists(occupations(max_photons), min_size=1, max_size=max_terms, unique=True))
    amps = {}
    for v in vecs:
        r = draw(st.floats(0.1, 1.0))
        phi = draw(st.floats(0, 2 * math.pi))
        amps[v] = r * complex(math.cos(phi), math.sin(phi))
    return normalize(PhotonicState(amps))


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: (int(re.match(r"\d+", l).group()), l)):
            terminalreporter.write_line(line)


angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False, allow_infinity=False)


@pytest.fixture
def a0():
    return ModeLabel("a", 0)


@pytest.fixture
def b0():
    return ModeLabel("b", 0)
