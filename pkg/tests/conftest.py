"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from flexchain import LinkParameters, LinkState
from flexchain.screws import polar_orthonormalize


def canonical_params(E=7.0e10, l1=0.0, l2=1.0):
    """The aluminum slender link used throughout: rho=2700, A=1e-4,
    Iy=Iz=1e-9, unit length unless overridden."""
    return LinkParameters(rho=2700.0, E=E, A=1.0e-4, l1=l1, l2=l2,
                          Iy=1.0e-9, Iz=1.0e-9)


def random_rotation(rng):
    return polar_orthonormalize(rng.standard_normal((3, 3)))


def random_state(rng, scale=0.5):
    return LinkState(random_rotation(rng),
                     rng.standard_normal(3) * scale,
                     rng.standard_normal(3) * scale,
                     rng.standard_normal(3) * scale)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# ---------------------------------------------------------------------------
# acceptance summary: collect one line per criterion and echo them at the end
# of the run so they are visible in the normal (captured) pytest output

ACCEPTANCE_LINES = []


def acceptance_report(number, name, ok, detail, seconds):
    line = "ACCEPTANCE %d %-24s %s  %s  [%.1f s]" % (
        number, name + ":", "PASS" if ok else "FAIL", detail, seconds)
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
