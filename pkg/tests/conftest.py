import numpy as np
import pytest

from conformal_rigidity.bilinear import as_form, invert_form
from conformal_rigidity.hypersurface import FundamentalData, jets_on_grid
from conformal_rigidity.mobius import random_mobius

ACCEPTANCE_LINES = []


def forms(g, h, lam_mean=0.0):
    """Fundamental data carrying just ``g`` and ``h`` (for form-level tests)."""
    g = as_form(g)
    h = as_form(h)
    return FundamentalData(g, invert_form(g), None, 1, h + lam_mean * g, lam_mean, h)


def tame_mobius(space, imm, grid, rng, max_steps=4, lo=0.02, hi=50.0):
    """Random composition whose conformal factor stays in ``[lo, hi]`` on the grid.

    Keeps the image surface away from infinity so that comparisons stay
    well conditioned.
    """
    points = [jet.x for jet in jets_on_grid(imm, grid)]
    while True:
        count = int(rng.integers(1, max_steps + 1))
        m, steps = random_mobius(space, rng, count)
        try:
            factors = [m.conformal_factor(x) for x in points]
        except Exception:
            continue
        if lo < min(factors) and max(factors) < hi:
            return m, steps


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
