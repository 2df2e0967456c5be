import numpy as np
import pytest

from slopekit.spaces import FiniteMetricSpace, GridSpace

# one verdict line per acceptance criterion, echoed after the test summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_euclidean_space(rng, n_max=50, dim_max=3):
    """A random finite metric space built from Euclidean point clouds, so the
    triangle inequality holds by construction."""
    n = int(rng.integers(2, n_max + 1))
    dim = int(rng.integers(1, dim_max + 1))
    pts = rng.uniform(-5.0, 5.0, size=(n, dim))
    # nudge duplicates apart
    for i in range(n):
        for j in range(i):
            if np.linalg.norm(pts[i] - pts[j]) < 1e-9:
                pts[i] += rng.uniform(0.1, 0.2, size=dim)
    D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    labels = [f"p{i}" for i in range(n)]
    return FiniteMetricSpace(labels, D)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def line_space():
    """Seven evenly spaced points on a line, f left implicit."""
    coords = np.arange(-3.0, 3.5, 1.0)[:, None]
    return GridSpace(coords)
