import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hjfrac.grid import ScalarField, make_grid

settings.register_profile(
    "hjfrac", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("hjfrac")

TWO_PI = 2 * np.pi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid256():
    return make_grid(1, 256, TWO_PI)


def smooth_random(grid, rng, modes=4, amplitude=1.0):
    """Random trigonometric polynomial with a few low modes."""
    coords = grid.coordinates()
    u = np.zeros(grid.shape)
    for _ in range(modes):
        k = rng.integers(-4, 5, size=grid.dim)
        arg = sum(2 * np.pi * kk * x / grid.period for kk, x in zip(k, coords))
        u += rng.normal() * np.cos(arg + rng.uniform(0, TWO_PI))
    return ScalarField(grid, amplitude * u / max(1e-12, np.max(np.abs(u))))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
