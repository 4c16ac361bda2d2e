import numpy as np
import pytest

from rtenormal.grid import AngularField, GridSpec, ScalarField

# acceptance results, printed once at the end of the session
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small():
    return GridSpec(32, 16)


@pytest.fixture(scope="session")
def medium_grid():
    return GridSpec(64, 32)


def gaussian(spec, cx=0.0, cy=0.0, width=0.02):
    X, Y = spec.mesh()
    return np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / width)


def smooth_scalar(spec, rng, n_bumps=3):
    vals = np.zeros((spec.n_x, spec.n_x))
    for _ in range(n_bumps):
        c = rng.uniform(-0.4, 0.4, 2)
        vals += rng.normal() * gaussian(spec, c[0], c[1], 0.03)
    return ScalarField(spec, vals)


def smooth_angular(spec, rng):
    # smooth in space, a few harmonics in angle
    X, Y = spec.mesh()
    eta = spec.angles
    out = np.zeros((spec.n_d, spec.n_x, spec.n_x))
    for k in range(3):
        c = rng.uniform(-0.4, 0.4, 2)
        a, b = rng.normal(size=2)
        out += (a * np.cos(k * eta) + b * np.sin(k * eta))[:, None, None] * gaussian(spec, c[0], c[1], 0.03)[None]
    return AngularField(spec, out)
