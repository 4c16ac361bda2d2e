"""Oracle comparisons behind ``rtenormal verify``."""
from __future__ import annotations

import numpy as np

from . import oracle
from .grid import GridSpec, ScalarField
from .pipeline import adjoint_XV, forward_XV
from .scene import make_phantom, spiral_bumps
from .spectral import fractional_dft, rotate_array, spectral_shift
from .transport import CutoffSpec, MediumSpec, sweep_backward, sweep_forward


def _rel(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def run_checks(grid=None, seed=0):
    """Return ``[(name, passed, detail), ...]``; default grid is 128 x 64."""
    grid = grid or GridSpec(128, 64)
    rng = np.random.default_rng(seed)
    rows = []

    def add(name, err, tol):
        rows.append((name, bool(err <= tol), f"err={err:.3e} tol={tol:.0e}"))

    for N in (64, 256):
        x = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        alpha = -0.5 / N / (2 * N)
        ref = oracle.direct_fractional_dft(x, alpha)
        add(f"fractional_dft chirp-z vs direct sum (N={N})", _rel(fractional_dft(x, alpha, method="chirpz"), ref), 1e-9)

    x = rng.standard_normal(32)
    add("spectral_shift vs dense interpolant", _rel(spectral_shift(x, 0.37), oracle.direct_spectral_shift(x, 0.37)), 1e-9)

    X, Y = grid.mesh()
    bump = np.exp(-((X - 0.3) ** 2 + Y**2) / 0.02)
    add("rotation round trip (+-0.4)", _rel(rotate_array(rotate_array(bump, 0.4), -0.4), bump), 1e-3)
    add("rotation vs bilinear oracle (0.4)", _rel(rotate_array(bump, 0.4), oracle.bilinear_rotate(bump, 0.4)), 1e-2)

    g = rng.standard_normal((4, grid.n_x, grid.n_x))
    v = rng.standard_normal((4, grid.n_x, grid.n_x))
    sig = rng.uniform(0, 0.9 / grid.s_x, (4, grid.n_x, grid.n_x))
    lhs = np.sum(sweep_forward(g, sig) * v)
    rhs = np.sum(g * sweep_backward(v, sig))
    add("sweep transpose identity", abs(lhs - rhs) / abs(lhs), 1e-12)

    vac = MediumSpec.vacuum(grid)
    disk = ScalarField(grid, (X**2 + Y**2 < 0.25).astype(float))
    full = CutoffSpec.full()
    fwd = forward_XV(disk, vac, full, 0, keep_terms=False)
    chord = 2 * np.sqrt(np.clip(0.25 - grid.nodes**2, 0, None))
    add("X-ray limit vs analytic chord", _rel(fwd.data.values, np.broadcast_to(chord, fwd.data.values.shape)), 3e-2)

    img = adjoint_XV(fwd.data, vac, full, 0, keep_terms=False).image.values
    c = grid.n_x // 2
    centre = img[c - 1 : c + 1, c - 1 : c + 1].mean()
    ref = oracle.oracle_normal_point(disk, [0.0, 0.0], vac, full)
    add("normal operator at origin vs 2/|x-y| oracle", abs(centre - ref) / ref, 5e-2)

    src = make_phantom(spiral_bumps(), grid)
    med = MediumSpec.constant_absorption(grid, 0.5)
    data = forward_XV(src, med, full, 0, keep_terms=False).data.values
    add("attenuated transform vs ray march", _rel(data, oracle.oracle_xray_data(src, med.sigma)), 3e-2)
    return rows
