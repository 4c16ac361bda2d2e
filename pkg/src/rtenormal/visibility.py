"""Which edges of the source the partial data can see.

A covector ``(x, xi)`` is visible when one of the two lines through ``x``
perpendicular to ``xi`` leaves the disk through the measured part of the
boundary. The principal symbol of the normal operator,

    rho(x, xi) = 2 pi sum_{theta = +-xi_perp} |E(x, theta) chi_V^#(x, theta)|^2,

is positive exactly on that set.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import GridSpec
from .transport import CutoffSpec, MediumSpec

__all__ = ["VisibilityMap", "symbol_rho", "visibility_map", "DEFAULT_THRESHOLD"]

DEFAULT_THRESHOLD = 1e-6 * 4 * np.pi


def _exit(px, py, theta):
    c, s = np.cos(theta), np.sin(theta)
    xt = px * c + py * s
    r2 = px**2 + py**2
    tau = -xt + np.sqrt(np.maximum(xt**2 + 1.0 - r2, 0.0))
    ex, ey = px + tau * c, py + tau * s
    return tau, ex, ey, ex * c + ey * s


def _chi_sharp(cutoff, px, py, theta):
    _, ex, ey, d = _exit(px, py, theta)
    return cutoff(np.arctan2(ey, ex), d)


def _attenuation(medium, px, py, theta, n_steps):
    """``exp(-int_0^tau sigma(x + s theta, theta) ds)`` by the midpoint rule.

    Midpoints keep the samples off the circle itself, where the disk
    indicator in ``sigma`` jumps.
    """
    tau, *_ = _exit(px, py, theta)
    if medium is None or not np.any(medium.sigma.values):
        return np.ones_like(px)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty_like(px)
    t = (np.arange(n_steps) + 0.5) / n_steps
    w = np.full(n_steps, 1.0 / n_steps)
    chunk = max(1, 2_000_000 // n_steps)
    for a in range(0, px.size, chunk):
        sl = slice(a, a + chunk)
        tt = tau[sl, None] * t[None, :]
        vals = medium.sigma_at(px[sl, None] + tt * c, py[sl, None] + tt * s, theta)
        out[sl] = np.exp(-tau[sl] * (vals @ w))
    return out


def _rho(px, py, xi, medium, cutoff, n_steps):
    total = np.zeros_like(px)
    for theta in (xi + np.pi / 2, xi - np.pi / 2):
        chi = _chi_sharp(cutoff, px, py, theta)
        live = chi > 0
        term = np.zeros_like(px)
        if np.any(live):
            E = _attenuation(medium, px[live], py[live], theta, n_steps)
            term[live] = (E * chi[live]) ** 2
        total += term
    return 2.0 * np.pi * total


def symbol_rho(x, xi_angle, medium, cutoff, n_steps=512):
    """Principal symbol at the point ``x`` (``|x| < 1``) and covector angle ``xi_angle``.

    ``chi_V^#`` is evaluated at the exact exit point; ``E`` by marching the
    ray to the circle with ``n_steps`` midpoint steps.
    """
    x = np.asarray(x, dtype=np.float64)
    if x[0] ** 2 + x[1] ** 2 >= 1.0:
        raise DomainError("symbol_rho needs |x| < 1")
    val = _rho(np.array([x[0]]), np.array([x[1]]), float(xi_angle), medium, cutoff, n_steps)
    return float(val[0])


@dataclass(frozen=True)
class VisibilityMap:
    """Symbol values ``values[k, iy, ix]`` at covector angle ``xi_angles[k]``.

    ``mask`` marks visible covectors (``values > threshold``); pixels
    outside the open unit disk are zero and not visible.
    """

    spec: GridSpec
    xi_angles: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    threshold: float

    @property
    def n_xi(self):
        return len(self.xi_angles)

    def visible_fraction(self):
        """Fraction of sampled covector angles that are visible, per pixel."""
        return self.mask.mean(axis=0)


def visibility_map(grid, medium, cutoff, n_xi=16, threshold=DEFAULT_THRESHOLD, n_steps=None):
    """Tabulate the symbol on the grid for ``n_xi`` angles ``k pi / n_xi``.

    ``xi`` and ``-xi`` give the same value, so half a turn suffices.
    """
    if n_steps is None:
        n_steps = grid.n_x
    X, Y = grid.mesh()
    inside = X**2 + Y**2 < 1.0
    px, py = X[inside], Y[inside]
    xis = np.arange(n_xi) * np.pi / n_xi
    values = np.zeros((n_xi, grid.n_x, grid.n_x))
    for k, xi in enumerate(xis):
        values[k][inside] = _rho(px, py, xi, medium, cutoff, n_steps)
    return VisibilityMap(grid, xis, values, values > threshold, float(threshold))
