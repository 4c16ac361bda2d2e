"""Slow, independent reference computations.

Nothing here calls the rotation, sweep or pipeline code: rays are marched
in the original frame with bilinear sampling, spectral transforms are
dense sums, and the normal-operator kernel is integrated cell by cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import AngularField, GridSpec, ScalarField

__all__ = [
    "UnsupportedConfiguration",
    "RayMarchSpec",
    "bilinear",
    "oracle_xray",
    "oracle_xray_data",
    "oracle_ballistic",
    "oracle_normal_point",
    "direct_dirichlet",
    "direct_interpolant",
    "direct_fractional_dft",
    "direct_spectral_shift",
    "direct_dilate_and_shift",
    "bilinear_rotate",
]


class UnsupportedConfiguration(ValueError):
    """The oracle has no closed form for this medium or cutoff."""


@dataclass(frozen=True)
class RayMarchSpec:
    """Step (default ``s_x / 4``) and quadrature rule for ray marching."""

    step: float | None = None
    quadrature: str = "trapezoid"

    def __post_init__(self):
        if self.quadrature not in ("trapezoid", "left"):
            raise ValueError("quadrature must be 'trapezoid' or 'left'")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")

    def resolve(self, grid):
        h = grid.s_x / 4 if self.step is None else float(self.step)
        if h > grid.s_x:
            raise ValueError("step must not exceed s_x")
        return h


def bilinear(values, px, py):
    """Bilinear interpolation of a ``[y, x]`` midpoint-grid image; zero outside."""
    n = values.shape[-1]
    s = 2.0 / n
    cx = (np.asarray(px) + 1.0) / s - 0.5
    cy = (np.asarray(py) + 1.0) / s - 0.5
    ix = np.floor(cx).astype(int)
    iy = np.floor(cy).astype(int)
    tx = cx - ix
    ty = cy - iy
    padded = np.zeros((n + 2, n + 2))
    padded[1:-1, 1:-1] = values
    # shift by one for the zero border, clip far-away points onto it
    ix = np.clip(ix + 1, 0, n)
    iy = np.clip(iy + 1, 0, n)
    far = (cx < -1) | (cx > n) | (cy < -1) | (cy > n)
    out = (
        (1 - tx) * (1 - ty) * padded[iy, ix]
        + tx * (1 - ty) * padded[iy, ix + 1]
        + (1 - tx) * ty * padded[iy + 1, ix]
        + tx * ty * padded[iy + 1, ix + 1]
    )
    return np.where(far, 0.0, out)


def _sampler(field_or_fn, theta):
    """Return ``(px, py) -> values`` for a field at direction angle ``theta``."""
    if field_or_fn is None:
        return lambda px, py: np.zeros(np.shape(px))
    if callable(field_or_fn):
        return lambda px, py: np.asarray(field_or_fn(px, py, theta), dtype=np.float64) * np.ones(np.shape(px))
    if isinstance(field_or_fn, ScalarField):
        return lambda px, py: bilinear(field_or_fn.values, px, py)
    if isinstance(field_or_fn, AngularField):
        grid = field_or_fn.spec
        t = np.mod(theta, 2 * np.pi) / grid.delta - 0.5
        i0 = int(np.floor(t))
        w = t - i0
        a = field_or_fn.values[i0 % grid.n_d]
        b = field_or_fn.values[(i0 + 1) % grid.n_d]
        if w < 1e-12:
            return lambda px, py: bilinear(a, px, py)
        return lambda px, py: (1 - w) * bilinear(a, px, py) + w * bilinear(b, px, py)
    raise TypeError("expected a ScalarField, AngularField, callable or None")


def _cumtrapz(vals, h, rule):
    out = np.zeros_like(vals)
    if rule == "trapezoid":
        out[..., 1:] = np.cumsum(0.5 * h[..., None] * (vals[..., 1:] + vals[..., :-1]), axis=-1)
    else:
        out[..., 1:] = np.cumsum(h[..., None] * vals[..., :-1], axis=-1)
    return out


def _march(source, sigma, px, py, theta, step, rule):
    """Ballistic intensity at points ``(px, py)`` moving along ``theta``.

    ``u(x) = int_0^L exp(-int_0^t sigma(x - s theta) ds) f(x - t theta) dt``
    where ``L`` is the distance back to the unit circle.
    """
    c, s = np.cos(theta), np.sin(theta)
    px = np.atleast_1d(np.asarray(px, dtype=np.float64))
    py = np.atleast_1d(np.asarray(py, dtype=np.float64))
    # backward distance to the circle: tau_+(x, -theta)
    xt = -(px * c + py * s)
    r2 = px**2 + py**2
    L = np.maximum(-xt + np.sqrt(np.maximum(xt**2 + 1.0 - r2, 0.0)), 0.0)
    K = max(int(np.ceil(np.max(L) / step)), 1)
    h = L / K
    t = h[:, None] * np.arange(K + 1)[None, :]
    qx = px[:, None] - t * c
    qy = py[:, None] - t * s
    f = _sampler(source, theta)(qx, qy)
    sg = _sampler(sigma, theta)(qx, qy)
    atten = np.exp(-_cumtrapz(sg, h, rule))
    return _cumtrapz(f * atten, h, rule)[:, -1]


def oracle_xray(f, sigma, x, theta, march=RayMarchSpec(), grid=None):
    """Attenuated ray integral ending at ``x`` in direction ``theta``.

    At a point of the unit circle this is the attenuated X-ray transform
    (without cutoff); inside the disk it is the ballistic solution
    ``T1^-1 f`` at ``(x, theta)``. ``f`` may be a ScalarField or an
    AngularField, ``sigma`` an AngularField, a callable
    ``sigma(x, y, eta)`` or None.
    """
    x = np.asarray(x, dtype=np.float64)
    if x[0] ** 2 + x[1] ** 2 > 1.0 + 1e-12:
        raise DomainError("oracle_xray needs |x| <= 1")
    grid = grid or f.spec
    return float(_march(f, sigma, x[0], x[1], float(theta), march.resolve(grid), march.quadrature)[0])


def oracle_xray_data(f, sigma, march=RayMarchSpec()):
    """``oracle_xray`` at every boundary sample, shape ``(n_d, n_x)``.

    Chord ``y_j`` of direction ``eta_i`` exits at
    ``(sqrt(1 - y^2) cos eta - y sin eta, sqrt(1 - y^2) sin eta + y cos eta)``.
    """
    grid = f.spec
    h = march.resolve(grid)
    y = grid.nodes
    keep = np.abs(y) < 1.0 - 0.5 * grid.s_x - 1e-12
    xe = np.sqrt(np.maximum(1.0 - y**2, 0.0))
    out = np.zeros((grid.n_d, grid.n_x))
    for i, eta in enumerate(grid.angles):
        c, s = np.cos(eta), np.sin(eta)
        px = xe * c - y * s
        py = xe * s + y * c
        out[i] = _march(f, sigma, px, py, eta, h, march.quadrature)
    out[:, ~keep] = 0.0
    return out


def oracle_ballistic(g, sigma, eta, march=RayMarchSpec()):
    """Ray-marched ``T1^-1 g`` at every grid node of the open disk for direction ``eta``.

    Nodes outside the disk are 0.
    """
    grid = g.spec
    X, Y = grid.mesh()
    inside = X**2 + Y**2 < 1.0
    out = np.zeros((grid.n_x, grid.n_x))
    out[inside] = _march(g, sigma, X[inside], Y[inside], float(eta), march.resolve(grid), march.quadrature)
    return out


def _cell_integral_inv_dist(ax, bx, ay, by):
    """Exact ``int int 1/sqrt(x^2 + y^2)`` over ``[ax, bx] x [ay, by]``."""

    def F(x, y):
        # int_0^x int_0^y; the kernel is even in both variables, so the
        # first-quadrant antiderivative extends with the signs of x and y
        ax, ay = np.abs(x), np.abs(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(ax == 0, 0.0, ax * np.arcsinh(ay / np.where(ax == 0, 1.0, ax)))
            t2 = np.where(ay == 0, 0.0, ay * np.arcsinh(ax / np.where(ay == 0, 1.0, ay)))
        return np.sign(x) * np.sign(y) * (t1 + t2)

    return F(bx, by) - F(ax, by) - F(bx, ay) + F(ax, ay)


def oracle_normal_point(f, x, medium=None, cutoff=None, near_cells=3):
    """``int 2 f(y) / |x - y| dy``: the normal operator for zero absorption and full data.

    Cells within ``near_cells`` of ``x`` use the exact integral of the kernel
    over the cell times the cell value; the rest use the midpoint rule.
    """
    if medium is not None:
        if np.any(medium.sigma.values != 0) or medium.kernel is not None:
            raise UnsupportedConfiguration("oracle_normal_point needs sigma = 0 and k = 0")
    if cutoff is not None and not cutoff.full_circle:
        raise UnsupportedConfiguration("oracle_normal_point needs full data")
    grid = f.spec
    s = grid.s_x
    x = np.asarray(x, dtype=np.float64)
    X, Y = grid.mesh()
    dx = X - x[0]
    dy = Y - x[1]
    with np.errstate(divide="ignore"):
        kern = s * s / np.hypot(dx, dy)
    near = (np.abs(dx) < near_cells * s) & (np.abs(dy) < near_cells * s)
    kern[near] = _cell_integral_inv_dist(dx[near] - s / 2, dx[near] + s / 2, dy[near] - s / 2, dy[near] + s / 2)
    return float(2.0 * np.sum(kern * f.values))


# ---------------------------------------------------------------------------
# dense spectral references


def direct_dirichlet(m, y):
    """``sum_k exp(i w_k y) / m`` over the half-integer frequencies ``w_k``."""
    w = 2.0 * np.pi * (np.arange(m) - m / 2 + 0.5) / m
    y = np.asarray(y, dtype=np.float64)
    return np.real(np.exp(1j * np.multiply.outer(y, w)).sum(axis=-1)) / m


def direct_interpolant(x, y):
    """``x~(y) = sum_l x_l D_m(y - l)`` by a dense sum (``m = len(x)``)."""
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[-1]
    y = np.asarray(y, dtype=np.float64)
    D = direct_dirichlet(m, y[:, None] - np.arange(m)[None, :])
    return D @ x


def direct_fractional_dft(x, alpha, n_out=None):
    """``X_l = sum_k x_k exp(-2 pi i alpha k l)`` as an explicit double sum."""
    x = np.asarray(x)
    n = x.shape[-1]
    n_out = n if n_out is None else n_out
    out = np.zeros(x.shape[:-1] + (n_out,), dtype=np.complex128)
    k = np.arange(n)
    for l in range(n_out):
        out[..., l] = np.sum(x * np.exp(-2j * np.pi * alpha * k * l), axis=-1)
    return out


def direct_spectral_shift(x, s):
    m = len(x)
    return direct_interpolant(x, np.arange(m) - s)


def direct_dilate_and_shift(x, s, h, n_out=None):
    m = len(x)
    n_out = m // 2 if n_out is None else n_out
    return direct_interpolant(x, s + h * np.arange(n_out))


def bilinear_rotate(img, eta):
    """``out(p) = img(R_eta p)`` with bilinear sampling."""
    img = np.asarray(img, dtype=np.float64)
    n = img.shape[-1]
    nodes = -1.0 + (np.arange(n) + 0.5) * 2.0 / n
    X, Y = np.meshgrid(nodes, nodes, indexing="xy")
    c, s = np.cos(eta), np.sin(eta)
    return bilinear(img, X * c - Y * s, X * s + Y * c)
