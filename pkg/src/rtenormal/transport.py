"""Per-direction transport kernels.

Every direction ``eta_i`` is handled in its rotated frame, where
``theta . grad`` becomes ``d/dx`` along the columns of the image: fields
are rotated in with ``rotate(., eta_i)``, swept with an explicit Euler
scheme, and rotated back with ``rotate(., -eta_i)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ShapeError, StabilityError
from .grid import AngularField, BoundaryData, GridSpec, ScalarField
from .spectral import rotate_array

__all__ = [
    "ScatteringKernel",
    "MediumSpec",
    "CutoffSpec",
    "sweep_forward",
    "sweep_backward",
    "apply_T1_inv",
    "apply_T1_inv_adjoint",
    "apply_K",
    "apply_K_adjoint",
    "extend_J",
    "collapse_J_adjoint",
    "tau_plus",
    "attenuation_E",
    "cutoff_chi",
    "cutoff_chi_sharp",
    "boundary_cutoff",
    "extend_boundary",
    "restrict_boundary",
]


# ---------------------------------------------------------------------------
# medium and cutoff descriptions


@dataclass(frozen=True, eq=False)
class ScatteringKernel:
    """Collision kernel ``k(x, theta_out, theta_in)`` on the grid.

    Either separable, ``spatial[y, x] * angular[i_out, i_in]``, or a dense
    ``table[i_out, i_in, y, x]`` for fully general anisotropy.
    """

    spatial: np.ndarray | None = None
    angular: np.ndarray | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.table is None and (self.spatial is None or self.angular is None):
            raise ValueError("give either (spatial, angular) or table")
        for name in ("spatial", "angular", "table"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"kernel {name} must be finite and nonnegative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def check(self, spec):
        n, nd = spec.n_x, spec.n_d
        if self.table is not None:
            if self.table.shape != (nd, nd, n, n):
                raise ShapeError(f"kernel table must have shape {(nd, nd, n, n)}")
        else:
            if self.spatial.shape != (n, n) or self.angular.shape != (nd, nd):
                raise ShapeError("kernel spatial/angular shapes do not match the grid")

    def _contract(self, u, delta, transpose):
        if self.table is not None:
            sub = "jiyx,...jyx->...iyx" if transpose else "ijyx,...jyx->...iyx"
            return delta * np.einsum(sub, self.table, u)
        A = self.angular.T if transpose else self.angular
        nd, ny, nx = u.shape[-3:]
        flat = u.reshape(u.shape[:-3] + (nd, ny * nx))
        out = np.matmul(A, flat).reshape(u.shape)
        return (delta * self.spatial) * out

    def apply(self, u, delta):
        """``delta * sum_j k(x, eta_i, eta_j) u(x, eta_j)`` on raw arrays."""
        return self._contract(u, delta, transpose=False)

    def apply_adjoint(self, v, delta):
        """``delta * sum_j k(x, eta_j, eta_i) v(x, eta_j)`` on raw arrays."""
        return self._contract(v, delta, transpose=True)


@dataclass(frozen=True, eq=False)
class MediumSpec:
    """Absorption ``sigma`` and collision kernel ``k``.

    ``sigma_fn(x, y, eta)``, when given, evaluates the absorption off the
    grid (used by the ray-marching diagnostics); otherwise the tabulated
    ``sigma`` is interpolated.
    """

    sigma: AngularField
    kernel: ScatteringKernel | None = None
    sigma_fn: object = None
    name: str = "custom"

    def __post_init__(self):
        if not isinstance(self.sigma, AngularField):
            raise TypeError("sigma must be an AngularField")
        if np.any(self.sigma.values < 0):
            raise ValueError("sigma must be nonnegative")
        if self.kernel is not None:
            self.kernel.check(self.sigma.spec)
        check_stability(self.sigma.spec.s_x, self.sigma.values)

    @property
    def spec(self):
        return self.sigma.spec

    @classmethod
    def vacuum(cls, spec):
        """No absorption, no scattering."""
        return cls(AngularField.zeros(spec), None, lambda x, y, eta: np.zeros(np.broadcast(x, y).shape), "vacuum")

    @classmethod
    def constant_absorption(cls, spec, value):
        """``sigma = value`` on the open unit disk, no scattering."""
        mask = spec.disk_mask().astype(np.float64)
        sigma = AngularField(spec, np.broadcast_to(value * mask, (spec.n_d, spec.n_x, spec.n_x)))

        def fn(x, y, eta):
            return np.where(np.asarray(x) ** 2 + np.asarray(y) ** 2 < 1.0, float(value), 0.0)

        return cls(sigma, None, fn, f"constant({value})")

    @cached_property
    def sigma_rot(self):
        """``sigma(., eta_i)`` in the frame of ``eta_i``, shape ``(n_d, n, n)``."""
        angles = self.spec.angles
        out = np.empty_like(self.sigma.values)
        for i, eta in enumerate(angles):
            out[i] = rotate_array(self.sigma.values[i], eta)
        out.setflags(write=False)
        return out

    def sigma_at(self, x, y, eta):
        """Absorption at arbitrary points and direction angle."""
        if self.sigma_fn is not None:
            return np.asarray(self.sigma_fn(x, y, eta), dtype=np.float64)
        return _interp_angular(self.sigma, x, y, eta)


def _interp_angular(field_, x, y, eta):
    """Bilinear in space, linear in angle (periodic)."""
    from scipy.ndimage import map_coordinates

    spec = field_.spec
    t = np.mod(eta, 2 * np.pi) / spec.delta - 0.5
    i0 = int(np.floor(t)) % spec.n_d
    i1 = (i0 + 1) % spec.n_d
    wt = t - np.floor(t)
    col = (np.asarray(x) + 1.0) / spec.s_x - 0.5
    row = (np.asarray(y) + 1.0) / spec.s_x - 0.5
    coords = np.stack([np.ravel(row), np.ravel(col)])
    a = map_coordinates(field_.values[i0], coords, order=1, mode="constant", cval=0.0)
    b = map_coordinates(field_.values[i1], coords, order=1, mode="constant", cval=0.0)
    return ((1 - wt) * a + wt * b).reshape(np.shape(x))


@dataclass(frozen=True)
class CutoffSpec:
    """Smooth cutoff on the outgoing boundary ``(position angle, direction)``.

    ``chi_V`` is a cosine-squared taper in the boundary position angle over
    ``[arc_start, arc_end]`` (width ``taper_pos``, default 5% of the arc)
    times a cosine-squared taper in ``d = nu . theta`` that is zero for
    ``d <= 0`` and one for ``d >= taper_dir``. An arc of length ``>= 2 pi``
    covers the whole circle without a position taper.
    """

    arc_start: float = 0.0
    arc_end: float = np.pi / 3
    taper_pos: float | None = None
    taper_dir: float = 0.1
    outward_only: bool = True

    def __post_init__(self):
        if self.arc_end < self.arc_start:
            raise ValueError("arc_end must be >= arc_start")
        if self.taper_pos is None:
            object.__setattr__(self, "taper_pos", 0.05 * self.arc_length)
        if self.arc_length > 0 and not self.full_circle and not (0 < self.taper_pos <= 0.5 * self.arc_length):
            raise ValueError("taper_pos must lie in (0, arc_length / 2]")
        if self.taper_dir <= 0:
            raise ValueError("taper_dir must be positive")

    @property
    def arc_length(self):
        return float(self.arc_end - self.arc_start)

    @property
    def full_circle(self):
        return self.arc_length >= 2 * np.pi - 1e-12

    @classmethod
    def full(cls):
        """Complete data: whole circle, step at ``nu . theta = 0``."""
        return cls(0.0, 2 * np.pi, None, 1e-9)

    @classmethod
    def empty(cls):
        return cls(0.0, 0.0)

    @classmethod
    def paper(cls):
        """Boundary arc ``[0, pi/3]``, outgoing directions only."""
        return cls(0.0, np.pi / 3)

    def position_factor(self, phi):
        phi = np.asarray(phi, dtype=np.float64)
        if self.full_circle:
            return np.ones_like(phi)
        L = self.arc_length
        if L <= 0:
            return np.zeros_like(phi)
        u = np.mod(phi - self.arc_start, 2 * np.pi)
        w = self.taper_pos
        up = np.sin(0.5 * np.pi * np.clip(u / w, 0.0, 1.0)) ** 2
        down = np.sin(0.5 * np.pi * np.clip((L - u) / w, 0.0, 1.0)) ** 2
        return np.where(u <= L, np.minimum(up, down), 0.0)

    def direction_factor(self, d):
        d = np.asarray(d, dtype=np.float64)
        if not self.outward_only:
            return np.where(d > 0, 1.0, 0.0)
        ramp = np.sin(0.5 * np.pi * np.clip(d / self.taper_dir, 0.0, 1.0)) ** 2
        return np.where(d > 0, ramp, 0.0)

    def __call__(self, phi, d):
        return self.position_factor(phi) * self.direction_factor(d)


def check_stability(s_x, sigma):
    smax = float(np.max(sigma)) if np.size(sigma) else 0.0
    if s_x * smax >= 1.0:
        raise StabilityError(f"s_x * max(sigma) = {s_x * smax:.3g} >= 1")


# ---------------------------------------------------------------------------
# rotated-frame sweeps


def _frame_first(a):
    # sweeps march along x = last axis; put it first for contiguous slices
    return np.ascontiguousarray(np.moveaxis(a, -1, 0))


def sweep_forward(g_rot, sigma_rot):
    """Explicit Euler for ``du/dx + sigma u = g`` with ``u = 0`` at the inflow column.

    ``u[:, j] = u[:, j-1] + s_x (g[:, j-1] - sigma[:, j-1] u[:, j-1])``.
    Arrays are ``(..., n, n)`` images in the rotated frame.
    """
    g_rot = np.asarray(g_rot, dtype=np.float64)
    n = g_rot.shape[-1]
    s = 2.0 / n
    sigma_rot = np.broadcast_to(np.asarray(sigma_rot, dtype=np.float64), g_rot.shape)
    check_stability(s, sigma_rot)
    g = _frame_first(g_rot)
    sg = _frame_first(sigma_rot)
    u = np.empty_like(g)
    u[0] = 0.0
    for j in range(1, n):
        u[j] = u[j - 1] + s * (g[j - 1] - sg[j - 1] * u[j - 1])
    return np.moveaxis(u, 0, -1)


def sweep_backward(v_rot, sigma_rot):
    """Exact transpose of :func:`sweep_forward`: marches from the outflow column.

    ``w[:, n-1] = 0``, ``w[:, l] = w[:, l+1] + s_x (v[:, l+1] - sigma[:, l+1] w[:, l+1])``.
    """
    v_rot = np.asarray(v_rot, dtype=np.float64)
    n = v_rot.shape[-1]
    s = 2.0 / n
    sigma_rot = np.broadcast_to(np.asarray(sigma_rot, dtype=np.float64), v_rot.shape)
    check_stability(s, sigma_rot)
    v = _frame_first(v_rot)
    sg = _frame_first(sigma_rot)
    w = np.empty_like(v)
    w[n - 1] = 0.0
    for l in range(n - 2, -1, -1):
        w[l] = w[l + 1] + s * (v[l + 1] - sg[l + 1] * w[l + 1])
    return np.moveaxis(w, 0, -1)


def _optical_depth_rot(sigma_rot):
    # s_x * sum_{p=l+1}^{n-2} sigma_p: the exponent the sweep applies between
    # a source column and the outflow column
    n = sigma_rot.shape[-1]
    s = 2.0 / n
    sg = np.array(sigma_rot, dtype=np.float64)
    sg[..., n - 1] = 0.0
    tail = np.cumsum(sg[..., ::-1], axis=-1)[..., ::-1]
    out = np.zeros_like(sg)
    out[..., : n - 1] = tail[..., 1:]
    return s * out


def _rotate_each(stack, angles, sign):
    out = np.empty_like(stack)
    for i, eta in enumerate(angles):
        out[i] = rotate_array(stack[i], sign * eta)
    return out


def _rotate_copies(img, angles):
    out = np.empty((len(angles),) + img.shape)
    for i, eta in enumerate(angles):
        out[i] = rotate_array(img, eta)
    return out


def _check_medium(field_, medium):
    if field_.spec != medium.spec:
        raise ShapeError("field and medium live on different grids")


def _t1_inv_rot(g, medium):
    """Rotated-frame solutions of ``T1 u = g`` for every direction."""
    return sweep_forward(_rotate_each(g, medium.spec.angles, +1), medium.sigma_rot)


def apply_T1_inv(g, medium):
    """Ballistic solve ``theta . grad u + sigma u = g``, zero inflow, per direction."""
    _check_medium(g, medium)
    angles = medium.spec.angles
    u_rot = _t1_inv_rot(g.values, medium)
    return AngularField(g.spec, _rotate_each(u_rot, angles, -1))


def apply_T1_inv_adjoint(v, medium):
    """Adjoint ballistic solve ``-theta . grad w + sigma w = v``, zero outflow."""
    _check_medium(v, medium)
    angles = medium.spec.angles
    w_rot = sweep_backward(_rotate_each(v.values, angles, +1), medium.sigma_rot)
    return AngularField(v.spec, _rotate_each(w_rot, angles, -1))


def apply_K(u, medium):
    """Discrete scattering ``K_delta u``; zero when the medium has no kernel."""
    _check_medium(u, medium)
    if medium.kernel is None:
        return AngularField.zeros(u.spec)
    return AngularField(u.spec, medium.kernel.apply(u.values, u.spec.delta))


def apply_K_adjoint(v, medium):
    """Transpose of :func:`apply_K` in the angular index."""
    _check_medium(v, medium)
    if medium.kernel is None:
        return AngularField.zeros(v.spec)
    return AngularField(v.spec, medium.kernel.apply_adjoint(v.values, v.spec.delta))


def extend_J(f):
    """Replicate a scalar field across all directions."""
    spec = f.spec
    return AngularField(spec, np.broadcast_to(f.values, (spec.n_d, spec.n_x, spec.n_x)))


def collapse_J_adjoint(g):
    """Angular integral ``delta * sum_i g(., eta_i)``, summed in index order."""
    spec = g.spec
    acc = np.zeros((spec.n_x, spec.n_x))
    for i in range(spec.n_d):
        acc += g.values[i]
    return ScalarField(spec, spec.delta * acc)


# ---------------------------------------------------------------------------
# boundary geometry


def _direction(theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape and theta.shape[-1] == 2:
        return theta[..., 0], theta[..., 1]
    return np.cos(theta), np.sin(theta)


def tau_plus(x, theta):
    """Distance from ``x`` (``|x| <= 1``) along ``theta`` to the unit circle.

    ``theta`` is an angle or a unit vector; ``x`` has a trailing axis of 2.
    """
    x = np.asarray(x, dtype=np.float64)
    c, s = _direction(theta)
    r2 = x[..., 0] ** 2 + x[..., 1] ** 2
    if np.any(r2 > 1.0 + 1e-12):
        raise DomainError("tau_plus is defined for |x| <= 1")
    xt = x[..., 0] * c + x[..., 1] * s
    out = -xt + np.sqrt(np.maximum(xt**2 + 1.0 - r2, 0.0))
    return out[()] if np.ndim(out) == 0 else out


def attenuation_E(medium):
    """``E(x, theta) = exp(-int_0^inf sigma(x + s theta, theta) ds)`` on the grid."""
    angles = medium.spec.angles
    # rotate the optical depth rather than E: it vanishes where sigma does,
    # so E = 1 is reproduced exactly there
    depth = _rotate_each(_optical_depth_rot(medium.sigma_rot), angles, -1)
    return AngularField(medium.spec, np.exp(-depth))


def cutoff_chi(spec, boundary_pos_angle, eta):
    """``chi_V`` at the boundary point with polar angle ``boundary_pos_angle`` and direction ``eta``."""
    d = np.cos(np.asarray(eta) - np.asarray(boundary_pos_angle))
    out = spec(boundary_pos_angle, d)
    return out[()] if np.ndim(out) == 0 else out


def chi_sharp_at(cutoff, x, y, eta, edge_margin=0.0):
    """``chi_V^#`` at arbitrary points: ``chi_V`` at the exit point of the line.

    Constant along lines; zero for lines that miss the disk or pass within
    ``edge_margin`` of tangency.
    """
    c, s = np.cos(eta), np.sin(eta)
    yp = -np.asarray(x) * s + np.asarray(y) * c
    inside = np.abs(yp) < 1.0 - edge_margin
    ypc = np.clip(yp, -1.0, 1.0)
    val = cutoff(eta + np.arcsin(ypc), np.sqrt(1.0 - ypc**2))
    return np.where(inside, val, 0.0)


def cutoff_chi_sharp(cutoff, spec):
    """``chi_V^#`` as an :class:`AngularField` (same chord rule as the data grid)."""
    X, Y = spec.mesh()
    margin = 0.5 * spec.s_x + 1e-12
    out = np.empty((spec.n_d, spec.n_x, spec.n_x))
    for i, eta in enumerate(spec.angles):
        out[i] = chi_sharp_at(cutoff, X, Y, eta, edge_margin=margin)
    return AngularField(spec, out)


def boundary_cutoff(cutoff, spec):
    """``chi_V`` on the boundary-data grid, shape ``(n_d, n_x)``.

    Chord ``y_j`` of direction ``eta_i`` exits at polar angle
    ``eta_i + arcsin(y_j)`` with ``nu . theta = sqrt(1 - y_j^2)``.
    """
    y = spec.nodes
    keep = spec.chord_mask()
    yc = np.clip(y, -1.0, 1.0)
    out = cutoff(spec.angles[:, None] + np.arcsin(yc)[None, :], np.sqrt(1.0 - yc**2)[None, :])
    return np.where(keep[None, :], out, 0.0)


def extend_boundary(b):
    """Spread boundary values back along their rays: ``g^#``.

    ``g^#(x, eta_i) = b[i](y')`` with chord coordinate
    ``y' = -x sin(eta_i) + y cos(eta_i)``. Evaluated by linear interpolation
    of each row in ``y'`` rather than by rotating a broadcast image back, which
    rings along the edges of the rotated square.
    """
    spec = b.spec
    X, Y = spec.mesh()
    out = np.empty((spec.n_d, spec.n_x, spec.n_x))
    for i, eta in enumerate(spec.angles):
        yp = -X * np.sin(eta) + Y * np.cos(eta)
        out[i] = np.where(np.abs(yp) < 1.0, np.interp(yp, spec.nodes, b.values[i]), 0.0)
    return AngularField(spec, out)


def restrict_boundary(u, depth=1.0):
    """Value of ``u`` where each chord leaves the disk.

    Chord ``y_j`` of direction ``eta_i`` leaves the disk at
    ``R_eta (sqrt(1 - y_j^2), y_j)``. ``u`` is sampled bilinearly in the
    original frame ``depth`` cells before that point. Reading the outflow
    column of the rotated frame instead would be exact only for the
    pipeline's own rotated-frame arrays: after a rotation back, the square's
    outflow edge is tangent to the circle and rings.
    """
    from scipy.ndimage import map_coordinates

    spec = u.spec
    keep = spec.chord_mask()
    y = np.where(keep, spec.nodes, 0.0)
    x_in = np.sqrt(1.0 - y**2) - depth * spec.s_x
    vals = np.zeros((spec.n_d, spec.n_x))
    for i, eta in enumerate(spec.angles):
        c, s = np.cos(eta), np.sin(eta)
        px = x_in * c - y * s
        py = x_in * s + y * c
        coords = np.stack([(py + 1.0) / spec.s_x - 0.5, (px + 1.0) / spec.s_x - 0.5])
        vals[i] = map_coordinates(u.values[i], coords, order=1, mode="nearest")
    vals[:, ~keep] = 0.0
    return BoundaryData(spec, vals)
