"""Discretization of the square [-1, 1]^2 x S^1 and the discrete L^2 pairings.

Conventions
-----------
* Spatial nodes are cell midpoints ``x_i = -1 + (i + 1/2) s_x`` (0-based),
  ``s_x = 2 / n_x``; the same nodes are used for ``y``.
* Directions are midpoints ``eta_i = (i + 1/2) delta``, ``delta = 2 pi / n_d``.
* Scalar fields are ``(n_x, n_x)`` arrays indexed ``[y, x]``.
* Angular fields are ``(n_d, n_x, n_x)`` arrays indexed ``[direction, y, x]``
  (direction is the slowest axis).
* Boundary data are ``(n_d, n_x)`` arrays indexed ``[direction, chord]``,
  where the chord coordinate is the rotated-frame ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

__all__ = [
    "GridSpec",
    "ScalarField",
    "AngularField",
    "BoundaryData",
    "inner_scalar",
    "inner_angular",
    "inner_boundary",
]


def _is_pow2(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Sizes of the spatial and angular grids."""

    n_x: int = 256
    n_d: int = 128

    def __post_init__(self):
        for name in ("n_x", "n_d"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not _is_pow2(int(v)):
                raise ValueError(f"{name} must be a positive power of 2, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.n_x < 4:
            raise ValueError("n_x must be at least 4")

    @property
    def s_x(self):
        return 2.0 / self.n_x

    @property
    def delta(self):
        return 2.0 * np.pi / self.n_d

    @property
    def nodes(self):
        """Midpoint nodes along one spatial axis, shape ``(n_x,)``."""
        return -1.0 + (np.arange(self.n_x) + 0.5) * self.s_x

    @property
    def angles(self):
        """Direction angles ``eta_i``, shape ``(n_d,)``."""
        return (np.arange(self.n_d) + 0.5) * self.delta

    def mesh(self):
        """Return ``(X, Y)`` with ``X[iy, ix] = x_ix`` and ``Y[iy, ix] = y_iy``."""
        return np.meshgrid(self.nodes, self.nodes, indexing="xy")

    def disk_mask(self, radius=1.0):
        """Boolean mask of nodes with ``x^2 + y^2 < radius^2``."""
        X, Y = self.mesh()
        return X**2 + Y**2 < radius**2

    def chord_mask(self):
        """Boundary chords kept in the data: ``|y_j| < 1 - s_x / 2``.

        Rays tangent to the disk carry a vanishing chord; the outermost
        chord on each side is dropped.
        """
        return np.abs(self.nodes) < 1.0 - 0.5 * self.s_x - 1e-12


class _Field:
    """Shared construction logic for the immutable field containers."""

    _kind = "field"

    def _init(self, spec, values, disk_supported):
        if not isinstance(spec, GridSpec):
            raise TypeError("spec must be a GridSpec")
        arr = np.array(values, dtype=np.float64, copy=True)
        shape = self._shape(spec)
        if arr.shape != shape:
            raise ShapeError(f"{self._kind} values must have shape {shape}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{self._kind} values must be finite")
        if disk_supported:
            arr = self._apply_support(spec, arr)
        arr.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "disk_supported", bool(disk_supported))

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}(n_x={self.spec.n_x}, n_d={self.spec.n_d}, shape={self.values.shape})"

    def _binary(self, other, op):
        if isinstance(other, type(self)):
            _check_same(self, other)
            other = other.values
        return type(self)(self.spec, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(self.spec, -self.values)

    def norm(self):
        return float(np.sqrt(self.inner(self)))


class ScalarField(_Field):
    """Samples of a function on the square, shape ``(n_x, n_x)``.

    With ``disk_supported=True`` the values at nodes with ``x^2 + y^2 >= 1``
    are set to zero.
    """

    _kind = "ScalarField"

    def __init__(self, spec, values, disk_supported=False):
        self._init(spec, values, disk_supported)

    @staticmethod
    def _shape(spec):
        return (spec.n_x, spec.n_x)

    @staticmethod
    def _apply_support(spec, arr):
        return np.where(spec.disk_mask(), arr, 0.0)

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros((spec.n_x, spec.n_x)))

    def inner(self, other):
        return inner_scalar(self, other)


class AngularField(_Field):
    """Samples on square x circle, shape ``(n_d, n_x, n_x)``; slice ``i`` is ``eta_i``."""

    _kind = "AngularField"

    def __init__(self, spec, values, disk_supported=False):
        self._init(spec, values, disk_supported)

    @staticmethod
    def _shape(spec):
        return (spec.n_d, spec.n_x, spec.n_x)

    @staticmethod
    def _apply_support(spec, arr):
        return np.where(spec.disk_mask()[None], arr, 0.0)

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros((spec.n_d, spec.n_x, spec.n_x)))

    def inner(self, other):
        return inner_angular(self, other)


class BoundaryData(_Field):
    """Outgoing boundary samples, shape ``(n_d, n_x)``.

    Entry ``(i, j)`` is the value for direction ``eta_i`` at chord ``y_j``
    on the outflow edge of the rotated square.
    """

    _kind = "BoundaryData"

    def __init__(self, spec, values):
        self._init(spec, values, False)
        nodes = spec.nodes
        if np.any(self.values[:, np.abs(nodes) >= 1.0] != 0):
            raise ValueError("BoundaryData entries with |y| >= 1 must be zero")

    @staticmethod
    def _shape(spec):
        return (spec.n_d, spec.n_x)

    @classmethod
    def zeros(cls, spec):
        return cls(spec, np.zeros((spec.n_d, spec.n_x)))

    def inner(self, other):
        return inner_boundary(self, other)


def _check_same(a, b):
    if type(a) is not type(b):
        raise ShapeError(f"cannot pair {type(a).__name__} with {type(b).__name__}")
    if a.spec != b.spec:
        raise ShapeError(f"grid mismatch: {a.spec} vs {b.spec}")


def inner_scalar(a, b):
    """Discrete L^2 pairing on the square: ``s_x^2 * sum(a * b)``."""
    _check_same(a, b)
    return float(a.spec.s_x**2 * np.sum(a.values * b.values))


def inner_angular(a, b):
    """Discrete L^2 pairing on square x circle: ``s_x^2 * delta * sum(a * b)``."""
    _check_same(a, b)
    return float(a.spec.s_x**2 * a.spec.delta * np.sum(a.values * b.values))


def inner_boundary(a, b):
    """Discrete pairing on the outgoing boundary: ``s_x * delta * sum(a * b)``.

    The chord coordinate carries the ``|nu . theta|``-weighted boundary
    measure, so no extra Jacobian appears.
    """
    _check_same(a, b)
    return float(a.spec.s_x * a.spec.delta * np.sum(a.values * b.values))
