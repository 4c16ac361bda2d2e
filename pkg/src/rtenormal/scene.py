"""Sources, example media and the boundary-noise model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import AngularField, BoundaryData, GridSpec, ScalarField
from .transport import MediumSpec, ScatteringKernel

__all__ = [
    "henyey_greenstein",
    "example_medium",
    "PhantomSpec",
    "disk_bumps",
    "rect_bumps",
    "spiral_bumps",
    "centered_disk",
    "make_phantom",
    "NoiseSpec",
    "add_noise",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "numpy.random.PCG64/standard_normal"

SPIRAL_HEIGHTS = (0.5, 1.0, 0.3, 0.3, 0.4, 0.3)
SPIRAL_RADII = (0.2, 0.15, 0.1, 0.1, 0.07, 0.03)


def henyey_greenstein(cos_phi, g):
    """Planar Henyey-Greenstein phase function ``(1 - g^2) / (2 pi (1 + g^2 - 2 g cos_phi))``."""
    if not abs(g) < 1:
        raise DomainError(f"asymmetry parameter must satisfy |g| < 1, got {g}")
    cos_phi = np.asarray(cos_phi, dtype=np.float64)
    out = (1.0 - g * g) / (2.0 * np.pi * (1.0 + g * g - 2.0 * g * cos_phi))
    return out[()] if out.ndim == 0 else out


def _hg_matrix(angles, g):
    return 2.0 * np.pi * henyey_greenstein(np.cos(angles[:, None] - angles[None, :]), g)


def example_medium(grid, scale=1.0, g=0.85):
    """Anisotropic absorption and forward-peaked scattering used throughout the examples.

    sigma(x, y, eta) = 0.5 (0.05 + cos^2(xy)) sin^2(eta)
    k(x, y, theta, theta') = (0.05 + sin^2(xy)) p_g(theta . theta')
    both on the open unit disk. ``scale`` multiplies both (for decay studies).
    """
    X, Y = grid.mesh()
    inside = (X**2 + Y**2 < 1.0).astype(np.float64)
    eta = grid.angles

    def sigma_fn(x, y, angle):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        chi = (x**2 + y**2 < 1.0).astype(np.float64)
        return scale * 0.5 * chi * (0.05 + np.cos(x * y) ** 2) * np.sin(angle) ** 2

    sigma = scale * 0.5 * (inside * (0.05 + np.cos(X * Y) ** 2))[None] * (np.sin(eta) ** 2)[:, None, None]
    spatial = scale * inside * (0.05 + np.sin(X * Y) ** 2) / (2.0 * np.pi)
    kernel = ScatteringKernel(spatial=spatial, angular=_hg_matrix(eta, g))
    return MediumSpec(AngularField(grid, sigma), kernel, sigma_fn, f"example(scale={scale}, g={g})")


# ---------------------------------------------------------------------------
# phantoms


@dataclass(frozen=True)
class PhantomSpec:
    """A sum of bumps of one profile.

    ``kind`` is ``"disk_bumps"`` (indicator of an ellipse with semi-axes
    ``(r, r0)``), ``"rect_bumps"`` (indicator of a rectangle with half
    widths ``(r, r0)``) or ``"spiral_bumps"`` (spherical cap
    ``A sqrt(1 - (x-x0)^2/r^2 - (y-y0)^2/r0^2)``).
    """

    kind: str
    centers: tuple
    radii: tuple
    heights: tuple
    radii0: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("disk_bumps", "rect_bumps", "spiral_bumps"):
            raise ValueError(f"unknown phantom kind {self.kind!r}")
        centers = tuple(tuple(float(v) for v in c) for c in self.centers)
        radii = tuple(float(r) for r in self.radii)
        heights = tuple(float(a) for a in self.heights)
        radii0 = radii if self.radii0 is None else tuple(float(r) for r in self.radii0)
        if not (len(centers) == len(radii) == len(heights) == len(radii0)):
            raise ValueError("centers, radii, radii0 and heights must have equal length")
        if any(len(c) != 2 for c in centers):
            raise ValueError("centers must be (x0, y0) pairs")
        if any(r <= 0 for r in radii + radii0):
            raise ValueError("radii must be positive")
        if not np.all(np.isfinite(heights)):
            raise ValueError("heights must be finite")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "radii0", radii0)

    def to_dict(self):
        return {
            "kind": self.kind,
            "centers": [list(c) for c in self.centers],
            "radii": list(self.radii),
            "radii0": list(self.radii0),
            "heights": list(self.heights),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], d["centers"], d["radii"], d["heights"], d.get("radii0"))


def disk_bumps():
    """Unit-height disks of several sizes (approximate layout, not measured from a figure)."""
    return PhantomSpec(
        "disk_bumps",
        centers=[(0.0, 0.0), (0.45, 0.35), (-0.4, 0.4), (-0.35, -0.45), (0.4, -0.4)],
        radii=[0.25, 0.15, 0.12, 0.18, 0.1],
        heights=[1.0] * 5,
    )


def rect_bumps():
    """Unit-height rectangles (approximate layout, not measured from a figure)."""
    return PhantomSpec(
        "rect_bumps",
        centers=[(-0.3, 0.3), (0.35, 0.25), (0.0, -0.4), (0.3, -0.05)],
        radii=[0.2, 0.1, 0.35, 0.08],
        radii0=[0.12, 0.25, 0.1, 0.08],
        heights=[1.0] * 4,
    )


def spiral_bumps(centers=None):
    """Six spherical caps along a spiral, widest first, moving counterclockwise.

    Heights and radii are fixed; the default centers (an Archimedean
    spiral ``rho = 0.15 + 0.11 k`` at angles ``1.3 k``) are an arbitrary
    choice and can be overridden.
    """
    if centers is None:
        k = np.arange(6)
        rho = 0.15 + 0.11 * k
        phi = 1.3 * k
        centers = list(zip(rho * np.cos(phi), rho * np.sin(phi)))
    return PhantomSpec("spiral_bumps", centers, SPIRAL_RADII, SPIRAL_HEIGHTS)


def centered_disk(radius=0.5, height=1.0):
    return PhantomSpec("disk_bumps", [(0.0, 0.0)], [radius], [height])


def _extent(kind, x0, y0, r, r0):
    if kind == "rect_bumps":
        return max(np.hypot(x0 + sx * r, y0 + sy * r0) for sx in (-1, 1) for sy in (-1, 1))
    # farthest point of an axis-aligned ellipse from the origin, bounded
    t = np.linspace(0, 2 * np.pi, 721)
    return float(np.max(np.hypot(x0 + r * np.cos(t), y0 + r0 * np.sin(t))))


def make_phantom(spec, grid):
    """Sample the phantom on the grid (disk-supported ScalarField)."""
    X, Y = grid.mesh()
    out = np.zeros_like(X)
    for (x0, y0), r, r0, A in zip(spec.centers, spec.radii, spec.radii0, spec.heights):
        if _extent(spec.kind, x0, y0, r, r0) >= 1.0:
            raise DomainError(f"bump at ({x0}, {y0}) with size ({r}, {r0}) leaves the unit disk")
        q = 1.0 - ((X - x0) / r) ** 2 - ((Y - y0) / r0) ** 2
        if spec.kind == "disk_bumps":
            out += A * (q > 0)
        elif spec.kind == "rect_bumps":
            out += A * ((np.abs(X - x0) < r) & (np.abs(Y - y0) < r0))
        else:
            out += A * np.sqrt(np.maximum(q, 0.0))
    return ScalarField(grid, out, disk_supported=True)


# ---------------------------------------------------------------------------
# noise


@dataclass(frozen=True)
class NoiseSpec:
    mu: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and self.mu >= 0):
            raise ValueError("mu must be a finite nonnegative number")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")


def add_noise(b, spec):
    """Relative Gaussian noise per direction: ``v + mu |v| w / |w|``.

    One standard-normal vector is drawn per direction, in direction order,
    over the chords kept in the data, whether or not the row is zero, so
    the stream does not depend on the data. Zero rows stay zero.
    """
    if spec.mu == 0:
        return b
    grid = b.spec
    keep = grid.chord_mask()
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    vals = np.array(b.values)
    for i in range(grid.n_d):
        w = rng.standard_normal(int(keep.sum()))
        row = vals[i, keep]
        vals[i, keep] = row + spec.mu * np.linalg.norm(row) * w / np.linalg.norm(w)
    return BoundaryData(grid, vals)
