"""Band-limited image rotation from FFT shears and fractional-DFT dilations.

A rotation ``g(p) = f(R_eta p)`` of an image sampled on the midpoint grid
is split into an exact quarter turn (an index permutation) and a residual
angle ``|eta'| <= pi/4``, which is factored as

    f1(x, y) = f(x, y + tan(eta') x)         vertical shear
    f2(x, y) = f1(x, y / cos(eta'))          vertical dilation
    f3(x, y) = f2(x - sin(eta') y, y)        horizontal shear
    g(x, y)  = f3(cos(eta') x, y)            horizontal dilation

Each 1-D step evaluates the periodic spectral interpolant of the padded
sample vector, ``x~(y) = sum_l x_l D_m(y - l)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import ShapeError, SupportWarning
from .grid import ScalarField

__all__ = [
    "dirichlet_kernel",
    "spectral_shift",
    "fractional_dft",
    "dilate_and_shift",
    "shear_y",
    "shear_x",
    "RotationPlan",
    "rotation_plan",
    "rotate_array",
    "rotate_unfused",
    "rotate",
]

# below this length the fractional DFT is evaluated as a dense sum
DIRECT_LIMIT = 4096


def dirichlet_kernel(m, y):
    """Periodic Dirichlet kernel ``D_m(y) = sin(pi y) / (m sin(pi y / m))``.

    ``m`` must be even. At ``y = k m`` the removable singularity is filled
    with the limit ``(-1)^k``.
    """
    if m <= 0 or m % 2:
        raise ValueError("m must be a positive even integer")
    y = np.asarray(y, dtype=np.float64)
    k = np.round(y / m)
    near = np.abs(y - k * m) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(np.pi * y) / (m * np.sin(np.pi * y / m))
    # L'Hopital: cos(pi y) / cos(pi y / m), exact to O(eps) inside the window
    limit = np.cos(np.pi * y) / np.cos(np.pi * y / m)
    out = np.where(near, limit, val)
    return out[()] if out.ndim == 0 else out


def _frequencies(m):
    # half-integer frequencies of D_m: 2 pi (k - m/2 + 1/2) / m, k = 0..m-1
    return 2.0 * np.pi * (np.arange(m) - m / 2 + 0.5) / m


def _modulation(m, sign):
    c0 = -m / 2 + 0.5
    return np.exp(sign * 2j * np.pi * c0 * np.arange(m) / m)


def _spectrum(x):
    """``X_k = sum_l x_l exp(-i w_k l)`` along the last axis."""
    m = x.shape[-1]
    return sfft.fft(x * _modulation(m, -1), axis=-1)


def _real_part(z, ref):
    scale = max(float(np.max(np.abs(ref))) if ref.size else 0.0, 1e-300)
    resid = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if resid > 1e-8 * scale * max(1, ref.shape[-1]) ** 0.5:
        raise ArithmeticError(f"imaginary residue {resid:.3e} too large for a real transform")
    return np.ascontiguousarray(z.real)


def spectral_shift(x, s, axis=-1):
    """Evaluate the spectral interpolant at shifted nodes: ``x~(l - s)``.

    ``x`` is real with even length along ``axis``. ``s`` is a scalar or an
    array broadcastable against ``x`` with ``axis`` removed, so each
    1-D line may get its own shift.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[axis]
    if m % 2:
        raise ShapeError("spectral_shift needs an even length (pad first)")
    xm = np.moveaxis(x, axis, -1)
    shift = np.asarray(s, dtype=np.float64)[..., None]
    spec = _spectrum(xm)
    spec = spec * np.exp(-1j * _frequencies(m) * shift)
    out = sfft.ifft(spec, axis=-1) * _modulation(m, +1)
    return np.moveaxis(_real_part(out, xm), -1, axis)


def _fdft_direct(x, alpha, n_out):
    n = x.shape[-1]
    kl = np.outer(np.arange(n_out), np.arange(n)).astype(np.float64)
    # reduce alpha*k*l mod 1 before the exponential to keep the phase accurate
    ph = np.mod(alpha * kl, 1.0)
    W = np.exp(-2j * np.pi * ph)
    return x @ W.T


def _fdft_chirpz(x, alpha, n_out):
    # Bluestein: k l = (k^2 + l^2 - (l - k)^2) / 2
    n = x.shape[-1]
    L = sfft.next_fast_len(n + n_out - 1)
    k = np.arange(n, dtype=np.float64)
    l = np.arange(n_out, dtype=np.float64)
    j = np.arange(-(n - 1), n_out, dtype=np.float64)

    def chirp(idx, sign):
        return np.exp(sign * 1j * np.pi * np.mod(alpha * idx**2, 2.0))

    a = x * chirp(k, -1)
    conv = sfft.ifft(sfft.fft(a, L, axis=-1) * sfft.fft(chirp(j, +1), L), axis=-1)
    return conv[..., n - 1 : n - 1 + n_out] * chirp(l, -1)


def fractional_dft(x, alpha, n_out=None, axis=-1, method="auto"):
    """Fractional DFT ``X(l) = sum_k x(k) exp(-2 pi i alpha k l)``.

    Indices are 0-based; ``n_out`` defaults to the input length. ``method``
    is ``"direct"`` (dense sum), ``"chirpz"`` (Bluestein factorization) or
    ``"auto"`` (direct below ``DIRECT_LIMIT`` points).
    """
    x = np.asarray(x)
    xm = np.moveaxis(x, axis, -1).astype(np.complex128, copy=False)
    n = xm.shape[-1]
    n_out = n if n_out is None else int(n_out)
    if method == "auto":
        method = "direct" if max(n, n_out) < DIRECT_LIMIT else "chirpz"
    if method == "direct":
        out = _fdft_direct(xm, float(alpha), n_out)
    elif method == "chirpz":
        out = _fdft_chirpz(xm, float(alpha), n_out)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.moveaxis(out, -1, axis)


def dilate_and_shift(x, s, h, n_out=None, axis=-1, method="auto"):
    """Resample the spectral interpolant at ``y_l = s + h l``, ``l < n_out``.

    ``x`` has even length ``m`` along ``axis``; ``n_out`` defaults to
    ``m / 2``. Positions are in 0-based sample units. Computed as a
    modulated DFT, a phase shift by ``s`` and a fractional DFT with
    coefficient ``-h / m``.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[axis]
    if m % 2:
        raise ShapeError("dilate_and_shift needs an even length")
    n_out = m // 2 if n_out is None else int(n_out)
    xm = np.moveaxis(x, axis, -1)
    coef = _spectrum(xm) * np.exp(1j * _frequencies(m) * s)
    g = fractional_dft(coef, -h / m, n_out=n_out, method=method)
    c0 = -m / 2 + 0.5
    lpos = np.arange(n_out)
    out = g * np.exp(2j * np.pi * c0 * h * lpos / m) / m
    return np.moveaxis(_real_part(out, xm), -1, axis)


def _padded_check(img, axis):
    img = np.asarray(img, dtype=np.float64)
    other = -1 if axis == -2 else -2
    n = img.shape[other]
    if img.shape[axis] != 2 * n:
        raise ShapeError(
            f"expected a padded image with {2 * n} samples along axis {axis}, got shape {img.shape}"
        )
    return img, n


def shear_y(img, alpha):
    """Vertical shear of a padded ``(2n, n)`` image: ``out(x, y) = img(x, y + alpha x)``.

    Column ``x_c`` is spectrally shifted by ``s = -alpha x_c / s_x``.
    """
    img, n = _padded_check(img, -2)
    s_x = 2.0 / n
    xc = -1.0 + (np.arange(n) + 0.5) * s_x
    return spectral_shift(img, -alpha * xc / s_x, axis=-2)


def shear_x(img, beta):
    """Horizontal shear of a padded ``(n, 2n)`` image: ``out(x, y) = img(x + beta y, y)``."""
    img = np.asarray(img, dtype=np.float64)
    return np.swapaxes(shear_y(np.swapaxes(img, -1, -2), beta), -1, -2)


@dataclass(frozen=True)
class RotationPlan:
    """Reduction ``eta = quarter_turns * pi/2 + residual`` and factor coefficients."""

    angle: float
    quarter_turns: int
    residual: float

    @property
    def tan(self):
        return float(np.tan(self.residual))

    @property
    def cos(self):
        return float(np.cos(self.residual))

    @property
    def sin(self):
        return float(np.sin(self.residual))

    @property
    def sec(self):
        return 1.0 / self.cos


def rotation_plan(eta):
    q = int(np.floor((eta + np.pi / 4) / (np.pi / 2)))
    residual = float(eta - q * (np.pi / 2))
    # guard the half-open interval against rounding at exactly pi/4
    if residual >= np.pi / 4:
        q += 1
        residual -= np.pi / 2
    return RotationPlan(float(eta), q % 4, residual)


class _FusedStage:
    """Shear along one axis followed by a dilation, sharing one spectrum.

    Shifting the interpolant preserves its band, so resampling the shifted
    samples equals resampling the original interpolant at shifted points.
    For real input only the positive half-integer frequencies are needed
    (the odd bins of a length-2m real FFT); the shear phase, dilation start
    and Bluestein pre-chirp collapse into one ``(lines, m/2)`` table.
    """

    def __init__(self, n, shear, start, h):
        m = 2 * n
        half = m // 2
        s_x = 2.0 / n
        line_pos = -1.0 + (np.arange(n) + 0.5) * s_x
        shifts = -shear * line_pos / s_x
        nu = 2.0 * np.pi * (np.arange(half) + 0.5) / m
        alpha = -h / m
        k = np.arange(half, dtype=np.float64)
        l = np.arange(n, dtype=np.float64)
        j = np.arange(-(half - 1), n, dtype=np.float64)
        self.L = sfft.next_fast_len(half + n - 1)
        self.m, self.half, self.n = m, half, n
        pre_chirp = np.exp(-1j * np.pi * np.mod(alpha * k**2, 2.0))
        self.table = np.exp(1j * nu[None, :] * (start - shifts[:, None])) * pre_chirp
        self.kernel = sfft.fft(np.exp(1j * np.pi * np.mod(alpha * j**2, 2.0)), self.L)
        self.post = (
            np.exp(-1j * np.pi * np.mod(alpha * l**2, 2.0)) * np.exp(1j * np.pi * h * l / m) * (2.0 / m)
        )

    def __call__(self, x):
        # x: (..., lines, m) real
        spec = sfft.rfft(x, 2 * self.m, axis=-1)[..., 1 : 2 * self.half : 2] * self.table
        conv = sfft.ifft(sfft.fft(spec, self.L, axis=-1) * self.kernel, axis=-1)
        return (conv[..., self.half - 1 : self.half - 1 + self.n] * self.post).real


@lru_cache(maxsize=64)
def _fused_stages(n, residual):
    c, s = np.cos(residual), np.sin(residual)
    s_x = 2.0 / n
    x0 = -1.0 + 0.5 * s_x  # first unpadded node
    p0 = -2.0 + 0.5 * s_x  # first padded node
    vertical = _FusedStage(n, np.tan(residual), (x0 / c - p0) / s_x, 1.0 / c)
    horizontal = _FusedStage(n, -s, (c * x0 - p0) / s_x, c)
    return vertical, horizontal


def _rotate_residual(f, plan):
    n = f.shape[-1]
    lead = f.shape[:-2]
    vertical, horizontal = _fused_stages(n, round(plan.residual, 13))
    # columns as lines: (..., x, padded y)
    P = np.zeros(lead + (n, 2 * n))
    P[..., :, n // 2 : n // 2 + n] = np.swapaxes(f, -1, -2)
    f2 = np.swapaxes(vertical(P), -1, -2)
    Q = np.zeros(lead + (n, 2 * n))
    Q[..., :, n // 2 : n // 2 + n] = f2
    return horizontal(Q)


def rotate_unfused(a, eta):
    """Reference rotation applying shear_y, dilate_and_shift, shear_x, dilate_and_shift
    one after another (same result as :func:`rotate_array`, slower)."""
    a = np.asarray(a, dtype=np.float64)
    plan = rotation_plan(eta)
    f = np.rot90(a, plan.quarter_turns, axes=(-2, -1))
    if plan.residual == 0.0:
        return np.ascontiguousarray(f)
    n = f.shape[-1]
    s_x = 2.0 / n
    x0 = -1.0 + 0.5 * s_x
    p0 = -2.0 + 0.5 * s_x
    c = plan.cos
    lead = f.shape[:-2]
    P = np.zeros(lead + (2 * n, n))
    P[..., n // 2 : n // 2 + n, :] = f
    f1 = shear_y(P, plan.tan)
    f2 = dilate_and_shift(f1, (x0 / c - p0) / s_x, plan.sec, n_out=n, axis=-2)
    Q = np.zeros(lead + (n, 2 * n))
    Q[..., :, n // 2 : n // 2 + n] = f2
    f3 = shear_x(Q, -plan.sin)
    return dilate_and_shift(f3, (c * x0 - p0) / s_x, c, n_out=n, axis=-1)


def rotate_array(a, eta):
    """Rotate images (last two axes ``[y, x]``): ``out(p) = a(R_eta p)``.

    Quarter turns are exact index permutations; the residual angle goes
    through the shear/dilation factorization.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] % 2:
        raise ShapeError(f"expected square images with even side, got {a.shape}")
    plan = rotation_plan(eta)
    out = np.rot90(a, plan.quarter_turns, axes=(-2, -1))
    if plan.residual == 0.0:
        return np.ascontiguousarray(out)
    return _rotate_residual(np.ascontiguousarray(out), plan)


def _outside_energy(values, spec):
    outside = ~spec.disk_mask()
    total = float(np.sum(values**2))
    if total == 0.0:
        return 0.0
    return float(np.sum(values[..., outside] ** 2)) / total


def rotate(img, eta):
    """Rotate a :class:`ScalarField`: returns ``[img]_eta``, i.e. ``img o R_eta``.

    Emits :class:`SupportWarning` when more than 1e-6 of the input energy
    lies outside the unit disk (corners would be lost).
    """
    frac = _outside_energy(img.values, img.spec)
    if frac > 1e-6:
        warnings.warn(
            f"{frac:.2e} of the energy lies outside the unit disk; rotation may clip it",
            SupportWarning,
            stacklevel=2,
        )
    return ScalarField(img.spec, rotate_array(img.values, eta))
