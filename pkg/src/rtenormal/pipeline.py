"""Forward map ``X_V`` and truncated normal operator ``X_V^* X_V``.

The forward map sums the Neumann series ``u = sum_j (T1^-1 K)^j T1^-1 J f``
for ``j <= m1`` and reads the outflow column of every rotated frame. The
adjoint runs the transposed steps in reverse order with ``m2`` scattered
terms; the ballistic term ``v_0`` is always included.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .grid import AngularField, BoundaryData, ScalarField
from .spectral import rotate_array
from .transport import (
    CutoffSpec,
    MediumSpec,
    apply_K,
    apply_K_adjoint,
    boundary_cutoff,
    sweep_backward,
    sweep_forward,
)

__all__ = ["ForwardResult", "NormalResult", "forward_XV", "adjoint_XV", "normal_operator"]


@dataclass
class ForwardResult:
    """Neumann terms, their sum and the boundary data.

    ``u_terms`` is empty when the forward map ran with ``keep_terms=False``;
    ``term_norms`` is always filled.
    """

    u_terms: list
    u_total: AngularField
    data: BoundaryData
    data_full: BoundaryData
    term_norms: list
    timings: dict = field(default_factory=dict)


@dataclass
class NormalResult:
    v_terms: list
    image: ScalarField
    term_norms: list
    forward: ForwardResult | None = None
    timings: dict = field(default_factory=dict)


def _finite(arr, what):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")
    return arr


def _to_frames(values, angles):
    out = np.empty_like(values)
    for i, eta in enumerate(angles):
        out[i] = rotate_array(values[i], eta)
    return out


def _from_frames(values, angles):
    out = np.empty_like(values)
    for i, eta in enumerate(angles):
        out[i] = rotate_array(values[i], -eta)
    return out


def _check_inputs(field_, medium, cutoff, kind):
    if not isinstance(field_, kind):
        raise TypeError(f"expected {kind.__name__}, got {type(field_).__name__}")
    if field_.spec != medium.spec:
        raise ShapeError("input and medium live on different grids")
    if not isinstance(cutoff, CutoffSpec):
        raise TypeError("cutoff must be a CutoffSpec")


def _check_order(m, name):
    if not isinstance(m, (int, np.integer)) or m < 0:
        raise ValueError(f"{name} must be a nonnegative integer")
    return int(m)


def forward_XV(f, medium, cutoff, m1=8, keep_terms=True):
    """Partial boundary data of the source ``f``.

    ``u_0 = T1^-1 J f`` and ``u_j = T1^-1 K u_{j-1}``; the data is
    ``chi_V`` times the outflow values of ``u_0 + ... + u_{m1}``.
    """
    _check_inputs(f, medium, cutoff, ScalarField)
    m1 = _check_order(m1, "m1")
    spec = f.spec
    angles = spec.angles
    n = spec.n_x
    t0 = time.perf_counter()

    frames = np.empty((spec.n_d, n, n))
    for i, eta in enumerate(angles):
        frames[i] = rotate_array(f.values, eta)

    terms, norms = [], []
    total = np.zeros((spec.n_d, n, n))
    outflow = np.zeros((spec.n_d, n))
    prev = None
    has_kernel = medium.kernel is not None
    for j in range(m1 + 1):
        if j > 0:
            if not has_kernel:
                term = AngularField.zeros(spec)
                norms.append(0.0)
                if keep_terms:
                    terms.append(term)
                continue
            frames = _to_frames(apply_K(prev, medium).values, angles)
        u_rot = _finite(sweep_forward(frames, medium.sigma_rot), f"forward term {j}")
        outflow += u_rot[:, :, -1]
        term = AngularField(spec, _from_frames(u_rot, angles))
        total += term.values
        norms.append(term.norm())
        if keep_terms:
            terms.append(term)
        prev = term

    keep = spec.chord_mask()
    outflow[:, ~keep] = 0.0
    data_full = BoundaryData(spec, outflow)
    data = BoundaryData(spec, boundary_cutoff(cutoff, spec) * outflow)
    return ForwardResult(
        u_terms=terms,
        u_total=AngularField(spec, total),
        data=data,
        data_full=data_full,
        term_norms=norms,
        timings={"forward_s": time.perf_counter() - t0},
    )


def _ballistic_adjoint_frames(b, medium, cutoff):
    # Transpose of "read the outflow column of sweep_forward, times chi_V":
    # an impulse b / s_x on the outflow column swept backward gives
    # w_l = prod_{p=l+1}^{n-2} (1 - s_x sigma_p) * chi_V b, i.e. the
    # integrating factor E of the Euler scheme times the cutoff, constant
    # along rays upstream.
    spec = b.spec
    n = spec.n_x
    impulse = np.zeros((spec.n_d, n, n))
    impulse[:, :, -1] = boundary_cutoff(cutoff, spec) * b.values / spec.s_x
    return sweep_backward(impulse, medium.sigma_rot)


def adjoint_XV(b, medium, cutoff, m2=2, keep_terms=True):
    """Adjoint of :func:`forward_XV` applied to boundary data ``b``.

    ``v_0 = chi_V^# E b^#`` and ``v_j = (T1^-1)^* K^* v_{j-1}``; the image is
    ``J^*`` of ``v_0 + ... + v_{m2}``, restricted to the disk.
    """
    _check_inputs(b, medium, cutoff, BoundaryData)
    m2 = _check_order(m2, "m2")
    spec = b.spec
    angles = spec.angles
    t0 = time.perf_counter()

    v = AngularField(spec, _from_frames(_ballistic_adjoint_frames(b, medium, cutoff), angles))
    terms = [v] if keep_terms else []
    norms = [v.norm()]
    total = np.array(v.values)
    has_kernel = medium.kernel is not None
    for j in range(1, m2 + 1):
        if not has_kernel:
            norms.append(0.0)
            if keep_terms:
                terms.append(AngularField.zeros(spec))
            continue
        frames = _to_frames(apply_K_adjoint(v, medium).values, angles)
        w_rot = _finite(sweep_backward(frames, medium.sigma_rot), f"adjoint term {j}")
        v = AngularField(spec, _from_frames(w_rot, angles))
        total += v.values
        norms.append(v.norm())
        if keep_terms:
            terms.append(v)

    acc = np.zeros((spec.n_x, spec.n_x))
    for i in range(spec.n_d):
        acc += total[i]
    image = ScalarField(spec, _finite(spec.delta * acc, "normal image"), disk_supported=True)
    return NormalResult(
        v_terms=terms,
        image=image,
        term_norms=norms,
        timings={"adjoint_s": time.perf_counter() - t0},
    )


def normal_operator(f, medium, cutoff, m1=8, m2=2, noise=None):
    """``X_V^* X_V f`` with ``m1`` forward and ``m2`` adjoint scattering terms.

    ``noise``, if given, is a callable applied to the cutoff data before
    the adjoint (e.g. ``lambda b: add_noise(b, NoiseSpec(0.5, seed))``).
    """
    fwd = forward_XV(f, medium, cutoff, m1, keep_terms=False)
    data = fwd.data if noise is None else noise(fwd.data)
    res = adjoint_XV(data, medium, cutoff, m2, keep_terms=False)
    res.forward = fwd
    res.timings = {**fwd.timings, **res.timings}
    return res
