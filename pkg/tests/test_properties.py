"""Randomized invariants (hypothesis) and cross-process determinism."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rtenormal.grid import AngularField, BoundaryData, GridSpec, ScalarField, inner_angular, inner_scalar
from rtenormal.io import read_pgm, render_pgm
from rtenormal.scene import NoiseSpec, add_noise, henyey_greenstein
from rtenormal.spectral import spectral_shift
from rtenormal.transport import (
    CutoffSpec,
    MediumSpec,
    ScatteringKernel,
    apply_K,
    apply_K_adjoint,
    chi_sharp_at,
    collapse_J_adjoint,
    extend_J,
    sweep_backward,
    sweep_forward,
    tau_plus,
)

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
sizes = st.sampled_from([8, 16, 32])
seeds = st.integers(0, 2**32 - 1)


@SETTINGS
@given(n=sizes, rows=st.integers(1, 5), seed=seeds, load=st.floats(0.0, 0.99))
def test_sweep_transpose(n, rows, seed, load):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(rows, n))
    v = rng.normal(size=(rows, n))
    sig = rng.uniform(0, load * n / 2, size=(rows, n))
    lhs = np.sum(sweep_forward(g, sig) * v)
    rhs = np.sum(g * sweep_backward(v, sig))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, np.abs(sweep_forward(g, sig) * v).sum())


@SETTINGS
@given(n=sizes, seed=seeds, load=st.floats(0.0, 0.99))
def test_sweep_positivity(n, seed, load):
    rng = np.random.default_rng(seed)
    g = rng.uniform(0, 1, (3, n))
    sig = rng.uniform(0, load * n / 2, (3, n))
    assert np.all(sweep_forward(g, sig) >= 0) and np.all(sweep_backward(g, sig) >= 0)


@SETTINGS
@given(c=st.floats(0.0, 3.9), G=finite)
def test_sweep_constant_recurrence(c, G):
    n = 16
    s = 2 / n
    u = sweep_forward(np.full(n, G), np.full(n, c))
    j = np.arange(n)
    # G * sum_{l<j} (1 - s c)^l * s, which is (G/c)(1 - (1 - s c)^j) for c > 0
    ref = G * s * np.array([np.sum((1 - s * c) ** np.arange(k)) for k in j])
    np.testing.assert_allclose(u, ref, rtol=1e-12, atol=1e-12 * max(1, abs(G)))


@SETTINGS
@given(a=st.floats(-20, 20), b=st.floats(-20, 20), seed=seeds)
def test_spectral_shift_composes(a, b, seed):
    x = np.random.default_rng(seed).normal(size=32)
    lhs = spectral_shift(spectral_shift(x, a), b)
    np.testing.assert_allclose(lhs, spectral_shift(x, a + b), atol=1e-9)


@SETTINGS
@given(seed=seeds)
def test_K_transpose(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec(8, 8)
    med = MediumSpec(AngularField.zeros(spec), ScatteringKernel(spatial=rng.uniform(0, 1, (8, 8)),
                                                                angular=rng.uniform(0, 1, (8, 8))))
    u = AngularField(spec, rng.normal(size=(8, 8, 8)))
    v = AngularField(spec, rng.normal(size=(8, 8, 8)))
    lhs = inner_angular(apply_K(u, med), v)
    rhs = inner_angular(u, apply_K_adjoint(v, med))
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + u.norm() * v.norm())


@SETTINGS
@given(seed=seeds)
def test_J_pairing(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec(8, 16)
    f = ScalarField(spec, rng.normal(size=(8, 8)))
    g = AngularField(spec, rng.normal(size=(16, 8, 8)))
    lhs = inner_angular(extend_J(f), g)
    rhs = inner_scalar(f, collapse_J_adjoint(g))
    assert abs(lhs - rhs) <= 1e-13 * (1 + abs(lhs))


@SETTINGS
@given(r=st.floats(0, 1), phi=st.floats(0, 2 * np.pi), theta=st.floats(-10, 10))
def test_tau_plus_lands_on_circle(r, phi, theta):
    x = np.array([r * np.cos(phi), r * np.sin(phi)])
    t = tau_plus(x, theta)
    assert t >= 0 and t <= 2 + 1e-12
    e = x + t * np.array([np.cos(theta), np.sin(theta)])
    assert abs(np.hypot(*e) - 1) <= 1e-12


@SETTINGS
@given(start=st.floats(0, 6), length=st.floats(0.1, 3), phi=st.floats(-7, 7), eta=st.floats(-7, 7))
def test_cutoff_range_and_arc_monotone(start, length, phi, eta):
    small = CutoffSpec(start, start + length, taper_pos=0.04)
    big = CutoffSpec(start, start + length + 0.5, taper_pos=0.04)
    d = np.cos(eta - phi)
    a, b = small(phi, d), big(phi, d)
    assert 0 <= a <= 1 and 0 <= b <= 1
    assert b >= a - 1e-15


@SETTINGS
@given(px=st.floats(-0.7, 0.7), py=st.floats(-0.7, 0.7), eta=st.floats(0, 2 * np.pi), t=st.floats(-0.2, 0.2))
def test_chi_sharp_ray_constant(px, py, eta, t):
    cut = CutoffSpec.paper()
    q = (px + t * np.cos(eta), py + t * np.sin(eta))
    assert chi_sharp_at(cut, px, py, eta) == pytest.approx(chi_sharp_at(cut, *q, eta), abs=1e-9)


@SETTINGS
@given(c=st.floats(-1, 1), g=st.floats(-0.99, 0.99))
def test_hg_positive(c, g):
    assert henyey_greenstein(c, g) > 0


@SETTINGS
@given(seed=seeds, mu=st.floats(0.0, 2.0), noise_seed=st.integers(0, 2**63))
def test_noise_relative_norm(seed, mu, noise_seed):
    spec = GridSpec(16, 8)
    vals = np.random.default_rng(seed).normal(size=(8, 16)) * spec.chord_mask()
    b = BoundaryData(spec, vals)
    out = add_noise(b, NoiseSpec(mu, noise_seed)).values
    for i in range(8):
        nv = np.linalg.norm(vals[i])
        assert abs(np.linalg.norm(out[i] - vals[i]) - mu * nv) <= 1e-12 * max(1.0, nv)


@settings(max_examples=25, deadline=None)
@given(img=arrays(np.float64, (4, 5), elements=st.floats(-1e6, 1e6)))
def test_pgm_normalisation(tmp_path_factory, img):
    path = tmp_path_factory.mktemp("pgm") / "x.pgm"
    render_pgm(img, path, flip=False)
    pix = read_pgm(path)
    lo, hi = img.min(), img.max()
    ref = np.zeros_like(img) if hi == lo else np.rint(255 * (img - lo) / (hi - lo))
    np.testing.assert_array_equal(pix, ref.astype(np.uint8))


# -- determinism across thread counts -------------------------------------------------------

_SCRIPT = """
import hashlib, numpy as np
from rtenormal.grid import GridSpec
from rtenormal.pipeline import normal_operator
from rtenormal.scene import NoiseSpec, add_noise, example_medium, make_phantom, spiral_bumps
from rtenormal.transport import CutoffSpec
g = GridSpec(64, 32)
res = normal_operator(make_phantom(spiral_bumps(), g), example_medium(g), CutoffSpec.paper(), 3, 2,
                      noise=lambda b: add_noise(b, NoiseSpec(0.5, 3)))
print(hashlib.sha256(res.image.values.tobytes() + res.forward.data.values.tobytes()).hexdigest())
"""


def _digest(threads):
    env = dict(os.environ)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        env[var] = str(threads)
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_bitwise_across_thread_counts():
    digests = {_digest(1), _digest(1), _digest(4)}
    assert len(digests) == 1
