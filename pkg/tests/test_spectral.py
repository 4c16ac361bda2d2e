import warnings

import numpy as np
import pytest

from rtenormal import oracle
from rtenormal.errors import ShapeError, SupportWarning
from rtenormal.grid import GridSpec, ScalarField
from rtenormal.spectral import (
    dilate_and_shift,
    dirichlet_kernel,
    fractional_dft,
    rotate,
    rotate_array,
    rotate_unfused,
    rotation_plan,
    shear_x,
    shear_y,
    spectral_shift,
)

from conftest import gaussian


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b)


# -- Dirichlet kernel ---------------------------------------------------------


def test_dirichlet_removable_singularity():
    assert dirichlet_kernel(16, 0.0) == 1.0
    # (-1)^k at y = k m
    assert dirichlet_kernel(16, 16.0) == pytest.approx(-1.0, abs=1e-14)
    assert dirichlet_kernel(16, 32.0) == pytest.approx(1.0, abs=1e-14)


def test_dirichlet_zeros_at_integers():
    j = np.array([1, 2, 5, 15, 17, 31, -3])
    np.testing.assert_allclose(dirichlet_kernel(16, j), 0.0, atol=1e-14)


def test_dirichlet_half_value():
    # 1 / (16 sin(pi/32)), 30-digit mpmath evaluation
    assert dirichlet_kernel(16, 0.5) == pytest.approx(0.637643577336145482263, rel=1e-14)


def test_dirichlet_matches_frequency_sum(rng):
    y = rng.uniform(-40, 40, 200)
    np.testing.assert_allclose(dirichlet_kernel(16, y), oracle.direct_dirichlet(16, y), atol=1e-12)


def test_dirichlet_rejects_odd():
    with pytest.raises(ValueError):
        dirichlet_kernel(15, 0.3)


# -- spectral shift -----------------------------------------------------------


def test_shift_zero_is_identity(rng):
    x = rng.normal(size=64)
    np.testing.assert_allclose(spectral_shift(x, 0.0), x, atol=1e-12)


def test_integer_shift_moves_samples():
    x = np.zeros(64)
    x[20:40] = np.hanning(20)
    out = spectral_shift(x, -1.0)
    np.testing.assert_allclose(out[5:58], x[6:59], atol=1e-12)


def test_shift_matches_direct_sum(rng):
    x = rng.normal(size=32)
    np.testing.assert_allclose(spectral_shift(x, 0.37), oracle.direct_spectral_shift(x, 0.37), atol=1e-9)


def test_shift_round_trip(rng):
    x = rng.normal(size=128)
    for s in (0.1, -3.7, 12.25):
        assert rel(spectral_shift(spectral_shift(x, s), -s), x) < 1e-9


def test_shift_per_line(rng):
    x = rng.normal(size=(3, 32))
    s = np.array([0.2, -1.5, 4.0])
    out = spectral_shift(x, s)
    for i in range(3):
        np.testing.assert_allclose(out[i], spectral_shift(x[i], s[i]), atol=1e-13)


def test_shift_odd_length_rejected():
    with pytest.raises(ShapeError):
        spectral_shift(np.ones(31), 0.5)


# -- fractional DFT -----------------------------------------------------------


def test_fdft_alpha_zero_sums(rng):
    x = rng.normal(size=40) + 1j * rng.normal(size=40)
    for method in ("direct", "chirpz"):
        np.testing.assert_allclose(fractional_dft(x, 0.0, method=method), np.full(40, x.sum()), atol=1e-12)


def test_fdft_alpha_one_over_n_is_dft(rng):
    x = rng.normal(size=64) + 1j * rng.normal(size=64)
    for method in ("direct", "chirpz"):
        np.testing.assert_allclose(fractional_dft(x, 1 / 64, method=method), np.fft.fft(x), atol=1e-11)


@pytest.mark.parametrize("N", [64, 256, 1000])
def test_fdft_fast_path_matches_double_sum(rng, N):
    x = rng.normal(size=N) + 1j * rng.normal(size=N)
    alpha = -(0.5 / 64) / (2 * 64)
    ref = oracle.direct_fractional_dft(x, alpha)
    assert rel(fractional_dft(x, alpha, method="chirpz"), ref) < 1e-9
    assert rel(fractional_dft(x, alpha, method="direct"), ref) < 1e-9


def test_fdft_output_length(rng):
    x = rng.normal(size=30)
    out = fractional_dft(x, 0.013, n_out=11, method="chirpz")
    np.testing.assert_allclose(out, oracle.direct_fractional_dft(x, 0.013, 11), atol=1e-10)


def test_fdft_unknown_method():
    with pytest.raises(ValueError):
        fractional_dft(np.ones(4), 0.1, method="nope")


# -- dilation -------------------------------------------------------------------


def test_dilate_identity_resampling(rng):
    v = rng.normal(size=32)
    x = np.zeros(64)
    x[16:48] = v
    np.testing.assert_allclose(dilate_and_shift(x, 16.0, 1.0), v, atol=1e-9)


def test_dilate_constant_in_band():
    x = np.zeros(128)
    x[32:96] = 1.0
    out = dilate_and_shift(x, 40.5, 0.5, n_out=64)
    # positions 40.5 .. 72 stay well inside the support
    assert np.max(np.abs(out[4:-4] - 1.0)) < 0.05


@pytest.mark.parametrize("s,h", [(3.3, 0.7), (10.0, 1.3), (0.0, 0.5)])
def test_dilate_matches_direct_sum(rng, s, h):
    x = rng.normal(size=48)
    np.testing.assert_allclose(dilate_and_shift(x, s, h), oracle.direct_dilate_and_shift(x, s, h), atol=1e-8)


# -- shears ---------------------------------------------------------------------


def test_shear_zero_identity(rng):
    img = rng.normal(size=(64, 32))
    np.testing.assert_allclose(shear_y(img, 0.0), img, atol=1e-12)


def test_shear_requires_padding():
    with pytest.raises(ShapeError):
        shear_y(np.ones((32, 32)), 0.2)


def test_shear_y_column_centroids():
    n = 64
    g = GridSpec(n, 4)
    P = np.zeros((2 * n, n))
    P[n // 2 : n // 2 + n] = gaussian(g, width=0.02)
    out = shear_y(P, 0.3)
    ypad = -2 + (np.arange(2 * n) + 0.5) * g.s_x
    for c in range(16, 48):
        col = out[:, c]
        centroid = np.sum(ypad * col) / np.sum(col)
        assert centroid == pytest.approx(-0.3 * g.nodes[c], abs=1e-3)


def test_shear_x_is_transposed_shear_y(rng):
    img = rng.normal(size=(16, 32))
    np.testing.assert_allclose(shear_x(img, 0.4), shear_y(img.T, 0.4).T, atol=1e-14)


# -- rotation -------------------------------------------------------------------


def test_plan_reduction():
    for eta in np.linspace(-7, 7, 57):
        p = rotation_plan(eta)
        assert -np.pi / 4 <= p.residual < np.pi / 4
        assert p.quarter_turns in (0, 1, 2, 3)
        back = p.quarter_turns * np.pi / 2 + p.residual
        assert abs(np.exp(1j * back) - np.exp(1j * eta)) < 1e-12


def test_rotate_zero_identity(rng):
    a = rng.normal(size=(32, 32))
    np.testing.assert_array_equal(rotate_array(a, 0.0), a)


def test_quarter_turn_is_exact_permutation():
    g = GridSpec(32, 4)
    X, Y = g.mesh()
    f = lambda x, y: np.sin(3 * x) + x * y**2 + 0.1 * y
    out = rotate_array(f(X, Y), np.pi / 2)
    # out(p) = f(R p), R(x, y) = (-y, x) for a quarter turn
    np.testing.assert_array_equal(out, f(-Y, X))


def test_round_trip_gaussian():
    g = GridSpec(128, 4)
    b = np.exp(-((g.mesh()[0] - 0.3) ** 2 + g.mesh()[1] ** 2) / 0.02)
    for eta in (0.4, -0.4):
        assert rel(rotate_array(rotate_array(b, eta), -eta), b) <= 1e-3


def test_rotation_matches_analytic_function():
    g = GridSpec(128, 4)
    X, Y = g.mesh()
    f = lambda x, y: np.exp(-((x - 0.3) ** 2 + (y + 0.1) ** 2) / 0.02)
    for eta in (0.3, 1.1, 2.0, -2.8, 0.7853981):
        c, s = np.cos(eta), np.sin(eta)
        assert rel(rotate_array(f(X, Y), eta), f(c * X - s * Y, s * X + c * Y)) < 1e-6


def test_rotation_vs_bilinear_oracle():
    g = GridSpec(128, 4)
    b = gaussian(g, 0.3, 0.0, 0.02)
    assert rel(rotate_array(b, 0.4), oracle.bilinear_rotate(b, 0.4)) <= 1e-2


def test_fused_equals_unfused():
    g = GridSpec(64, 4)
    b = gaussian(g, -0.2, 0.25, 0.03)
    for eta in (0.2, -0.6, 2.5):
        np.testing.assert_allclose(rotate_array(b, eta), rotate_unfused(b, eta), atol=1e-11)


def test_rotation_composition():
    g = GridSpec(64, 4)
    b = gaussian(g, 0.2, -0.1, 0.04)
    lhs = rotate_array(b, 0.5 + 0.3)
    rhs = rotate_array(rotate_array(b, 0.5), 0.3)
    assert rel(rhs, lhs) < 1e-2


def test_rotation_preserves_norm_and_radial():
    g = GridSpec(64, 4)
    radial = gaussian(g, 0, 0, 0.05)
    off = gaussian(g, 0.3, 0.1, 0.02)
    for eta in (0.1, 0.77, 3.0):
        assert rel(rotate_array(radial, eta), radial) < 1e-3
        assert abs(np.linalg.norm(rotate_array(off, eta)) / np.linalg.norm(off) - 1) < 1e-3


def test_rotation_leading_dims(rng):
    g = GridSpec(32, 4)
    stack = np.stack([gaussian(g, 0.1 * k, 0, 0.03) for k in range(3)])
    out = rotate_array(stack, 0.6)
    for k in range(3):
        np.testing.assert_allclose(out[k], rotate_array(stack[k], 0.6), atol=1e-14)


def test_rotate_field_and_support_warning():
    g = GridSpec(32, 4)
    inside = ScalarField(g, gaussian(g, 0, 0, 0.02))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = rotate(inside, 0.3)
    assert isinstance(out, ScalarField)
    corner = np.zeros((32, 32))
    corner[0, 0] = 1.0
    with pytest.warns(SupportWarning):
        rotate(ScalarField(g, corner), 0.3)


def test_rotate_rejects_non_square():
    with pytest.raises(ShapeError):
        rotate_array(np.ones((8, 16)), 0.2)
