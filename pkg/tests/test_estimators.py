import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import FunctionTransformer

from rtenormal.estimators import NormalOperator, XVForward
from rtenormal.grid import GridSpec
from rtenormal.pipeline import forward_XV, normal_operator
from rtenormal.scene import NoiseSpec, add_noise, example_medium, make_phantom, spiral_bumps
from rtenormal.transport import CutoffSpec, MediumSpec


def phantoms(n, k=2):
    g = GridSpec(n, 8)
    base = make_phantom(spiral_bumps(), g).values
    return np.stack([base.ravel() * (i + 1) for i in range(k)])


def test_params_round_trip():
    est = NormalOperator(n_x=32, n_d=16, m1=3, mu=0.2, seed=4)
    p = est.get_params()
    assert p["m1"] == 3 and p["mu"] == 0.2 and p["medium"] == "example"
    est.set_params(m2=0)
    assert clone(est).get_params()["m2"] == 0


def test_forward_matches_functional():
    X = phantoms(32)
    est = XVForward(n_x=32, n_d=16, m1=2).fit(X)
    out = est.transform(X)
    assert out.shape == (2, 16 * 32)
    g = est.grid_
    ref = forward_XV(make_phantom(spiral_bumps(), g), example_medium(g), CutoffSpec.paper(), 2).data.values
    np.testing.assert_allclose(out[0], ref.ravel(), rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(out[1], 2 * out[0], rtol=1e-10, atol=1e-14)


def test_normal_matches_functional_with_noise():
    X = phantoms(32)
    est = NormalOperator(n_x=32, n_d=16, m1=2, m2=1, mu=0.5, seed=7)
    out = est.fit_transform(X)
    g = est.grid_
    f = make_phantom(spiral_bumps(), g)
    ref = normal_operator(f, example_medium(g), CutoffSpec.paper(), 2, 1, noise=lambda b: add_noise(b, NoiseSpec(0.5, 7)))
    np.testing.assert_allclose(out[0], ref.image.values.ravel(), rtol=1e-12, atol=1e-15)


def test_full_circle_and_vacuum():
    X = phantoms(16, 1)
    est = XVForward(n_x=16, n_d=8, medium="vacuum", arc_start=0.0, arc_end=2 * np.pi).fit(X)
    assert est.cutoff_.full_circle and est.medium_.kernel is None
    g = est.grid_
    ref = forward_XV(make_phantom(spiral_bumps(), g), MediumSpec.vacuum(g), CutoffSpec.full(), 8).data.values
    np.testing.assert_allclose(est.transform(X)[0], ref.ravel(), rtol=1e-12, atol=1e-15)


def test_validation():
    est = XVForward(n_x=16, n_d=8)
    with pytest.raises(NotFittedError):
        est.transform(phantoms(16))
    est.fit()
    with pytest.raises(ValueError):
        est.transform(np.ones((1, 10)))
    bad = phantoms(16, 1)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        est.transform(bad)
    with pytest.raises(ValueError):
        XVForward(medium="fog").fit()


def test_in_sklearn_pipeline():
    X = phantoms(16)
    pipe = make_pipeline(FunctionTransformer(lambda a: 0.5 * a), NormalOperator(n_x=16, n_d=8, m1=1, m2=1))
    out = pipe.fit_transform(X)
    direct = NormalOperator(n_x=16, n_d=8, m1=1, m2=1).fit_transform(0.5 * X)
    np.testing.assert_array_equal(out, direct)
