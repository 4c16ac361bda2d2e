"""scikit-learn style wrappers around the forward map and the normal operator.

Samples are flattened images: ``X`` has shape ``(n_samples, n_x * n_x)``
(row-major ``[y, x]``). Fitting only builds the grid, medium and cutoff;
there is nothing to learn.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .grid import GridSpec, ScalarField
from .pipeline import adjoint_XV, forward_XV
from .scene import NoiseSpec, add_noise, example_medium
from .transport import CutoffSpec, MediumSpec

__all__ = ["XVForward", "NormalOperator"]


def _medium(name, grid):
    if name == "example":
        return example_medium(grid)
    if name == "vacuum":
        return MediumSpec.vacuum(grid)
    raise ValueError(f"unknown medium {name!r}; use 'example' or 'vacuum'")


class _Base(TransformerMixin, BaseEstimator):
    def _setup(self):
        self.grid_ = GridSpec(self.n_x, self.n_d)
        self.medium_ = _medium(self.medium, self.grid_)
        if self.arc_end - self.arc_start >= 2 * np.pi:
            self.cutoff_ = CutoffSpec.full()
        else:
            self.cutoff_ = CutoffSpec(self.arc_start, self.arc_end, taper_dir=self.taper_dir)
        self.n_features_in_ = self.n_x * self.n_x

    def fit(self, X=None, y=None):
        self._setup()
        if X is not None:
            self._check(X, reset=True)
        return self

    def _check(self, X, reset=False):
        X = check_array(X, dtype=np.float64, ensure_all_finite=True)
        if X.shape[1] != self.n_x * self.n_x:
            raise ValueError(f"X has {X.shape[1]} features, expected n_x^2 = {self.n_x * self.n_x}")
        return X

    def _fields(self, X):
        n = self.n_x
        for row in X:
            yield ScalarField(self.grid_, row.reshape(n, n), disk_supported=True)


class XVForward(_Base):
    """Flattened sources -> flattened partial boundary data ``(n_samples, n_d * n_x)``."""

    def __init__(self, n_x=64, n_d=32, medium="example", arc_start=0.0, arc_end=np.pi / 3,
                 taper_dir=0.1, m1=8):
        self.n_x = n_x
        self.n_d = n_d
        self.medium = medium
        self.arc_start = arc_start
        self.arc_end = arc_end
        self.taper_dir = taper_dir
        self.m1 = m1

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check(X)
        out = [forward_XV(f, self.medium_, self.cutoff_, self.m1, keep_terms=False).data.values.ravel()
               for f in self._fields(X)]
        return np.asarray(out)


class NormalOperator(_Base):
    """Flattened sources -> flattened normal-operator images ``(n_samples, n_x * n_x)``.

    With ``mu > 0`` relative noise is added to the data of sample ``i``
    using seed ``seed + i``.
    """

    def __init__(self, n_x=64, n_d=32, medium="example", arc_start=0.0, arc_end=np.pi / 3,
                 taper_dir=0.1, m1=8, m2=2, mu=0.0, seed=0):
        self.n_x = n_x
        self.n_d = n_d
        self.medium = medium
        self.arc_start = arc_start
        self.arc_end = arc_end
        self.taper_dir = taper_dir
        self.m1 = m1
        self.m2 = m2
        self.mu = mu
        self.seed = seed

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check(X)
        out = []
        for i, f in enumerate(self._fields(X)):
            data = forward_XV(f, self.medium_, self.cutoff_, self.m1, keep_terms=False).data
            if self.mu > 0:
                data = add_noise(data, NoiseSpec(self.mu, self.seed + i))
            out.append(adjoint_XV(data, self.medium_, self.cutoff_, self.m2, keep_terms=False).image.values.ravel())
        return np.asarray(out)
