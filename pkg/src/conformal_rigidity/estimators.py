"""scikit-learn compatible wrappers.

``MobiusRegressor`` fits a conformal transformation to point
correspondences and predicts image points.  ``QuadraticElementTransformer``
maps parameter points of a fixed immersion to the gauge-fixed pair
``(g_hat, h_hat)``, which agrees between conformally equivalent surfaces.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .equivalence import fit_mobius
from .hypersurface import canonical_element, fundamental_forms, jets_on_grid
from .mobius import AmbientSpace, apply_to_ambient_point, orthogonality_residual


class MobiusRegressor(RegressorMixin, BaseEstimator):
    """Least-squares Möbius transformation of ``R^{p,q}``.

    Parameters
    ----------
    p, q : int
        Signature of the flat model; ``X`` and ``y`` have ``p + q`` columns.
    """

    def __init__(self, p=4, q=0):
        self.p = p
        self.q = q

    def fit(self, X, y):
        X, y = validate_data(self, X, y, multi_output=True, y_numeric=True)
        space = AmbientSpace.of(self.p, self.q)
        y = np.asarray(y, dtype=float)
        if X.shape[1] != space.n or y.ndim != 2 or y.shape != X.shape:
            raise ValueError(f"X and y must both have shape (m, {space.n})")
        self.mobius_ = fit_mobius(space, X, y)
        self.matrix_ = self.mobius_.matrix
        self.orthogonality_residual_ = orthogonality_residual(self.mobius_)
        return self

    def predict(self, X):
        check_is_fitted(self, "mobius_")
        X = validate_data(self, X, reset=False)
        return np.array([apply_to_ambient_point(self.mobius_, x) for x in X])


class QuadraticElementTransformer(TransformerMixin, BaseEstimator):
    """Gauge-invariant second-order features of a hypersurface.

    Each row of ``X`` is a parameter point of ``surface``; the output row holds
    the upper triangles of ``g_hat`` then ``h_hat``.
    """

    def __init__(self, surface=None):
        self.surface = surface

    def fit(self, X, y=None):
        if self.surface is None:
            raise ValueError("surface must be set")
        X = validate_data(self, X)
        if X.shape[1] != self.surface.d:
            raise ValueError(f"expected {self.surface.d} parameter columns, got {X.shape[1]}")
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = validate_data(self, X, reset=False)
        d = self.surface.d
        iu = np.triu_indices(d)
        rows = []
        for jet in jets_on_grid(self.surface, X):
            el = canonical_element(fundamental_forms(self.surface.space, jet))
            rows.append(np.concatenate([el.g_hat[iu], el.h_hat[iu]]))
        return np.array(rows)

