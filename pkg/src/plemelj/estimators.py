"""scikit-learn style front ends.

``CauchyTransform`` is fitted to a (curve, density) pair and predicts the
transform at off-curve points. ``ModulusOfContinuityEstimator`` is fitted to
samples ``(x, phi(x))`` and predicts the modulus of continuity at given
separations. Both follow the usual ``get_params``/``set_params`` contract.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_complex_array, check_positive
from .curve import Curve
from .density import (Density, ModulusEstimate, classify_regularity, default_t_grid, estimate_modulus,
                      modulus_from_samples)
from .pv import PVConfig
from .transform import TransformConfig, boundary_values, evaluate_transform


class CauchyTransform(BaseEstimator):
    """``Phi(z) = (1/2 pi i) int_C phi(s)/(s - z) ds`` as an estimator.

    Parameters
    ----------
    abs_tol, rel_tol : quadrature tolerances for off-curve evaluation.
    pv_abs_tol : absolute tolerance of the principal values used by
        :meth:`boundary_values`.
    depth : deepest excision level ``k`` (``eps = 2^-k``).
    """

    def __init__(self, abs_tol=1e-12, rel_tol=1e-11, pv_abs_tol=1e-10, depth=40):
        self.abs_tol = abs_tol
        self.rel_tol = rel_tol
        self.pv_abs_tol = pv_abs_tol
        self.depth = depth

    def _config(self) -> TransformConfig:
        pv = PVConfig(abs_tol=check_positive(self.pv_abs_tol, "pv_abs_tol")).with_depth(int(self.depth))
        return TransformConfig(pv=pv, abs_tol=self.abs_tol, rel_tol=self.rel_tol)

    def fit(self, curve: Curve, density: Density):
        if not isinstance(curve, Curve):
            raise TypeError("curve must be a plemelj Curve")
        if not isinstance(density, Density):
            raise TypeError("density must be a plemelj Density")
        self.curve_ = curve
        self.density_ = density
        self.config_ = self._config()
        return self

    def predict(self, Z) -> np.ndarray:
        """``Phi`` at each point of ``Z`` (complex array or ``(n, 2)`` real pairs)."""
        check_is_fitted(self, "curve_")
        z = as_complex_array(Z, "Z")
        return np.array([evaluate_transform(self.curve_, self.density_, zk, self.config_).value for zk in z])

    def boundary_values(self, taus) -> np.ndarray:
        """``(n, 2)`` array of ``(Phi^+, Phi^-)`` at the curve parameters ``taus``."""
        check_is_fitted(self, "curve_")
        out = []
        for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
            bv = boundary_values(self.curve_, self.density_, float(tau), self.config_)
            out.append((bv.phi_plus, bv.phi_minus))
        return np.array(out, dtype=complex).reshape(-1, 2)


class ModulusOfContinuityEstimator(BaseEstimator):
    """Modulus of continuity from samples.

    ``fit(X, y)`` with sample locations ``X`` (real, complex, or ``(n, 2)``
    pairs) and values ``y`` computes the exact modulus over all sample pairs.
    Alternatively :meth:`fit_density` samples a density on a curve.
    ``predict(t)`` interpolates the estimate; :meth:`classify` returns the
    Hölder/Dini verdict.
    """

    def __init__(self, t_grid=None, n_pairs=4000, random_state=0):
        self.t_grid = t_grid
        self.n_pairs = n_pairs
        self.random_state = random_state

    def _grid(self):
        return default_t_grid() if self.t_grid is None else np.asarray(self.t_grid, dtype=float)

    def fit(self, X, y):
        X = np.asarray(X)
        if X.ndim == 2 and X.shape[1] == 1:
            X = X[:, 0]
        x = as_complex_array(X, "X") if (np.iscomplexobj(X) or X.ndim == 2) else np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=complex).ravel()
        if x.shape != y.shape:
            raise ValueError(f"X and y have inconsistent lengths {x.shape[0]} and {y.shape[0]}")
        if x.size < 2:
            raise ValueError("need at least two samples")
        self.estimate_: ModulusEstimate = modulus_from_samples(x, y, self._grid())
        return self

    def fit_density(self, density: Density, curve: Curve):
        self.estimate_ = estimate_modulus(density, curve, self.n_pairs, self._grid(), self.random_state)
        return self

    def predict(self, t) -> np.ndarray:
        check_is_fitted(self, "estimate_")
        return self.estimate_(np.asarray(t, dtype=float))

    def classify(self):
        check_is_fitted(self, "estimate_")
        return classify_regularity(self.estimate_)
