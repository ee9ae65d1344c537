"""scikit-learn compatible wrappers around the rate models and the transform.

Rate models take ``X`` as a single column of scale factors alpha and
predict W / W_vac. The transformer takes rate curves as rows sampled on a
shared alpha grid and returns their windowed Fourier spectra.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .cavity import CavityConfig, RateCurve, golden_rule_curve, uniform_grid
from .orbits import first_orbits, semiclassical_rate
from .spectral import find_peaks, gamma_grid, modified_fourier_transform, padded_gammas


def _alpha_column(X) -> np.ndarray:
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected a single column of alpha values, got {X.shape[1]} columns")
    if np.any(X <= 0):
        raise ValueError("alpha values must be positive")
    return X[:, 0]


class GoldenRuleRate(RegressorMixin, BaseEstimator):
    """Exact mode-sum rate as a (parameter-free) regressor of alpha."""

    def __init__(self, n=1.49, r_asym=0.0):
        self.n = n
        self.r_asym = r_asym

    def fit(self, X, y=None):
        if y is not None:
            check_X_y(X, y)
        _alpha_column(X)
        CavityConfig(self.n, 1.0, self.r_asym)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "n_features_in_")
        return golden_rule_curve(self.n, self.r_asym, _alpha_column(X))


class ClosedOrbitRate(RegressorMixin, BaseEstimator):
    """Orbit-sum rate truncated to the ``n_orbits`` shortest closed orbits."""

    def __init__(self, n=1.49, r_asym=0.0, n_orbits=100):
        self.n = n
        self.r_asym = r_asym
        self.n_orbits = n_orbits

    def fit(self, X, y=None):
        if y is not None:
            check_X_y(X, y)
        _alpha_column(X)
        self.orbits_ = first_orbits(CavityConfig(self.n, 1.0, self.r_asym), self.n_orbits)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "orbits_")
        alphas = _alpha_column(X)
        return semiclassical_rate(CavityConfig(self.n, 1.0, self.r_asym), self.n_orbits, alphas)


class ModifiedFourierTransformer(TransformerMixin, BaseEstimator):
    """Rows of rate samples on the alpha grid -> |W~| (or complex W~) on the gamma grid."""

    def __init__(
        self,
        background=1.49,
        alpha_min=1.0,
        alpha_max=16.0,
        d_alpha=0.01,
        gamma_min=2.0,
        gamma_max=50.0,
        d_gamma=0.01,
        output="abs",
    ):
        self.background = background
        self.alpha_min = alpha_min
        self.alpha_max = alpha_max
        self.d_alpha = d_alpha
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.d_gamma = d_gamma
        self.output = output

    def fit(self, X, y=None):
        if self.output not in ("abs", "complex"):
            raise ValueError(f"output must be 'abs' or 'complex', got {self.output!r}")
        self.alphas_ = uniform_grid(self.alpha_min, self.alpha_max, self.d_alpha)
        self.gammas_ = gamma_grid(self.gamma_min, self.gamma_max, self.d_gamma)
        X = check_array(X, dtype=float)
        self._check_width(X)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_width(self, X):
        if X.shape[1] != self.alphas_.size:
            raise ValueError(f"expected {self.alphas_.size} rate samples per row, got {X.shape[1]}")

    def transform(self, X):
        check_is_fitted(self, "gammas_")
        X = check_array(X, dtype=float)
        self._check_width(X)
        dtype = float if self.output == "abs" else complex
        out = np.empty((X.shape[0], self.gammas_.size), dtype=dtype)
        for i, row in enumerate(X):
            curve = RateCurve(self.alphas_, row, n=self.background, r_asym=float("nan"), d_alpha=self.d_alpha)
            values = modified_fourier_transform(curve, self.background, self.gammas_).values
            out[i] = np.abs(values) if self.output == "abs" else values
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "gammas_")
        return np.array([f"gamma_{g:.6g}" for g in self.gammas_], dtype=object)


class FourierPeakExtractor(BaseEstimator):
    """Fit on ``(alpha column, rates)`` and expose detected peaks as ``positions_`` / ``heights_``."""

    def __init__(self, background=1.49, gamma_min=2.0, gamma_max=50.0, d_gamma=0.01,
                 threshold_frac=0.05, min_separation=0.5):
        self.background = background
        self.gamma_min = gamma_min
        self.gamma_max = gamma_max
        self.d_gamma = d_gamma
        self.threshold_frac = threshold_frac
        self.min_separation = min_separation

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        alphas = _alpha_column(X)
        d_alpha = (alphas[-1] - alphas[0]) / (alphas.size - 1)
        curve = RateCurve(alphas, y, n=self.background, r_asym=float("nan"), d_alpha=float(d_alpha))
        # tones just outside the gamma range are modelled, then dropped
        gammas = padded_gammas((self.gamma_min, self.gamma_max, self.d_gamma))
        self.spectrum_ = modified_fourier_transform(curve, self.background, gammas)
        self.peaks_ = find_peaks(
            self.spectrum_, self.threshold_frac, self.min_separation, span=(self.gamma_min, self.gamma_max)
        )
        self.positions_ = np.array([p.position for p in self.peaks_])
        self.heights_ = np.array([p.height for p in self.peaks_])
        self.n_features_in_ = 1
        return self
