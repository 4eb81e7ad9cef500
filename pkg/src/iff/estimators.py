"""Estimator-style wrappers over the functional core.

Both classes follow the scikit-learn contract: constructors only store
parameters, ``fit`` consumes a T x (2K+1) complex measurement matrix
whose columns correspond to the symmetric frequency grid of the given
band limit, and fitted attributes carry trailing underscores. ``X`` is
the measurement matrix; there is no target, positions are read back
from ``positions_`` or ``predict()``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .driver import IFFConfig, run_iff
from .experiments import baseline_stacked_music
from .signal_model import MeasurementSet, make_grid
from .validation import check_measurement_matrix


def _as_measurements(X, omega: float) -> MeasurementSet:
    data = check_measurement_matrix(X, name="X")
    k_half = (data.shape[1] - 1) // 2
    return MeasurementSet(data, make_grid(omega, k_half))


class IFF(BaseEstimator):
    """Iterative focusing-localization and filtering estimator.

    Recovers point-source positions from multiple band-limited
    measurement rows without knowing the source count. Parameters
    mirror the loop configuration; ``sigma`` is the per-entry noise
    bound used by the stopping certificate.
    """

    def __init__(
        self,
        omega: float = 1.0,
        sigma: float = 0.0,
        eps: float = 1e-12,
        c_noise: float = 1.0,
        d_prior: float | None = None,
        cluster_radius: float | None = None,
        max_outer_iters: int = 10,
        subsample_stride: int = 1,
        hankel_half: int | None = None,
        search_window: tuple[float, float] | None = None,
    ):
        self.omega = omega
        self.sigma = sigma
        self.eps = eps
        self.c_noise = c_noise
        self.d_prior = d_prior
        self.cluster_radius = cluster_radius
        self.max_outer_iters = max_outer_iters
        self.subsample_stride = subsample_stride
        self.hankel_half = hankel_half
        self.search_window = search_window

    def _config(self) -> IFFConfig:
        return IFFConfig(
            eps=self.eps,
            c_noise=self.c_noise,
            d_prior=self.d_prior,
            cluster_radius=self.cluster_radius,
            max_outer_iters=self.max_outer_iters,
            subsample_stride=self.subsample_stride,
            hankel_half=self.hankel_half,
            search_window=self.search_window,
        )

    def fit(self, X, y=None):
        measurements = _as_measurements(X, self.omega)
        result = run_iff(measurements, self.sigma, self._config())
        self.result_ = result
        self.positions_ = np.asarray(result.support.positions, dtype=float)
        self.n_sources_ = int(result.support.count)
        self.gamma_ = float(result.gamma_final)
        self.converged_ = bool(result.converged)
        return self

    def predict(self, X=None):
        """Recovered source positions of the fitted measurements."""
        if not hasattr(self, "positions_"):
            raise NotFittedError("IFF must be fitted before predicting")
        return self.positions_.copy()


class StackedMUSIC(BaseEstimator):
    """Known-count subspace baseline over vertically stacked Hankels."""

    def __init__(self, n_sources: int = 1, omega: float = 1.0):
        self.n_sources = n_sources
        self.omega = omega

    def fit(self, X, y=None):
        measurements = _as_measurements(X, self.omega)
        self.positions_ = baseline_stacked_music(measurements, self.n_sources)
        return self

    def predict(self, X=None):
        """Estimated source positions of the fitted measurements."""
        if not hasattr(self, "positions_"):
            raise NotFittedError("StackedMUSIC must be fitted before "
                                 "predicting")
        return self.positions_.copy()
