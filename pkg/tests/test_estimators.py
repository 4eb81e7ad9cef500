"""Estimator wrapper tests: sklearn contract plus recovery smoke."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from iff.estimators import IFF, StackedMUSIC
from iff.experiments import baseline_stacked_music
from iff.signal_model import (
    IlluminationSpec,
    SourceModel,
    make_grid,
    synthesize_scenario,
)


def easy_case(sigma=1e-6, seed=3):
    grid = make_grid(1.0, 12)
    src = SourceModel(np.array([-1.1, 0.7]), np.ones(2, dtype=np.complex128))
    illum = IlluminationSpec.uniform(1.0, 2.0, 6)
    y, _ = synthesize_scenario(grid, src, illum, sigma, seed=seed)
    return y, src


class TestSklearnContract:
    def test_get_params_round_trip(self):
        est = IFF(sigma=1e-4, cluster_radius=0.05, max_outer_iters=3)
        params = est.get_params()
        assert params["sigma"] == 1e-4
        assert params["cluster_radius"] == 0.05
        rebuilt = IFF(**params)
        assert rebuilt.get_params() == params

    def test_clone(self):
        est = IFF(sigma=2e-3, d_prior=0.1)
        twin = clone(est)
        assert twin.get_params() == est.get_params()
        music = clone(StackedMUSIC(n_sources=3, omega=2.0))
        assert music.n_sources == 3 and music.omega == 2.0

    def test_set_params(self):
        est = IFF().set_params(sigma=5e-5, subsample_stride=2)
        assert est.sigma == 5e-5 and est.subsample_stride == 2

    def test_fit_does_not_touch_params(self):
        y, _ = easy_case()
        est = IFF(sigma=1e-6, cluster_radius=0.18)
        before = est.get_params()
        est.fit(y.data)
        assert est.get_params() == before

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            IFF().predict()
        with pytest.raises(NotFittedError):
            StackedMUSIC().predict()


class TestIFFEstimator:
    def test_recovers_two_sources(self):
        y, src = easy_case()
        est = IFF(sigma=1e-6, cluster_radius=0.18).fit(y.data)
        assert est.n_sources_ == 2
        assert est.converged_
        assert np.max(np.abs(est.positions_ - src.positions)) < 1e-3
        assert np.array_equal(est.predict(), est.positions_)
        assert est.gamma_ == est.result_.gamma_final

    def test_refit_overwrites(self):
        y_a, _ = easy_case(seed=3)
        y_b, _ = easy_case(seed=4)
        est = IFF(sigma=1e-6, cluster_radius=0.18)
        first = est.fit(y_a.data).positions_.copy()
        second = est.fit(y_b.data).positions_
        assert first.shape == second.shape
        assert not np.array_equal(first, second)

    def test_invalid_matrix_rejected(self):
        est = IFF()
        with pytest.raises(ValueError):
            est.fit(np.zeros(7, dtype=complex))
        with pytest.raises(ValueError):
            est.fit(np.zeros((2, 8), dtype=complex))


class TestStackedMUSICEstimator:
    def test_matches_functional_core(self):
        y, src = easy_case()
        est = StackedMUSIC(n_sources=2).fit(y.data)
        direct = baseline_stacked_music(y, 2)
        assert np.allclose(est.positions_, direct)
        assert np.max(np.abs(est.predict() - src.positions)) < 1e-4

    def test_count_validation(self):
        y, _ = easy_case()
        with pytest.raises(ValueError):
            StackedMUSIC(n_sources=13).fit(y.data)
