"""
scikit-learn compatible wrappers around the localisers.

``X`` is an ``(n_samples, K*M)`` array of RSS observations ordered like
:func:`vlcloc.channel.rss_vector`; ``predict`` returns ``(n_samples, 3)``
positions. The scene is a constructor parameter, so ``get_params`` /
``clone`` / pipelines work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .aoa import aoa_localize
from .channel import Observation
from .exceptions import ConfigError, NoAnchorsError, InsufficientAnchorsError
from .geometry import Scene
from .rss import RrcConfig, SolverConfig, rss_localize


def _rmse(y_true, y_pred) -> float:
    err = np.linalg.norm(np.asarray(y_true) - np.asarray(y_pred), axis=1)
    return float(np.sqrt(np.nanmean(err ** 2)))


class _LocalizerMixin(RegressorMixin):

    def fit(self, X=None, y=None):
        """Validate the scene. The localisers have no trainable state; ``X``
        is only checked for width when given."""
        if not isinstance(self.scene, Scene):
            raise ConfigError("scene must be a vlcloc.geometry.Scene")
        self.n_features_in_ = self.scene.n_leds
        if X is not None:
            self._check_X(X)
        return self

    def _check_X(self, X):
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != self.scene.n_leds:
            raise ValueError(
                f"X has {X.shape[1]} features, scene has {self.scene.n_leds} LEDs")
        return X

    def predict(self, X):
        """Positions for each observation row; rows that cannot be localised are NaN."""
        check_is_fitted(self, "n_features_in_")
        X = self._check_X(X)
        out = np.full((X.shape[0], 3), np.nan)
        for i, row in enumerate(X):
            try:
                out[i] = self.localize(row).estimate
            except (NoAnchorsError, InsufficientAnchorsError):
                pass
        return out

    def score(self, X, y, sample_weight=None):
        """Negative RMSE (metres) against true positions ``y``."""
        return -_rmse(y, self.predict(X))

    def _observation(self, s) -> Observation:
        return Observation.for_scene(s, self.scene, noise_variance=self.noise_variance)


class AOALocalizer(_LocalizerMixin, BaseEstimator):
    """Direction-line least squares, optionally weighted by observed RSS."""

    def __init__(self, scene=None, weighted=True, noise_variance=0.0):
        self.scene = scene
        self.weighted = weighted
        self.noise_variance = noise_variance

    def localize(self, s):
        return aoa_localize(self._observation(s), self.scene, weighted=self.weighted)


class RSSLocalizer(_LocalizerMixin, BaseEstimator):
    """ML RSS localiser: Gauss-Newton from the weighted-AOA estimate and the
    RRC centroids, keeping the best fit.

    ``random_state`` seeds the RRC sampling; row ``i`` of ``predict`` uses
    the seed sequence ``(random_state, i)``.
    """

    def __init__(self, scene=None, step_size=0.2, max_iter=200, step_tol=1e-6,
                 residual_tol=1e-15, n_samples=500, n_keep=100, n_clusters=4,
                 kmeans_iter=25, use_aoa_seed=True, noise_variance=0.0, random_state=0):
        self.scene = scene
        self.step_size = step_size
        self.max_iter = max_iter
        self.step_tol = step_tol
        self.residual_tol = residual_tol
        self.n_samples = n_samples
        self.n_keep = n_keep
        self.n_clusters = n_clusters
        self.kmeans_iter = kmeans_iter
        self.use_aoa_seed = use_aoa_seed
        self.noise_variance = noise_variance
        self.random_state = random_state

    def _solver_config(self):
        return SolverConfig(self.step_size, self.max_iter, self.step_tol, self.residual_tol)

    def _rrc_config(self, seed):
        return RrcConfig(self.n_samples, self.n_keep, self.n_clusters, self.kmeans_iter, seed)

    def localize(self, s, seed=None):
        obs = self._observation(s)
        aoa_seed = None
        if self.use_aoa_seed:
            try:
                aoa_seed = aoa_localize(obs, self.scene, weighted=True).estimate
            except (NoAnchorsError, InsufficientAnchorsError):
                aoa_seed = None
        rrc = None
        if self.n_clusters > 0:
            rrc = self._rrc_config(self.random_state if seed is None else seed)
        if aoa_seed is None and rrc is None:
            raise NoAnchorsError("no AOA seed available and RRC disabled")
        return rss_localize(obs, self.scene, self._solver_config(), rrc, aoa_seed)

    def predict(self, X):
        check_is_fitted(self, "n_features_in_")
        X = self._check_X(X)
        out = np.full((X.shape[0], 3), np.nan)
        for i, row in enumerate(X):
            seed = [0 if self.random_state is None else int(self.random_state), i]
            try:
                out[i] = self.localize(row, seed=seed).estimate
            except NoAnchorsError:
                pass
        return out
