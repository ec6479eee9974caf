"""scikit-learn style front end: a fitter for coefficient tables and
transformers that map positions to correlated values."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import fitter as _fit
from . import generator as _gen
from ._validation import check_acf_input, check_positions
from .fitter import FitConfig, SinusoidSet


class SOSFitter(BaseEstimator):
    """Fit sum-of-sinusoids frequencies to a sampled isotropic ACF.

    Parameters
    ----------
    n_sinusoids : int, default=100
    n_test_directions : int, default=28
        Directions over which the ASE is averaged during refinement.
    n_restarts : int, default=1
        Independent initializations; the lowest-ASE result is kept.
    max_sweeps : int, default=50
    dims : {2, 3}, default=3
        2 restricts all sinusoids and test directions to the x-y plane.
    search_grid_points : int or None, default=None
        Grid size of the per-sinusoid search; None means 4 per ACF sample.
    normalized_freq_max : float, default=4*pi
    direction_jitter : bool, default=False
        Randomly rotate the direction set on every restart.
    random_state : int, default=0
    n_jobs : int or None, default=None
        Parallel restarts via joblib.

    Attributes
    ----------
    sinusoids_ : SinusoidSet
    ase_db_ : float
        ASE of the best restart, dB.
    restart_ase_db_ : ndarray of shape (n_restarts,)
    acf_ : AcfSamples
    """

    def __init__(
        self,
        n_sinusoids=100,
        n_test_directions=28,
        n_restarts=1,
        max_sweeps=50,
        dims=3,
        search_grid_points=None,
        normalized_freq_max=4.0 * math.pi,
        direction_jitter=False,
        random_state=0,
        n_jobs=None,
    ):
        self.n_sinusoids = n_sinusoids
        self.n_test_directions = n_test_directions
        self.n_restarts = n_restarts
        self.max_sweeps = max_sweeps
        self.dims = dims
        self.search_grid_points = search_grid_points
        self.normalized_freq_max = normalized_freq_max
        self.direction_jitter = direction_jitter
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> FitConfig:
        return FitConfig(
            n_sinusoids=self.n_sinusoids,
            n_test_directions=self.n_test_directions,
            n_restarts=self.n_restarts,
            max_sweeps=self.max_sweeps,
            dims=self.dims,
            rng_seed=self.random_state,
            search_grid_points=self.search_grid_points,
            normalized_freq_max=self.normalized_freq_max,
            direction_jitter=self.direction_jitter,
            n_jobs=self.n_jobs,
        )

    def fit(self, X, y=None, decorr_distance=None):
        """Fit to ``AcfSamples`` or to (distances, correlations)."""
        acf = check_acf_input(X, y, decorr_distance)
        config = self._config()
        best, runs = _fit.fit(acf, config, return_all=True)
        self.acf_ = acf
        self.sinusoids_ = best
        self.ase_db_ = best.fit_ase_db
        self.restart_ase_db_ = np.array([r.fit_ase_db for r in runs])
        self.test_directions_ = _fit.test_directions(config)
        return self

    def predict(self, X):
        """Approximate ACF.

        Rows of three columns are displacement vectors. A single column is
        read as distances; the result is then averaged over the test
        directions used in fitting.
        """
        check_is_fitted(self, "sinusoids_")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 or X.shape[1] == 1:
            d = X.reshape(-1)
            disp = d[:, None, None] * self.test_directions_.vectors[None, :, :]
            return _gen.acf_of(self.sinusoids_, disp).mean(axis=1)
        return _gen.acf_of(self.sinusoids_, check_positions(X, 3))

    def score(self, X, y=None):
        """Negative ASE in dB against the given samples (higher is better)."""
        check_is_fitted(self, "sinusoids_")
        acf = check_acf_input(X, y, self.acf_.decorr_distance)
        return -_fit.ase(self.sinusoids_, acf, self.test_directions_)


class CorrelatedField(TransformerMixin, BaseEstimator):
    """Map 3-D positions to spatially correlated standard-normal values.

    ``fit`` binds random phases to the coefficient table; ``transform``
    evaluates the process, so the same fitted instance always returns the
    same value for the same position.

    Parameters
    ----------
    sinusoids : SinusoidSet
    decorr_distance : float or None
        Rescale the table to this decorrelation distance before use.
    uniform : bool, default=False
        Return values mapped to (0, 1) instead of normal values.
    random_state : int, Generator or None
    """

    def __init__(self, sinusoids=None, decorr_distance=None, uniform=False, random_state=None):
        self.sinusoids = sinusoids
        self.decorr_distance = decorr_distance
        self.uniform = uniform
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if not isinstance(self.sinusoids, SinusoidSet):
            raise TypeError("sinusoids must be a SinusoidSet")
        table = self.sinusoids
        if self.decorr_distance is not None:
            table = _gen.rescale(table, self.decorr_distance)
        self.process_ = _gen.bind_phases(table, self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "process_")
        values = _gen.evaluate3(self.process_, check_positions(X, 3))
        if self.uniform:
            values = _gen.to_uniform(values)
        return values.reshape(-1, 1)


class DualMobilityField(TransformerMixin, BaseEstimator):
    """Correlated values for (transmitter, receiver) position pairs.

    Rows of ``X`` are ``(x_t, y_t, z_t, x_r, y_r, z_r)``. The two ends may
    use different coefficient tables.
    """

    def __init__(self, tx_sinusoids=None, rx_sinusoids=None, uniform=False, random_state=None):
        self.tx_sinusoids = tx_sinusoids
        self.rx_sinusoids = rx_sinusoids
        self.uniform = uniform
        self.random_state = random_state

    def fit(self, X=None, y=None):
        if not isinstance(self.tx_sinusoids, SinusoidSet):
            raise TypeError("tx_sinusoids must be a SinusoidSet")
        rx = self.rx_sinusoids if self.rx_sinusoids is not None else self.tx_sinusoids
        if not isinstance(rx, SinusoidSet):
            raise TypeError("rx_sinusoids must be a SinusoidSet")
        self.process_ = _gen.bind_phases_dual(self.tx_sinusoids, rx, self.random_state)
        return self

    def transform(self, X):
        check_is_fitted(self, "process_")
        values = _gen.evaluate6(self.process_, check_positions(X, 6))
        if self.uniform:
            values = _gen.to_uniform(values)
        return values.reshape(-1, 1)
