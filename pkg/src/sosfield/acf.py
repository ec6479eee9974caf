"""Target autocorrelation functions and their sampled representation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

DEFAULT_DECORR_DISTANCE = 10.0
DEFAULT_SPACING = 0.25
DEFAULT_COUNT = 200


class InvalidAcfError(ValueError):
    """Raised when sampled correlations violate the ACF invariants."""


def _check_decorr(d_lambda: float) -> None:
    if not d_lambda > 0:
        raise ValueError(f"decorrelation distance must be positive, got {d_lambda!r}")


def exponential_acf(d, d_lambda: float):
    """Exponential decay ``exp(-d / d_lambda)``.

    Works elementwise on arrays and returns a float for scalar input.
    """
    _check_decorr(d_lambda)
    return np.exp(-np.asarray(d, dtype=float) / d_lambda)[()]


def gauss_exp_acf(d, d_lambda: float):
    """Gaussian core below ``d_lambda``, exponential tail from ``d_lambda`` on.

    Both branches equal ``exp(-1)`` at ``d == d_lambda`` so the function is
    continuous, but closely spaced samples are more strongly correlated than
    under the plain exponential.
    """
    _check_decorr(d_lambda)
    d = np.asarray(d, dtype=float)
    x = d / d_lambda
    return np.where(d < d_lambda, np.exp(-x * x), np.exp(-x))[()]


ACF_FUNCTIONS: dict[str, Callable] = {
    "exp": exponential_acf,
    "gauss-exp": gauss_exp_acf,
}


@dataclass(frozen=True, eq=False)
class AcfSamples:
    """A target ACF sampled at increasing distances.

    Attributes
    ----------
    distances : ndarray of shape (S,)
        Sampling distances in meters. ``distances[0]`` is 0.
    correlations : ndarray of shape (S,)
        Target correlation at each distance. ``correlations[0]`` is 1.
    decorr_distance : float
        Decorrelation distance the samples were generated for, in meters.
    name : str
        Free-form label, e.g. ``"exp"`` or the source file name.
    """

    distances: np.ndarray
    correlations: np.ndarray
    decorr_distance: float
    name: str = "custom"

    def __post_init__(self):
        d = np.array(self.distances, dtype=float)
        r = np.array(self.correlations, dtype=float)
        if d.ndim != 1 or d.shape != r.shape:
            raise InvalidAcfError("distances and correlations must be 1-D arrays of equal length")
        if d.size < 2:
            raise InvalidAcfError("at least two samples are required")
        if d[0] != 0.0:
            raise InvalidAcfError(f"first distance must be 0, got {d[0]}")
        if np.any(np.diff(d) <= 0):
            raise InvalidAcfError("distances must be strictly increasing")
        if not np.isclose(r[0], 1.0, rtol=0, atol=1e-12):
            raise InvalidAcfError(f"correlation at zero distance must be 1, got {r[0]}")
        if not np.all(np.isfinite(r)) or np.any(np.abs(r) > 1.0 + 1e-12):
            raise InvalidAcfError("correlations must lie in [-1, 1]")
        r[0] = 1.0
        d.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "correlations", r)
        object.__setattr__(self, "decorr_distance", float(self.decorr_distance))

    @property
    def d_max(self) -> float:
        """Largest sampled distance (the fit's reference length)."""
        return float(self.distances[-1])

    def __len__(self) -> int:
        return self.distances.size

    def evaluate(self, d):
        """Linearly interpolate the samples; zero beyond the last distance."""
        d = np.abs(np.asarray(d, dtype=float))
        return np.interp(d, self.distances, self.correlations, right=0.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["distance", "correlation"])
            for d, r in zip(self.distances, self.correlations):
                writer.writerow([repr(float(d)), repr(float(r))])

    @classmethod
    def from_csv(cls, path, decorr_distance: float | None = None) -> "AcfSamples":
        """Read a two-column ``distance,correlation`` file with one header line.

        If ``decorr_distance`` is not given it is estimated as the first
        distance where the correlation drops to ``exp(-1)``.
        """
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 2:
            raise InvalidAcfError(f"{path}: expected 2 columns, found {data.shape[1]}")
        d, r = data[:, 0], data[:, 1]
        if decorr_distance is None:
            decorr_distance = _estimate_decorr(d, r)
        return cls(d, r, decorr_distance, name=Path(path).name)


def _estimate_decorr(d: np.ndarray, r: np.ndarray) -> float:
    below = np.nonzero(r <= np.exp(-1.0))[0]
    if below.size == 0:
        return float(d[-1])
    i = below[0]
    if i == 0:
        return float(d[0])
    # linear interpolation across the crossing
    t = (r[i - 1] - np.exp(-1.0)) / (r[i - 1] - r[i])
    return float(d[i - 1] + t * (d[i] - d[i - 1]))


def sample_acf(
    acf: Callable,
    d_lambda: float = DEFAULT_DECORR_DISTANCE,
    spacing: float = DEFAULT_SPACING,
    count: int = DEFAULT_COUNT,
    name: str | None = None,
) -> AcfSamples:
    """Sample ``acf(d, d_lambda)`` at ``0, spacing, ..., (count - 1) * spacing``.

    Raises
    ------
    InvalidAcfError
        If ``acf(0) != 1`` or any sample falls outside ``[-1, 1]``.
    """
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing!r}")
    if count < 2:
        raise ValueError(f"need at least 2 samples, got {count!r}")
    d = spacing * np.arange(count, dtype=float)
    r = np.array([float(acf(x, d_lambda)) for x in d])
    if not np.isclose(r[0], 1.0, rtol=0, atol=1e-12):
        raise InvalidAcfError(f"acf(0) must be 1, got {r[0]}")
    if not np.all(np.isfinite(r)) or np.any(np.abs(r) > 1.0 + 1e-12):
        raise InvalidAcfError("sampled correlations must lie in [-1, 1]")
    if name is None:
        name = next((k for k, f in ACF_FUNCTIONS.items() if f is acf), getattr(acf, "__name__", "custom"))
    return AcfSamples(d, r, d_lambda, name=name)
