"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .acf import AcfSamples


def check_positions(X, width: int) -> np.ndarray:
    """Return ``X`` as a finite float array of shape (M, width).

    For ``width == 3``, 2-D positions are accepted and placed at ``z = 0``.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if width == 3 and X.shape[1] == 2:
        X = np.column_stack([X, np.zeros(X.shape[0])])
    if X.shape[1] != width:
        raise ValueError(f"expected {width} columns, got {X.shape[1]}")
    return X


def check_acf_input(X, y, decorr_distance=None, name: str = "custom") -> AcfSamples:
    """Turn ``fit(X, y)`` arguments into :class:`AcfSamples`.

    ``X`` is either already an ``AcfSamples`` (``y`` must then be None) or
    the sampling distances, shape (S,) or (S, 1), with ``y`` the
    correlations.
    """
    if isinstance(X, AcfSamples):
        if y is not None:
            raise ValueError("y must be None when X is AcfSamples")
        return X
    if y is None:
        raise ValueError("correlations y are required when X holds distances")
    d = check_array(X, dtype=np.float64, ensure_2d=False)
    if d.ndim == 2:
        if d.shape[1] != 1:
            raise ValueError(f"distances must be a single column, got {d.shape[1]}")
        d = d[:, 0]
    r = check_array(y, dtype=np.float64, ensure_2d=False).ravel()
    if decorr_distance is None:
        from .acf import _estimate_decorr

        decorr_distance = _estimate_decorr(d, r)
    return AcfSamples(d, r, decorr_distance, name=name)
