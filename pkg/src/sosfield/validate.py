"""Statistical checks for generated fields.

Binned empirical ACFs (Pearson correlation per distance group), a
Kolmogorov-Smirnov distance to the standard normal, a plane-based ASE, an
independent FFT-based grid generator used to calibrate the estimator, and
the memory/operation cost model of filter-based vs. sum-of-sinusoids
generation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .acf import AcfSamples
from .fitter import SinusoidSet, to_db
from .generator import acf_of, to_uniform

DEFAULT_BIN_WIDTH = 2.0
DEFAULT_MAX_PAIRS = 10**7


class PlacementError(ValueError):
    """Position outside the area covered by a grid map."""


@dataclass(frozen=True, eq=False)
class BinnedAcf:
    """Correlation per distance bin.

    ``mean_corr``, ``min_corr`` and ``max_corr`` coincide for a single run;
    :func:`combine_runs` fills them with the statistics over several runs.
    Bins with fewer than two pairs hold NaN. ``target_corr``, when present,
    is the target ACF averaged over the member pairs of each bin.
    """

    bin_edges: np.ndarray
    mean_corr: np.ndarray
    min_corr: np.ndarray
    max_corr: np.ndarray
    pair_counts: np.ndarray
    target_corr: np.ndarray | None = None

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.mean_corr)

    def __len__(self) -> int:
        return self.pair_counts.size


class _PairAccumulator:
    """Running sums for a symmetric Pearson correlation per bin."""

    def __init__(self, n_bins: int):
        self.n_bins = n_bins
        self.count = np.zeros(n_bins, dtype=np.int64)
        self.s1 = np.zeros(n_bins)
        self.s2 = np.zeros(n_bins)
        self.sxy = np.zeros(n_bins)
        self.target = np.zeros(n_bins)

    def add(self, idx, vi, vj, target=None) -> None:
        n = self.n_bins
        self.count += np.bincount(idx, minlength=n)
        self.s1 += np.bincount(idx, vi + vj, minlength=n)
        self.s2 += np.bincount(idx, vi * vi + vj * vj, minlength=n)
        self.sxy += np.bincount(idx, vi * vj, minlength=n)
        if target is not None:
            self.target += np.bincount(idx, target, minlength=n)

    def result(self, edges: np.ndarray, with_target: bool) -> BinnedAcf:
        c = self.count.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = self.s1 / (2.0 * c)
            var = self.s2 / (2.0 * c) - mean**2
            cov = self.sxy / c - mean**2
            corr = cov / var
            target = self.target / c if with_target else None
        corr[self.count < 2] = np.nan
        if target is not None:
            target[self.count == 0] = np.nan
        return BinnedAcf(edges, corr, corr.copy(), corr.copy(), self.count.copy(), target)


def _as_xyz(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] not in (2, 3):
        raise ValueError(f"positions must have shape (M, 2) or (M, 3), got {p.shape}")
    if p.shape[1] == 2:
        p = np.column_stack([p, np.zeros(len(p))])
    return p


def _edges(bin_width: float, max_distance: float) -> np.ndarray:
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    n_bins = max(1, math.ceil(max_distance / bin_width - 1e-9))
    return bin_width * np.arange(n_bins + 1)


def _keep_probability(n_links: int, max_pairs: int | None) -> float:
    total = n_links * (n_links - 1) // 2
    if max_pairs is None or total <= max_pairs:
        return 1.0
    return max_pairs / total


def empirical_acf(
    positions,
    values,
    bin_width: float = DEFAULT_BIN_WIDTH,
    max_distance: float | None = None,
    target: Callable | None = None,
    max_pairs: int | None = DEFAULT_MAX_PAIRS,
    rng=None,
) -> BinnedAcf:
    """Pearson correlation of value pairs grouped by their separation.

    A pair at distance ``d`` belongs to bin ``floor(d / bin_width)``; pairs
    beyond ``max_distance`` are ignored. The correlation is symmetric in the
    two members of a pair. When there are more than ``max_pairs`` unordered
    pairs in total, each pair is kept independently with probability
    ``max_pairs / total`` (``rng`` controls which).

    Parameters
    ----------
    positions : array-like of shape (M, 3) or (M, 2)
    values : array-like of shape (M,)
    target : callable, optional
        Target ACF of distance; its mean over the pairs of each bin is
        stored in ``target_corr``.
    """
    p = _as_xyz(positions)
    v = np.asarray(values, dtype=float).ravel()
    if len(p) != len(v) or len(v) < 2:
        raise ValueError("positions and values must have the same length >= 2")
    if max_distance is None:
        max_distance = float(np.linalg.norm(p.max(axis=0) - p.min(axis=0))) + bin_width
    edges = _edges(bin_width, max_distance)
    acc = _PairAccumulator(len(edges) - 1)
    keep = _keep_probability(len(v), max_pairs)
    rng = np.random.default_rng(rng)

    for i in range(len(v) - 1):
        d = np.sqrt(((p[i + 1 :] - p[i]) ** 2).sum(axis=1))
        mask = d < edges[-1]
        if keep < 1.0:
            mask &= rng.random(d.size) < keep
        j = np.nonzero(mask)[0]
        if j.size == 0:
            continue
        dd = d[j]
        idx = np.minimum((dd / bin_width).astype(np.intp), acc.n_bins - 1)
        acc.add(idx, np.full(j.size, v[i]), v[i + 1 + j], None if target is None else target(dd))
    return acc.result(edges, target is not None)


def empirical_acf_d2d(
    tx_positions,
    rx_positions,
    values,
    bin_width: float = DEFAULT_BIN_WIDTH,
    max_distance: float | None = None,
    target: Callable | None = None,
    joint_target: bool = False,
    max_pairs: int | None = DEFAULT_MAX_PAIRS,
    rng=None,
) -> BinnedAcf:
    """Binned ACF of link values, grouped by transmitter separation.

    Link ``i`` has endpoints ``tx_positions[i]`` and ``rx_positions[i]`` and
    value ``values[i]``. A pair of links enters the bin of its transmitter
    distance only if the receivers are not further apart than that bin's
    upper edge (the receiver moves no faster than the transmitter).

    ``target_corr`` averages ``target(d_tx)`` over member pairs, or
    ``(target(d_tx) + target(d_rx)) / 2`` when ``joint_target`` is set.
    """
    pt = _as_xyz(tx_positions)
    pr = _as_xyz(rx_positions)
    v = np.asarray(values, dtype=float).ravel()
    if not len(pt) == len(pr) == len(v) or len(v) < 2:
        raise ValueError("tx_positions, rx_positions and values must have the same length >= 2")
    if max_distance is None:
        max_distance = float(np.linalg.norm(pt.max(axis=0) - pt.min(axis=0))) + bin_width
    edges = _edges(bin_width, max_distance)
    acc = _PairAccumulator(len(edges) - 1)
    keep = _keep_probability(len(v), max_pairs)
    rng = np.random.default_rng(rng)

    for i in range(len(v) - 1):
        dt = np.sqrt(((pt[i + 1 :] - pt[i]) ** 2).sum(axis=1))
        dr = np.sqrt(((pr[i + 1 :] - pr[i]) ** 2).sum(axis=1))
        idx = (dt / bin_width).astype(np.intp)
        mask = (dt < edges[-1]) & (dr <= (idx + 1) * bin_width)
        if keep < 1.0:
            mask &= rng.random(dt.size) < keep
        j = np.nonzero(mask)[0]
        if j.size == 0:
            continue
        tgt = None
        if target is not None:
            tgt = target(dt[j])
            if joint_target:
                tgt = 0.5 * (tgt + target(dr[j]))
        acc.add(np.minimum(idx[j], acc.n_bins - 1), np.full(j.size, v[i]), v[i + 1 + j], tgt)
    return acc.result(edges, target is not None)


def combine_runs(runs: Sequence[BinnedAcf]) -> BinnedAcf:
    """Average several runs over the same bins; min/max give the spread."""
    if not runs:
        raise ValueError("no runs to combine")
    edges = runs[0].bin_edges
    if any(len(r.bin_edges) != len(edges) or np.any(r.bin_edges != edges) for r in runs):
        raise ValueError("runs use different bins")
    corr = np.vstack([r.mean_corr for r in runs])
    counts = np.vstack([r.pair_counts for r in runs])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(corr, axis=0)
        lo = np.nanmin(corr, axis=0)
        hi = np.nanmax(corr, axis=0)
        target = None
        if all(r.target_corr is not None for r in runs):
            # pair-weighted so that runs with more pairs count more
            t = np.vstack([np.nan_to_num(r.target_corr) for r in runs])
            target = (t * counts).sum(axis=0) / counts.sum(axis=0)
    return BinnedAcf(edges, mean, lo, hi, counts.sum(axis=0), target)


def ks_gaussian(values) -> float:
    """Kolmogorov-Smirnov distance between the sample and ``N(0, 1)``."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    cdf = to_uniform(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def cdf_table(values, grid=None) -> np.ndarray:
    """Rows ``(x, empirical CDF at x, standard normal CDF at x)``."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if grid is None:
        grid = np.round(np.arange(-4.0, 4.0 + 1e-9, 0.1), 10)
    grid = np.asarray(grid, dtype=float)
    emp = np.searchsorted(x, grid, side="right") / x.size
    return np.column_stack([grid, emp, to_uniform(grid)])


_PLANES = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}


def plane_ase(sinusoids: SinusoidSet, acf: AcfSamples, plane: str = "xy", resolution: float = 0.5) -> float:
    """Squared error of the approximate ACF on a plane, inside the disk of radius ``d_max``.

    ``plane`` is ``"xy"``, ``"xz"``, ``"yz"`` or ``"all"`` (mean of the
    three). The target at displacement ``delta`` is the sampled ACF
    interpolated at ``|delta|``. Returned in dB.
    """
    if plane == "all":
        lin = np.mean([_plane_mse(sinusoids, acf, p, resolution) for p in _PLANES])
    elif plane in _PLANES:
        lin = _plane_mse(sinusoids, acf, plane, resolution)
    else:
        raise ValueError(f"unknown plane {plane!r}")
    return to_db(float(lin))


def _plane_mse(sinusoids: SinusoidSet, acf: AcfSamples, plane: str, resolution: float) -> float:
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    r_max = acf.d_max
    ticks = resolution * np.arange(-math.floor(r_max / resolution), math.floor(r_max / resolution) + 1)
    a, b = np.meshgrid(ticks, ticks, indexing="ij")
    radius = np.hypot(a, b)
    inside = radius <= r_max + 1e-9
    disp = np.zeros((int(inside.sum()), 3))
    i, j = _PLANES[plane]
    disp[:, i] = a[inside]
    disp[:, j] = b[inside]
    err = np.empty(len(disp))
    for start in range(0, len(disp), 4096):
        chunk = disp[start : start + 4096]
        err[start : start + 4096] = acf_of(sinusoids, chunk) - acf.evaluate(radius[inside][start : start + 4096])
    return float(np.mean(err**2))


# --------------------------------------------------------------------------
# grid oracle


@dataclass(frozen=True, eq=False)
class GridOracleMap:
    """Field values on a regular 2-D grid; ``values[i, j]`` sits at ``origin + (i, j) * spacing``."""

    values: np.ndarray
    origin: tuple[float, float]
    spacing: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def node_positions(self) -> np.ndarray:
        nx, ny = self.values.shape
        gx, gy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()]) * self.spacing + np.asarray(self.origin)


def _taper(r: np.ndarray, r_max: float, fraction: float = 0.1) -> np.ndarray:
    start = (1.0 - fraction) * r_max
    w = np.ones_like(r)
    roll = (r > start) & (r <= r_max)
    w[roll] = 0.5 * (1.0 + np.cos(math.pi * (r[roll] - start) / (r_max - start)))
    w[r > r_max] = 0.0
    return w


def grid_oracle(acf: AcfSamples, grid_size: int, spacing: float, rng=None, neg_tolerance: float = 0.01) -> GridOracleMap:
    """Periodic Gaussian field with the target ACF, by spectral synthesis.

    The radial target (tapered to zero over the last 10% of ``d_max``) is
    laid out on the periodic grid, its 2-D DFT gives the spectrum, negative
    spectral values are clamped to zero, and white noise shaped by the
    square-root spectrum is transformed back. The result has unit variance
    in expectation.
    """
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if grid_size * spacing / 2.0 < acf.d_max:
        raise ValueError(
            f"grid extent {grid_size * spacing} m is too small for ACF support {acf.d_max} m (need twice the support)"
        )
    rng = np.random.default_rng(rng)
    k = np.arange(grid_size)
    lag = np.minimum(k, grid_size - k) * spacing
    r = np.hypot(lag[:, None], lag[None, :])
    cov = acf.evaluate(r) * _taper(r, acf.d_max)
    spec = np.fft.fft2(cov).real
    neg = -spec[spec < 0].sum()
    if neg > neg_tolerance * np.abs(spec).sum():
        warnings.warn(
            f"ACF is not embeddable on a {grid_size}x{grid_size} grid: "
            f"{100 * neg / np.abs(spec).sum():.2f}% negative spectral mass clamped",
            RuntimeWarning,
            stacklevel=2,
        )
    spec = np.clip(spec, 0.0, None)
    white = rng.standard_normal((grid_size, grid_size))
    field = np.fft.ifft2(np.sqrt(spec) * np.fft.fft2(white)).real
    var = spec.sum() / grid_size**2
    return GridOracleMap(field / math.sqrt(var), (0.0, 0.0), float(spacing))


def bilinear_sample(grid_map: GridOracleMap, positions) -> np.ndarray | float:
    """Bilinear interpolation of the map at 2-D positions.

    Raises :class:`PlacementError` for positions outside the grid.
    """
    p = np.asarray(positions, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)[:, :2]
    u = (p - np.asarray(grid_map.origin)) / grid_map.spacing
    nx, ny = grid_map.values.shape
    if np.any(u < 0) or np.any(u[:, 0] > nx - 1) or np.any(u[:, 1] > ny - 1):
        raise PlacementError("position outside the map area")
    i = np.minimum(np.floor(u[:, 0]).astype(np.intp), nx - 2)
    j = np.minimum(np.floor(u[:, 1]).astype(np.intp), ny - 2)
    tx = u[:, 0] - i
    ty = u[:, 1] - j
    v = grid_map.values
    out = (
        v[i, j] * (1 - tx) * (1 - ty)
        + v[i + 1, j] * tx * (1 - ty)
        + v[i, j + 1] * (1 - tx) * ty
        + v[i + 1, j + 1] * tx * ty
    )
    return float(out[0]) if single else out


# --------------------------------------------------------------------------
# cost model


def cost_model(method: str, dims: int, size: int, filter_order: int = 200) -> dict:
    """Memory and operation counts of the two generation approaches.

    For ``"filter"``, ``size`` is the map edge length in samples; for
    ``"sos"`` it is the number of sinusoids. Cosines count as ~15 flops.
    """
    if dims < 1 or size < 1:
        raise ValueError("dims and size must be positive")
    if method == "filter":
        cells = size**dims
        return {
            "memory_elements": cells,
            "init_ops": dims * filter_order * cells,
            "per_output_ops": 2 * dims**2 + 5 * dims,
        }
    if method == "sos":
        return {
            "memory_elements": (dims + 1) * size,
            "init_ops": size,
            "per_output_ops": size * (2 * dims + 15),
        }
    raise ValueError(f"unknown method {method!r}")
