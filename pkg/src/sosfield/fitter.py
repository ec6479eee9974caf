"""Iterative per-sinusoid fitting of sum-of-sinusoids frequencies.

Each sinusoid ``n`` has a fixed unit direction and a scalar root frequency
``f_n`` (cycles per meter); its frequency vector is ``f_n * direction_n``.
The fitter updates one root frequency at a time against a 1-D directional
ACF and keeps the update only if the direction-averaged squared error (ASE)
over a set of test directions goes down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .acf import AcfSamples

AXES = "xyz"
ASE_FLOOR_DB = -200.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DegenerateDirectionError(ValueError):
    """Raised when a frequency cannot be inverted along the chosen axis."""


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit direction vectors, one per row.

    Pitch is the elevation above the horizontal plane (positive up); yaw is
    measured counter-clockwise from the +x (east) axis.
    """

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float).reshape(-1, 3)
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_angles(cls, pitch, yaw) -> "DirectionSet":
        pitch = np.asarray(pitch, dtype=float)
        yaw = np.asarray(yaw, dtype=float)
        return cls(np.column_stack([np.cos(yaw) * np.cos(pitch), np.sin(yaw) * np.cos(pitch), np.sin(pitch)]))

    @property
    def pitch(self) -> np.ndarray:
        return np.arcsin(np.clip(self.vectors[:, 2], -1.0, 1.0))

    @property
    def yaw(self) -> np.ndarray:
        return np.arctan2(self.vectors[:, 1], self.vectors[:, 0])

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class SinusoidSet:
    """Fitted sinusoid frequencies; amplitudes are implicit (``a_n**2 = 2/N``).

    Attributes
    ----------
    freqs : ndarray of shape (N, 3)
        Frequency vectors ``(f_x, f_y, f_z)`` in cycles per meter.
    d_max : float
        Largest sampled distance of the fitted ACF, meters.
    decorr_distance : float
        Decorrelation distance the frequencies currently correspond to.
    dims : int
        2 for in-plane fits (``f_z == 0``), 3 otherwise.
    fit_ase_db : float
        ASE of the fit in dB, NaN if unknown.
    acf_name : str
        Label of the fitted target.
    """

    freqs: np.ndarray
    d_max: float
    decorr_distance: float
    dims: int = 3
    fit_ase_db: float = float("nan")
    acf_name: str = "custom"

    def __post_init__(self):
        f = np.array(self.freqs, dtype=float)
        if f.ndim != 2 or f.shape[1] != 3 or f.shape[0] < 1:
            raise ValueError(f"freqs must have shape (N, 3) with N >= 1, got {f.shape}")
        if self.dims not in (2, 3):
            raise ValueError(f"dims must be 2 or 3, got {self.dims!r}")
        if self.dims == 2 and np.any(f[:, 2] != 0.0):
            raise ValueError("2-D sinusoid sets must have zero z-frequencies")
        f.flags.writeable = False
        object.__setattr__(self, "freqs", f)

    @property
    def n_sinusoids(self) -> int:
        return self.freqs.shape[0]

    @property
    def amplitude_sq(self) -> float:
        return 2.0 / self.n_sinusoids

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0 / self.n_sinusoids)

    @property
    def freq_x(self) -> np.ndarray:
        return self.freqs[:, 0]

    @property
    def freq_y(self) -> np.ndarray:
        return self.freqs[:, 1]

    @property
    def freq_z(self) -> np.ndarray:
        return self.freqs[:, 2]

    @classmethod
    def from_roots(cls, roots, directions: DirectionSet, **kwargs) -> "SinusoidSet":
        roots = np.asarray(roots, dtype=float)
        return cls(roots[:, None] * directions.vectors, **kwargs)


@dataclass
class FitConfig:
    """Settings for :func:`fit`.

    ``normalized_freq_max`` bounds the per-sinusoid search in units where a
    root frequency ``u`` corresponds to ``u / d_max`` cycles per meter. Initial
    frequencies are drawn from ``(-pi, pi)`` in the same units; the search is
    allowed to go further because sharp ACF peaks (e.g. the exponential cusp
    at zero) need high-frequency components.
    """

    n_sinusoids: int = 100
    n_test_directions: int = 28
    n_restarts: int = 1
    max_sweeps: int = 50
    dims: int = 3
    rng_seed: int = 0
    search_grid_points: int | None = None
    normalized_freq_max: float = 4.0 * math.pi
    direction_jitter: bool = False
    n_jobs: int | None = None

    def __post_init__(self):
        if self.n_sinusoids < 1:
            raise ValueError("n_sinusoids must be >= 1")
        if self.n_test_directions < 1:
            raise ValueError("n_test_directions must be >= 1")
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.dims not in (2, 3):
            raise ValueError(f"dims must be 2 or 3, got {self.dims!r}")
        if not self.normalized_freq_max > 0:
            raise ValueError("normalized_freq_max must be positive")
        if self.search_grid_points is not None and self.search_grid_points < 2:
            raise ValueError("search_grid_points must be >= 2")

    def grid_points(self, n_samples: int) -> int:
        return self.search_grid_points or 4 * n_samples


# --------------------------------------------------------------------------
# directions


def make_directions(count: int) -> DirectionSet:
    """Place ``count`` near-equidistributed unit vectors on the sphere.

    Regular area partition: latitude bands of equal angular height, each
    holding a number of points proportional to its circumference. The band
    sizes are adjusted from the last band backwards so that exactly
    ``count`` points are produced.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    area = 4.0 * math.pi / count
    step = math.sqrt(area)
    m_theta = max(1, round(math.pi / step))
    d_theta = math.pi / m_theta
    d_phi = area / d_theta
    thetas = math.pi * (np.arange(m_theta) + 0.5) / m_theta
    sizes = [max(0, round(2.0 * math.pi * math.sin(t) / d_phi)) for t in thetas]

    diff = count - sum(sizes)
    for m in range(m_theta - 1, -1, -1):
        if diff == 0:
            break
        new = max(0, sizes[m] + diff)
        diff -= new - sizes[m]
        sizes[m] = new

    polar, yaw = [], []
    for t, k in zip(thetas, sizes):
        polar.extend([t] * k)
        yaw.extend(2.0 * math.pi * np.arange(k) / k if k else [])
    return DirectionSet.from_angles(math.pi / 2.0 - np.asarray(polar), np.asarray(yaw))


def in_plane_directions(count: int) -> DirectionSet:
    """``count`` horizontal directions with yaw equally spaced over ``[0, pi)``.

    Half a turn suffices because ``cos`` is even: yaw ``phi`` and
    ``phi + pi`` give identical ACF contributions.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count!r}")
    yaw = math.pi * np.arange(count) / count
    return DirectionSet.from_angles(np.zeros(count), yaw)


def fit_directions(config: FitConfig) -> DirectionSet:
    if config.dims == 2:
        return in_plane_directions(config.n_sinusoids)
    return make_directions(config.n_sinusoids)


def test_directions(config: FitConfig) -> DirectionSet:
    if config.dims == 2:
        return in_plane_directions(config.n_test_directions)
    return make_directions(config.n_test_directions)


def _random_rotation(rng: np.random.Generator, dims: int) -> np.ndarray:
    if dims == 2:
        a = rng.uniform(-math.pi, math.pi)
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# --------------------------------------------------------------------------
# elementary operations


def init_frequencies(config: FitConfig, d_max: float, rng: np.random.Generator) -> np.ndarray:
    """Draw ``N`` root frequencies ``U(-pi, pi) / d_max`` (cycles per meter)."""
    if not d_max > 0:
        raise ValueError(f"d_max must be positive, got {d_max!r}")
    return rng.uniform(-math.pi, math.pi, size=config.n_sinusoids) / d_max


def select_axis(direction) -> str:
    """Pick the coordinate axis with the largest direction component.

    Ties go to ``x`` before ``y`` before ``z``. Component magnitudes are
    compared, so the chosen component is always at least ``1/sqrt(3)``.
    """
    dx, dy, dz = np.abs(np.asarray(direction, dtype=float))
    if dx >= dy and dx >= dz:
        return "x"
    if dy > dx and dy >= dz:
        return "y"
    return "z"


def directional_acf(sinusoids: SinusoidSet, axis: str, distances) -> np.ndarray:
    """Approximate ACF along one coordinate axis: ``mean_n cos(2 pi d f_axis,n)``."""
    f = sinusoids.freqs[:, AXES.index(axis)]
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    return np.cos(2.0 * math.pi * np.outer(d, f)).mean(axis=1)


def test_frequencies(sinusoids: SinusoidSet | np.ndarray, test_dirs: DirectionSet) -> np.ndarray:
    """Project every frequency vector onto every test direction, shape (T, N)."""
    freqs = sinusoids.freqs if isinstance(sinusoids, SinusoidSet) else np.asarray(sinusoids, dtype=float)
    return test_dirs.vectors @ freqs.T


test_directions.__test__ = False  # keep pytest from collecting these by name
test_frequencies.__test__ = False


def to_db(value: float) -> float:
    if value <= 0.0:
        return ASE_FLOOR_DB
    return max(ASE_FLOOR_DB, 10.0 * math.log10(value))


def ase_linear(freqs: np.ndarray, acf: AcfSamples, test_dirs: DirectionSet) -> float:
    ft = test_dirs.vectors @ np.asarray(freqs, dtype=float).T  # (T, N)
    approx = np.cos(2.0 * math.pi * ft[:, :, None] * acf.distances[None, None, :]).mean(axis=1)
    return float(np.mean((acf.correlations[None, :] - approx) ** 2))


def ase(sinusoids: SinusoidSet, acf: AcfSamples, test_dirs: DirectionSet) -> float:
    """Average squared ACF error over test directions and sample distances, dB."""
    return to_db(ase_linear(sinusoids.freqs, acf, test_dirs))


def golden_section(func, lo: float, hi: float, rel_tol: float = 1e-6, abs_tol: float = 1e-12):
    """Minimize a unimodal ``func`` on ``[lo, hi]``; returns ``(x, func(x))``."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = func(x1), func(x2)
    while hi - lo > rel_tol * 0.5 * (abs(lo) + abs(hi)) + abs_tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = func(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = func(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


# --------------------------------------------------------------------------
# refinement engine


class _Refiner:
    """Holds the running cosine sums that make one update O(T*S)."""

    def __init__(self, acf: AcfSamples, directions: DirectionSet, test_dirs: DirectionSet, config: FitConfig):
        self.d = np.asarray(acf.distances)
        self.rho = np.asarray(acf.correlations)
        self.d_max = acf.d_max
        self.n = len(directions)
        if self.n != config.n_sinusoids:
            raise ValueError("direction count does not match n_sinusoids")
        self.dirs = directions.vectors
        self.axis = np.array([AXES.index(select_axis(v)) for v in self.dirs])
        self.axis_comp = np.abs(self.dirs[np.arange(self.n), self.axis])
        if np.any(self.axis_comp == 0.0):
            raise DegenerateDirectionError("selected direction component is zero")
        self.proj = self.dirs @ test_dirs.vectors.T  # (N, T)
        self.tdirs = test_dirs.vectors

        self.u_grid = np.linspace(0.0, config.normalized_freq_max, config.grid_points(self.d.size))
        self.w = 2.0 * math.pi * self.d / self.d_max  # phase per unit u
        self.grid_cos = np.cos(np.outer(self.u_grid, self.w))
        self.grid_sq = np.einsum("gs,gs->g", self.grid_cos, self.grid_cos)

    # running sums ----------------------------------------------------------
    def reset(self, roots: np.ndarray) -> None:
        self.roots = np.array(roots, dtype=float)
        tf = self.roots[:, None] * self.proj  # (N, T)
        self.c_test = np.cos(2.0 * math.pi * tf[:, :, None] * self.d).sum(axis=0)  # (T, S)
        af = self.roots[:, None] * self.dirs  # (N, 3)
        self.c_axis = np.cos(2.0 * math.pi * af[:, :, None] * self.d).sum(axis=0)  # (3, S)
        self.ase = self._ase_of(self.c_test)

    def _ase_of(self, c_test: np.ndarray) -> float:
        return float(np.mean((self.rho - c_test / self.n) ** 2))

    # one-sinusoid search ---------------------------------------------------
    def residual(self, i: int) -> np.ndarray:
        a = self.axis[i]
        own = np.cos(2.0 * math.pi * self.roots[i] * self.dirs[i, a] * self.d)
        return self.rho - (self.c_axis[a] - own) / self.n

    def search(self, i: int) -> float:
        r = self.residual(i)
        inv_n = 1.0 / self.n
        obj = self.grid_sq * inv_n**2 - 2.0 * inv_n * (self.grid_cos @ r)
        k = int(np.argmin(obj))
        lo = self.u_grid[max(k - 1, 0)]
        hi = self.u_grid[min(k + 1, self.u_grid.size - 1)]
        w = self.w

        def h(u):
            e = r - inv_n * np.cos(u * w)
            return e @ e

        u, _ = golden_section(h, lo, hi)
        if h(self.u_grid[k]) < h(u):
            u = self.u_grid[k]
        return u / (self.d_max * self.axis_comp[i])

    # accept / reject -------------------------------------------------------
    def try_update(self, i: int, new_root: float) -> bool:
        old_root = self.roots[i]
        if new_root == old_root:
            return False
        two_pi_d = 2.0 * math.pi * self.d
        delta_t = np.cos(np.outer(new_root * self.proj[i], two_pi_d)) - np.cos(np.outer(old_root * self.proj[i], two_pi_d))
        c_test = self.c_test + delta_t
        new_ase = self._ase_of(c_test)
        if not new_ase < self.ase:
            return False
        self.c_test = c_test
        self.c_axis += np.cos(np.outer(new_root * self.dirs[i], two_pi_d)) - np.cos(np.outer(old_root * self.dirs[i], two_pi_d))
        self.roots[i] = new_root
        self.ase = new_ase
        return True

    def sweep(self, history: list | None = None) -> int:
        accepted = 0
        for i in range(self.n):
            if self.try_update(i, self.search(i)):
                accepted += 1
                if history is not None:
                    history.append(self.ase)
        # drop accumulated rounding from the incremental sums
        self.reset(self.roots)
        return accepted


# --------------------------------------------------------------------------
# public fitting API


def update_frequency(
    n: int,
    roots: np.ndarray,
    directions: DirectionSet,
    acf: AcfSamples,
    config: FitConfig,
) -> float:
    """Best root frequency for sinusoid ``n`` with all others held fixed.

    Minimizes the squared error between the target and the directional ACF
    along the axis picked by :func:`select_axis`. Grid search over
    ``[0, normalized_freq_max]`` followed by golden-section refinement of the
    best bracket. Returned in cycles per meter, such that the component along
    the selected axis equals ``u / d_max`` in magnitude.
    """
    if not 0 <= n < config.n_sinusoids:
        raise IndexError(f"sinusoid index {n} out of range")
    dummy_tests = DirectionSet(np.eye(3)[:1])
    ref = _Refiner(acf, directions, dummy_tests, config)
    ref.reset(roots)
    return ref.search(n)


def refine(
    roots: np.ndarray,
    directions: DirectionSet,
    acf: AcfSamples,
    test_dirs: DirectionSet,
    config: FitConfig,
    history: list | None = None,
) -> SinusoidSet:
    """Sweep over all sinusoids until a sweep accepts no update.

    Updates are applied only if they strictly decrease the ASE. Sweeps stop
    after ``config.max_sweeps``. If ``history`` is a list, the ASE (linear)
    before the first sweep and after every accepted update is appended.
    """
    ref = _Refiner(acf, directions, test_dirs, config)
    ref.reset(roots)
    if history is not None:
        history.append(ref.ase)
    for _ in range(config.max_sweeps):
        if ref.sweep(history) == 0:
            break
    return _as_set(ref.roots, directions, acf, config, ref.ase)


def _as_set(roots, directions, acf, config, ase_lin) -> SinusoidSet:
    freqs = np.asarray(roots)[:, None] * directions.vectors
    if config.dims == 2:
        freqs[:, 2] = 0.0
    return SinusoidSet(
        freqs,
        d_max=acf.d_max,
        decorr_distance=acf.decorr_distance,
        dims=config.dims,
        fit_ase_db=to_db(ase_lin),
        acf_name=acf.name,
    )


def _run_restart(acf: AcfSamples, config: FitConfig, seed_seq: np.random.SeedSequence) -> SinusoidSet:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    base = fit_directions(config).vectors
    if config.direction_jitter:
        base = base @ _random_rotation(rng, config.dims).T
    directions = DirectionSet(base[rng.permutation(config.n_sinusoids)])
    roots = init_frequencies(config, acf.d_max, rng)
    return refine(roots, directions, acf, test_directions(config), config)


def fit(acf: AcfSamples, config: FitConfig, return_all: bool = False):
    """Best-of-restarts fit of ``config.n_sinusoids`` frequencies to ``acf``.

    Each restart permutes the assignment of directions to sinusoids (and
    optionally rotates the whole direction set), draws fresh root
    frequencies, and refines them. Restart seeds are spawned from
    ``config.rng_seed`` so results do not depend on execution order.

    Returns the lowest-ASE :class:`SinusoidSet`, or, with ``return_all``,
    the list of every restart's result as well.
    """
    seeds = np.random.SeedSequence(config.rng_seed).spawn(config.n_restarts)
    if config.n_jobs in (None, 1) or config.n_restarts == 1:
        results = [_run_restart(acf, config, s) for s in seeds]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=config.n_jobs)(delayed(_run_restart)(acf, config, s) for s in seeds)
    best = min(results, key=lambda s: s.fit_ase_db)
    if return_all:
        return best, results
    return best


def with_ase(sinusoids: SinusoidSet, acf: AcfSamples, test_dirs: DirectionSet) -> SinusoidSet:
    """Copy of ``sinusoids`` with ``fit_ase_db`` recomputed against ``acf``."""
    return replace(sinusoids, fit_ase_db=ase(sinusoids, acf, test_dirs))
