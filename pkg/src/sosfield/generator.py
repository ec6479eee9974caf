"""Evaluation of sum-of-sinusoids processes at arbitrary positions."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erfc

from .fitter import SinusoidSet

THREADS_ENV = "SOSFIELD_THREADS"
_CHUNK = 8192


def _n_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return max(1, int(value))
    return 1


@dataclass(frozen=True, eq=False)
class CorrelatedProcess:
    """A coefficient table bound to one set of random phases."""

    sinusoids: SinusoidSet
    phases: np.ndarray

    def __post_init__(self):
        p = np.array(self.phases, dtype=float).ravel()
        if p.size != self.sinusoids.n_sinusoids:
            raise ValueError(f"expected {self.sinusoids.n_sinusoids} phases, got {p.size}")
        p.flags.writeable = False
        object.__setattr__(self, "phases", p)

    @property
    def decorr_distance(self) -> float:
        return self.sinusoids.decorr_distance

    def __call__(self, positions) -> np.ndarray:
        return evaluate3(self, positions)


@dataclass(frozen=True, eq=False)
class DualMobilityProcess:
    """Sum of independent transmitter- and receiver-side processes.

    The phases hold the transmitter phases first, then the receiver phases.
    """

    tx_sinusoids: SinusoidSet
    rx_sinusoids: SinusoidSet
    phases: np.ndarray

    def __post_init__(self):
        p = np.array(self.phases, dtype=float).ravel()
        expected = self.tx_sinusoids.n_sinusoids + self.rx_sinusoids.n_sinusoids
        if p.size != expected:
            raise ValueError(f"expected {expected} phases, got {p.size}")
        p.flags.writeable = False
        object.__setattr__(self, "phases", p)

    @property
    def tx(self) -> CorrelatedProcess:
        return CorrelatedProcess(self.tx_sinusoids, self.phases[: self.tx_sinusoids.n_sinusoids])

    @property
    def rx(self) -> CorrelatedProcess:
        return CorrelatedProcess(self.rx_sinusoids, self.phases[self.tx_sinusoids.n_sinusoids :])

    def freq_matrix(self) -> np.ndarray:
        """Block-sparse 6-D frequency vectors, shape (N_tx + N_rx, 6)."""
        nt = self.tx_sinusoids.n_sinusoids
        f = np.zeros((nt + self.rx_sinusoids.n_sinusoids, 6))
        f[:nt, :3] = self.tx_sinusoids.freqs
        f[nt:, 3:] = self.rx_sinusoids.freqs
        return f

    def amplitudes(self) -> np.ndarray:
        """Per-term amplitudes of the combined sum, each ``a_n / sqrt(2)``."""
        nt, nr = self.tx_sinusoids.n_sinusoids, self.rx_sinusoids.n_sinusoids
        return np.concatenate([np.full(nt, self.tx_sinusoids.amplitude), np.full(nr, self.rx_sinusoids.amplitude)]) / math.sqrt(2.0)

    def __call__(self, pairs) -> np.ndarray:
        return evaluate6(self, pairs)


def bind_phases(sinusoids: SinusoidSet, rng) -> CorrelatedProcess:
    """Draw ``N`` phases uniformly from ``(-pi, pi]``."""
    rng = np.random.default_rng(rng)
    return CorrelatedProcess(sinusoids, _draw_phases(rng, sinusoids.n_sinusoids))


def bind_phases_dual(tx: SinusoidSet, rx: SinusoidSet, rng) -> DualMobilityProcess:
    rng = np.random.default_rng(rng)
    return DualMobilityProcess(tx, rx, _draw_phases(rng, tx.n_sinusoids + rx.n_sinusoids))


def _draw_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    # uniform on [0, 1) mapped onto (-pi, pi]
    return math.pi - 2.0 * math.pi * rng.random(n)


def _cos_sum(points: np.ndarray, freqs: np.ndarray, phases: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """``sum_n amps_n cos(2 pi f_n . p + phase_n)`` for each row of ``points``."""
    out = np.empty(points.shape[0])
    two_pi_f = 2.0 * math.pi * freqs.T

    # Elementwise products and a row-wise sum instead of BLAS, so a value
    # does not depend on the batch it was evaluated in.
    def work(start: int) -> None:
        stop = min(start + _CHUNK, points.shape[0])
        block = points[start:stop]
        arg = np.multiply.outer(block[:, 0], two_pi_f[0])
        for k in range(1, block.shape[1]):
            arg += np.multiply.outer(block[:, k], two_pi_f[k])
        arg += phases
        np.cos(arg, out=arg)
        arg *= amps
        out[start:stop] = arg.sum(axis=1)

    starts = range(0, points.shape[0], _CHUNK)
    threads = _n_threads()
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return out


def _as_points(positions, width: int) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    if p.ndim == 1:
        p = p.reshape(1, -1)
    if p.ndim != 2 or p.shape[1] != width:
        raise ValueError(f"positions must have shape (M, {width}), got {np.shape(positions)}")
    return p


def evaluate3(process: CorrelatedProcess, positions) -> np.ndarray:
    """Process values at 3-D positions (meters), shape (M,)."""
    p = _as_points(positions, 3)
    s = process.sinusoids
    amps = np.full(s.n_sinusoids, s.amplitude)
    return _cos_sum(p, s.freqs, process.phases, amps)


def evaluate6(process: DualMobilityProcess, pairs) -> np.ndarray:
    """Values for (transmitter, receiver) position pairs given as rows of 6.

    Evaluated as a single sum over the transmitter and receiver sinusoids
    with their 6-D block-sparse frequency vectors and amplitudes divided by
    ``sqrt(2)``.
    """
    p = _as_points(pairs, 6)
    return _cos_sum(p, process.freq_matrix(), process.phases, process.amplitudes())


def acf_of(sinusoids: SinusoidSet, displacement) -> np.ndarray | float:
    """Approximate ACF ``sum_n (a_n**2 / 2) cos(2 pi f_n . delta)``.

    ``displacement`` is one 3-vector or an array of shape (M, 3).
    """
    delta = np.asarray(displacement, dtype=float)
    phase = 2.0 * math.pi * (delta @ sinusoids.freqs.T)
    return (np.cos(phase).sum(axis=-1) / sinusoids.n_sinusoids)[()]


def acf6_of(process: DualMobilityProcess, tx_displacement, rx_displacement) -> np.ndarray | float:
    """Correlation of the dual-mobility process for joint displacements."""
    delta = np.concatenate(
        np.broadcast_arrays(np.asarray(tx_displacement, dtype=float), np.asarray(rx_displacement, dtype=float)), axis=-1
    )
    amps = process.amplitudes()
    phase = 2.0 * math.pi * (delta @ process.freq_matrix().T)
    return (np.cos(phase) @ (amps**2 / 2.0))[()]


def rescale(sinusoids: SinusoidSet, new_decorr_distance: float) -> SinusoidSet:
    """Stretch the process to a new decorrelation distance without refitting."""
    if not new_decorr_distance > 0:
        raise ValueError(f"decorrelation distance must be positive, got {new_decorr_distance!r}")
    factor = sinusoids.decorr_distance / new_decorr_distance
    if factor == 1.0:
        return sinusoids
    return replace(
        sinusoids,
        freqs=sinusoids.freqs * factor,
        d_max=sinusoids.d_max / factor,
        decorr_distance=float(new_decorr_distance),
    )


def to_uniform(values) -> np.ndarray | float:
    """Map standard-normal values to (0, 1) with ``0.5 * erfc(-k / sqrt(2))``."""
    return (0.5 * erfc(-np.asarray(values, dtype=float) / math.sqrt(2.0)))[()]
