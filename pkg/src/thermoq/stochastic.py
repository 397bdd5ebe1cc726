"""Seeded Monte Carlo oracles for the closed-form envelopes.

Randomness is organised in streams: ``(master_seed, stream_index, batch)``
seeds a Philox counter generator, so every fixed-size shot batch owns an
independent, reproducible stream regardless of how batches are scheduled.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

__all__ = [
    "JumpTrajectory",
    "McEstimate",
    "RngSeed",
    "Statistics",
    "TrajectoryBatch",
    "mc_autocovariance",
    "mc_coherence_envelope",
    "mc_qubit_only_envelope",
    "qubit_only_characteristic_exact",
    "sample_bose_einstein",
    "simulate_thermal_batch",
    "simulate_thermal_trajectory",
]

BATCH_SIZE = 1 << 14
MIN_SHOTS = 100
MAX_JUMPS = 10**7
_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngSeed:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not (0 <= v <= _U64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self, batch: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, batch))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error.

    For complex means ``std_error`` is the rms spread ``sqrt(E|z - m|^2 / N)``;
    ``amplitude_error`` and ``phase_error`` split it into the components
    along and across the mean (the latter converted to radians).
    """

    mean: complex | float
    std_error: float
    shots: int
    amplitude_error: float | None = None
    phase_error: float | None = None

    @property
    def amplitude(self) -> float:
        return abs(self.mean)

    @property
    def phase(self) -> float:
        """Accumulated phase Phi for a mean of the form ``|m| e^{-i Phi}``."""
        return -math.atan2(complex(self.mean).imag, complex(self.mean).real)


class Statistics(str, enum.Enum):
    DISCRETE_THERMAL = "discrete_thermal"
    GAUSSIAN = "gaussian"


def _check_shots(shots: int) -> None:
    if shots < MIN_SHOTS:
        raise ValueError(f"need at least {MIN_SHOTS} shots, got {shots}")


def _batch_sizes(shots: int) -> list[int]:
    full, rest = divmod(shots, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


def _run_batches(fn: Callable[[int, int], np.ndarray], shots: int, workers: int) -> list[np.ndarray]:
    """Evaluate ``fn(batch_index, size)`` for every batch, results in batch order."""
    sizes = _batch_sizes(shots)
    if workers <= 1 or len(sizes) == 1:
        return [fn(b, n) for b, n in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def _real_estimate(chunks: Sequence[np.ndarray]) -> McEstimate:
    shots = sum(len(c) for c in chunks)
    mean = math.fsum(math.fsum(c) for c in chunks) / shots
    ss = math.fsum(math.fsum((c - mean) ** 2) for c in chunks)
    var = ss / (shots - 1)
    return McEstimate(mean, math.sqrt(var / shots), shots)


def _complex_estimate(chunks: Sequence[np.ndarray]) -> McEstimate:
    shots = sum(len(c) for c in chunks)
    re = math.fsum(math.fsum(c.real) for c in chunks) / shots
    im = math.fsum(math.fsum(c.imag) for c in chunks) / shots
    mean = complex(re, im)
    amp = abs(mean)
    u = mean / amp if amp > 0 else 1.0 + 0j
    # components of each sample along and across the mean direction
    par = [((c - mean) * u.conjugate()).real for c in chunks]
    perp = [((c - mean) * u.conjugate()).imag for c in chunks]
    var_par = math.fsum(math.fsum(p * p) for p in par) / (shots - 1)
    var_perp = math.fsum(math.fsum(p * p) for p in perp) / (shots - 1)
    amp_err = math.sqrt(var_par / shots)
    perp_err = math.sqrt(var_perp / shots)
    phase_err = perp_err / amp if amp > 0 else math.inf
    return McEstimate(mean, math.sqrt((var_par + var_perp) / shots), shots, amp_err, phase_err)


def _geometric(rng: np.random.Generator, n_bar: float, size) -> np.ndarray:
    if n_bar == 0.0:
        return np.zeros(size, dtype=np.int64)
    u = 1.0 - rng.random(size)  # in (0, 1]
    # P(n >= k) = q^k with q = n/(1+n)
    log_q = -math.log1p(1.0 / n_bar)
    return np.floor(np.log(u) / log_q).astype(np.int64)


def sample_bose_einstein(n_bar: float, seed: RngSeed, size: int | None = None, batch: int = 0):
    """Bose-Einstein photon numbers by inverse CDF; a scalar when ``size`` is None."""
    if n_bar < 0:
        raise ValueError("occupancy must be nonnegative")
    rng = seed.generator(batch)
    draws = _geometric(rng, n_bar, 1 if size is None else size)
    return int(draws[0]) if size is None else draws


def mc_coherence_envelope(
    alpha: float,
    lambda_: float,
    tau: float,
    n_bar: float,
    shots: int,
    seed: RngSeed,
    statistics: Statistics | str = Statistics.DISCRETE_THERMAL,
    workers: int = 1,
) -> McEstimate:
    """Ensemble average of the coherent-state overlap ``exp(-2 a^2 (1 - cos phi))``.

    ``discrete_thermal`` draws ``phi = lambda tau n`` with n Bose-Einstein;
    ``gaussian`` draws ``phi ~ N(0, (lambda tau)^2 n(n+1))``.
    """
    _check_shots(shots)
    statistics = Statistics(statistics)
    lt = lambda_ * tau
    z = 2.0 * alpha * alpha
    sigma = abs(lt) * math.sqrt(n_bar * (n_bar + 1.0))

    def batch(b: int, size: int) -> np.ndarray:
        rng = seed.generator(b)
        if statistics is Statistics.DISCRETE_THERMAL:
            phi = lt * _geometric(rng, n_bar, size)
        else:
            phi = sigma * rng.standard_normal(size)
        return np.exp(-z * (1.0 - np.cos(phi)))

    return _real_estimate(_run_batches(batch, shots, workers))


@dataclass(frozen=True)
class JumpTrajectory:
    """Photon number ``photon_numbers[i]`` holds from ``times[i]`` to the next time (or tau)."""

    times: np.ndarray
    photon_numbers: np.ndarray
    tau: float

    def __post_init__(self) -> None:
        if len(self.times) != len(self.photon_numbers) or len(self.times) == 0:
            raise ValueError("times and photon_numbers must be nonempty and aligned")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if self.times[0] < 0 or self.times[-1] > self.tau:
            raise ValueError("jump times outside [0, tau]")
        if np.any(self.photon_numbers < 0):
            raise ValueError("photon numbers must be nonnegative")

    def integral(self) -> float:
        """Exact integral of n(t) over [0, tau]."""
        widths = np.diff(np.append(self.times, self.tau))
        return math.fsum(widths * self.photon_numbers)

    def value_at(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return int(self.photon_numbers[max(i, 0)])


def simulate_thermal_trajectory(n_bar: float, kappa: float, tau: float, seed: RngSeed, batch: int = 0) -> JumpTrajectory:
    """Event-driven birth-death chain with a stationary geometric start.

    From photon number n the chain steps up at ``kappa n_bar (n+1)`` and
    down at ``kappa (n_bar+1) n``.
    """
    if not kappa > 0 or not tau > 0:
        raise ValueError("kappa and tau must be positive")
    if n_bar < 0:
        raise ValueError("occupancy must be nonnegative")
    rng = seed.generator(batch)
    n = int(_geometric(rng, n_bar, 1)[0])
    times, numbers = [0.0], [n]
    t = 0.0
    while True:
        up = kappa * n_bar * (n + 1)
        down = kappa * (n_bar + 1.0) * n
        total = up + down
        if total == 0.0:
            break
        t += rng.exponential(1.0 / total)
        if t >= tau:
            break
        n += 1 if rng.random() * total < up else -1
        times.append(t)
        numbers.append(n)
        if len(times) > MAX_JUMPS:
            raise RuntimeError(f"trajectory exceeded {MAX_JUMPS} jumps; reduce kappa*tau")
    return JumpTrajectory(np.array(times), np.array(numbers, dtype=np.int64), tau)


@dataclass(frozen=True)
class TrajectoryBatch:
    integrals: np.ndarray
    samples: np.ndarray  # shape (len(sample_times), size)
    jumps: np.ndarray


def simulate_thermal_batch(
    n_bar: float,
    kappa: float,
    tau: float,
    size: int,
    rng: np.random.Generator,
    sample_times: Sequence[float] = (),
) -> TrajectoryBatch:
    """Many independent birth-death trajectories advanced in lockstep.

    Returns, per trajectory, the exact integral of n(t) over [0, tau], the
    photon number at each of ``sample_times`` and the jump count.  With
    ``kappa == 0`` the photon number is frozen at its initial draw.
    """
    if kappa < 0 or tau < 0 or n_bar < 0:
        raise ValueError("kappa, tau and n_bar must be nonnegative")
    s_times = np.asarray(sample_times, dtype=float)
    if s_times.size and (np.any(s_times < 0) or np.any(s_times >= tau)):
        raise ValueError("sample times must lie in [0, tau)")
    integral = np.zeros(size)
    jumps = np.zeros(size, dtype=np.int64)
    samples = np.zeros((s_times.size, size), dtype=np.int64)
    # state of the still-running trajectories, compacted as they finish
    idx = np.arange(size)
    n = _geometric(rng, n_bar, size).astype(float)
    t = np.zeros(size)
    acc = np.zeros(size)
    up_c, down_c = kappa * n_bar, kappa * (n_bar + 1.0)
    k = 0
    while idx.size:
        up = up_c * (n + 1.0)
        total = up + down_c * n
        with np.errstate(divide="ignore"):
            t_next = t + rng.standard_exponential(idx.size) / total
        u = rng.random(idx.size)
        t1 = np.minimum(t_next, tau)
        acc += n * (t1 - t)
        for j, s in enumerate(s_times):
            hit = (t <= s) & (s < t1)
            if hit.any():
                samples[j, idx[hit]] = n[hit]
        done = t_next >= tau
        if done.any():
            integral[idx[done]] = acc[done]
            jumps[idx[done]] = k
            keep = ~done
            idx, n, t, acc = idx[keep], n[keep], t1[keep], acc[keep]
            u, up, total = u[keep], up[keep], total[keep]
        else:
            t = t1
        n += np.where(u * total < up, 1.0, -1.0)
        k += 1
        if k > MAX_JUMPS:
            raise RuntimeError(f"trajectory exceeded {MAX_JUMPS} jumps; reduce kappa*tau")
    return TrajectoryBatch(integral, samples, jumps)


def mc_qubit_only_envelope(
    chi_a: float,
    n_bar: float,
    kappa: float,
    tau: float,
    shots: int,
    seed: RngSeed,
    workers: int = 1,
) -> McEstimate:
    """Complex Ramsey coherence ``E[exp(-i 2 chi int n dt)]`` over thermal trajectories."""
    _check_shots(shots)

    def batch(b: int, size: int) -> np.ndarray:
        traj = simulate_thermal_batch(n_bar, kappa, tau, size, seed.generator(b))
        return np.exp(-2j * chi_a * traj.integrals)

    return _complex_estimate(_run_batches(batch, shots, workers))


def mc_autocovariance(
    n_bar: float,
    kappa: float,
    lags: Sequence[float],
    shots: int,
    seed: RngSeed,
    t0: float | None = None,
    workers: int = 1,
) -> list[McEstimate]:
    """Covariance of n(t0) and n(t0 + lag), one estimate per lag.

    The bath mean is known exactly, so each estimate is the sample mean of
    ``(n(t0) - n)(n(t0 + lag) - n)``.
    """
    _check_shots(shots)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if t0 is None:
        t0 = 1.0 / kappa
    times = [t0] + [t0 + lag for lag in lags]
    tau = max(times) * (1.0 + 1e-9) + 1e-300

    def batch(b: int, size: int) -> np.ndarray:
        traj = simulate_thermal_batch(n_bar, kappa, tau, size, seed.generator(b), times)
        return traj.samples.astype(float)

    chunks = _run_batches(batch, shots, workers)
    out = []
    for k in range(1, len(times)):
        prods = [(c[0] - n_bar) * (c[k] - n_bar) for c in chunks]
        out.append(_real_estimate(prods))
    return out


def _occupancy_cutoff(n_bar: float, tail: float = 1e-17) -> int:
    if n_bar == 0.0:
        return 1
    log_q = -math.log1p(1.0 / n_bar)
    return max(8, int(math.ceil(math.log(tail) / log_q)) + 1)


def qubit_only_characteristic_exact(chi_a: float, n_bar: float, kappa: float, tau: float) -> complex:
    """``E[exp(-i 2 chi int_0^tau n dt)]`` for the stationary birth-death chain.

    Feynman-Kac on the truncated chain: ``pi^T expm((Q - i 2 chi diag(n)) tau) 1``
    with Q the generator and pi the geometric stationary law.  No Gaussian
    or cumulant assumption enters, which makes this the reference for the
    closed-form qubit envelope.
    """
    if kappa < 0 or tau < 0 or n_bar < 0:
        raise ValueError("kappa, tau and n_bar must be nonnegative")
    if n_bar == 0.0:
        return 1.0 + 0.0j
    M = _occupancy_cutoff(n_bar)
    k = np.arange(M + 1)
    q = n_bar / (1.0 + n_bar)
    pi = q**k / (1.0 + n_bar)
    up = kappa * n_bar * (k + 1.0)
    up[-1] = 0.0
    down = kappa * (n_bar + 1.0) * k
    Q = np.diag(up[:-1], 1) + np.diag(down[1:], -1) - np.diag(up + down)
    G = (Q - 2j * chi_a * np.diag(k.astype(float))) * tau
    vec = linalg.expm(G) @ np.ones(M + 1)
    return complex(pi @ vec)
