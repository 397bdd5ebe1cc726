"""Coherence envelopes and visibility laws for the three read-out strategies.

Two evaluators of the probe envelope ship side by side.  The closed form
``exp[-2 a^2 (1 - exp(-G))]`` is what every QFI routine uses; the exact
Gaussian phase average is an oracle that quantifies how far the closed form
is from the integral it approximates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

__all__ = [
    "CoherencePoint",
    "ConvergenceError",
    "DephasingParams",
    "coherence_envelope_closed",
    "coherence_envelope_exact",
    "filter_function",
    "mapped_angle",
    "mapping_gain",
    "markovian_dephasing_rate",
    "parasitic_envelope",
    "phase_variance",
    "qubit_only_envelope",
]

BESSEL_TERM_RATIO = 1e-14
QUADRATURE_START_ORDER = 200
QUADRATURE_MAX_ORDER = 12800
QUADRATURE_TOL = 1e-12


class ConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CoherencePoint:
    """Visibility ``amplitude`` in [0, 1] and mean accumulated ``phase`` (rad)."""

    amplitude: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.amplitude <= 1.0):
            raise ValueError(f"amplitude outside [0, 1]: {self.amplitude!r}")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")

    @property
    def complex(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), -math.sin(self.phase))


@dataclass(frozen=True)
class DephasingParams:
    lambda_: float
    tau: float
    chi_a: float = 0.0
    chi_b: float = 0.0
    tau_R: float = 0.0

    def __post_init__(self) -> None:
        if self.tau < 0 or self.tau_R < 0:
            raise ValueError("durations must be nonnegative")


def phase_variance(lambda_: float, tau: float, n_bar: float) -> float:
    """Variance of the cross-Kerr probe phase, ``(lambda tau)^2 n(n+1)``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if n_bar < 0:
        raise ValueError("occupancy must be nonnegative")
    return (lambda_ * tau) ** 2 * n_bar * (n_bar + 1.0)


def coherence_envelope_closed(alpha: float, gamma_phi: float) -> float:
    if gamma_phi < 0:
        raise ValueError("dephasing strength must be nonnegative")
    return math.exp(2.0 * alpha**2 * math.expm1(-gamma_phi))


def _envelope_bessel(alpha: float, sigma_sq: float) -> float:
    # e^{-z} sum_k I_k(z) e^{-k^2 s/2}, z = 2 alpha^2; ive is the scaled I_k
    z = 2.0 * alpha**2
    total = float(special.ive(0, z))
    k = 1
    while True:
        term = 2.0 * float(special.ive(k, z)) * math.exp(-0.5 * k * k * sigma_sq)
        total += term
        if term <= BESSEL_TERM_RATIO * total:
            break
        k += 1
    return total


@lru_cache(maxsize=16)
def _hermite_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_hermite(order)
    return x, w / math.sqrt(math.pi)


def _envelope_quadrature(alpha: float, sigma_sq: float) -> float:
    sigma = math.sqrt(sigma_sq)
    z = 2.0 * alpha**2

    def rule(order: int) -> float:
        x, w = _hermite_rule(order)
        phi = math.sqrt(2.0) * sigma * x
        return float(np.dot(w, np.exp(z * (np.cos(phi) - 1.0))))

    order = QUADRATURE_START_ORDER
    prev = rule(order)
    while order < QUADRATURE_MAX_ORDER:
        order *= 2
        cur = rule(order)
        if abs(cur - prev) <= QUADRATURE_TOL:
            return cur
        prev = cur
    raise ConvergenceError(
        f"Gauss-Hermite average not converged at order {order} (sigma^2={sigma_sq})"
    )


def coherence_envelope_exact(alpha: float, sigma_sq: float, method: str = "bessel") -> float:
    """Exact Gaussian phase average of ``|<alpha|alpha e^{i phi}>|^2``.

    ``method="bessel"`` sums the modified-Bessel expansion; ``"quadrature"``
    uses Gauss-Hermite nodes, doubling the order from 200 until successive
    results agree to 1e-12.  Quadrature is only practical up to sigma^2 of a
    few tens.
    """
    if sigma_sq < 0:
        raise ValueError("phase variance must be nonnegative")
    if sigma_sq == 0.0 or alpha == 0.0:
        return 1.0
    if method == "bessel":
        value = _envelope_bessel(alpha, sigma_sq)
    elif method == "quadrature":
        value = _envelope_quadrature(alpha, sigma_sq)
    else:
        raise ValueError(f"unknown method {method!r}")
    return min(1.0, max(0.0, value))


def filter_function(kappa: float, tau: float) -> float:
    """``(kappa tau - 1 + exp(-kappa tau)) / kappa^2`` with its kappa -> 0 limit."""
    if kappa < 0 or tau < 0:
        raise ValueError("kappa and tau must be nonnegative")
    if kappa == 0.0:
        return 0.5 * tau * tau
    x = kappa * tau
    if x < 1e-3:
        return tau * tau * (0.5 - x / 6.0 + x * x / 24.0 - x**3 / 120.0 + x**4 / 720.0)
    return (x + math.expm1(-x)) / (kappa * kappa)


def qubit_only_envelope(chi_a: float, n_bar: float, kappa_a: float, tau: float) -> CoherencePoint:
    """Ramsey envelope of a qubit dispersively coupled to the thermal mode."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    gamma = (2.0 * chi_a) ** 2 * n_bar * (n_bar + 1.0) * filter_function(kappa_a, tau)
    return CoherencePoint(math.exp(-gamma), 2.0 * chi_a * n_bar * tau)


def qubit_only_decay(chi_a: float, n_bar: float, kappa_a: float, tau: float) -> float:
    """Exponent ``Gamma_q`` of :func:`qubit_only_envelope`."""
    return (2.0 * chi_a) ** 2 * n_bar * (n_bar + 1.0) * filter_function(kappa_a, tau)


def parasitic_envelope(chi_m: float, var_n: float, kappa_m: float, tau_R: float) -> float:
    """Ramsey visibility lost to a residual dispersive coupling during readout."""
    if tau_R < 0 or var_n < 0:
        raise ValueError("tau_R and var_n must be nonnegative")
    return math.exp(-4.0 * chi_m**2 * var_n * filter_function(kappa_m, tau_R))


def markovian_dephasing_rate(chi_a: float, var_n: float, kappa_a: float) -> float:
    if not kappa_a > 0:
        raise ValueError("Markovian rate needs kappa_a > 0")
    return 4.0 * chi_a**2 * var_n / kappa_a


def mapping_gain(beta: float, chi_b: float, tau_s: float) -> float:
    """Quadrature-to-phase gain of the echoed LO mapping window."""
    if beta < 0 or chi_b < 0 or tau_s < 0:
        raise ValueError("mapping-window parameters must be nonnegative")
    return 2.0 * abs(beta) * chi_b * tau_s


def mapped_angle(g_m: float, alpha: float, phi_b: float, theta: float) -> float:
    return g_m * 2.0 * alpha * math.cos(phi_b - theta)
