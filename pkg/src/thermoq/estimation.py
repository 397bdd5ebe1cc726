"""Quantum Fisher information for temperature, per strategy.

All QFI values are per shot; the repetition count ``nu`` only enters through
:func:`sensitivity`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import mpmath

from .envelopes import (
    CoherencePoint,
    coherence_envelope_closed,
    filter_function,
    phase_variance,
)
from .physics import CONSTANTS, ThermalModeSpec

__all__ = [
    "ProtocolParams",
    "QfiResult",
    "Strategy",
    "TauOptimum",
    "bloch_qfi",
    "finite_difference_qfi",
    "fisher_rate",
    "optimal_tau",
    "qfi_coherence",
    "qfi_coherence_weak",
    "qfi_phase",
    "qfi_phase_pure_state",
    "qfi_qubit_only",
    "sensitivity",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Strategy(str, enum.Enum):
    COHERENCE_MEDIATED = "coherence_mediated"
    PHASE_SHIFT = "phase_shift"
    QUBIT_ONLY = "qubit_only"


@dataclass(frozen=True)
class ProtocolParams:
    """Interaction parameters shared by the strategies.

    ``lambda_`` is the cross-Kerr rate and ``chi_a`` the qubit-thermal
    dispersive shift, both in rad/s.
    """

    lambda_: float = 0.0
    tau: float = 0.0
    nu: int = 1
    tau_oh: float = 0.0
    alpha: float = 0.0
    chi_a: float = 0.0

    def __post_init__(self) -> None:
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.tau < 0 or self.tau_oh < 0:
            raise ValueError("tau and tau_oh must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    def with_tau(self, tau: float) -> "ProtocolParams":
        return ProtocolParams(self.lambda_, tau, self.nu, self.tau_oh, self.alpha, self.chi_a)


@dataclass(frozen=True)
class QfiResult:
    qfi: float
    sensitivity: float
    nu: int
    strategy: Strategy
    tau: float | None = None
    tau_opt: float | None = None
    coherence: CoherencePoint | None = None


def sensitivity(F: float, nu: int) -> float:
    """Cramer-Rao temperature resolution ``1/sqrt(nu F)``; inf when F == 0."""
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if F < 0:
        raise ValueError("Fisher information must be nonnegative")
    if F == 0.0:
        return math.inf
    return 1.0 / math.sqrt(nu * F)


def bloch_qfi(C: float, dC_dT: float, Phi: float, dPhi_dT: float) -> float:
    """QFI of an equatorial qubit state with visibility C and phase Phi.

    At C == 1 the amplitude term is singular; it evaluates to ``inf`` when
    dC != 0 and to 0 when dC == 0.
    """
    if not (0.0 <= C <= 1.0):
        raise ValueError(f"visibility outside [0, 1]: {C!r}")
    phase_term = C * C * dPhi_dT * dPhi_dT
    if dC_dT == 0.0:
        return phase_term
    if C == 1.0:
        return math.inf
    return dC_dT * dC_dT / (1.0 - C * C) + phase_term


def _result(F: float, nu: int, strategy: Strategy, tau: float, point: CoherencePoint) -> QfiResult:
    return QfiResult(F, sensitivity(F, nu), nu, strategy, tau=tau, coherence=point)


def qfi_coherence(thermal: ThermalModeSpec, proto: ProtocolParams) -> QfiResult:
    """Coherence-mediated QFI from the closed-form probe envelope.

    The amplitude term is evaluated as ``dC^2 / -expm1(2 ln C)``, which stays
    accurate as C -> 1; at zero occupancy the analytic limit F = 0 is
    returned.
    """
    n = thermal.n_bar
    lt = proto.lambda_ * proto.tau
    a2 = proto.alpha**2
    gamma = phase_variance(proto.lambda_, proto.tau, n)
    C = coherence_envelope_closed(proto.alpha, gamma)
    point = CoherencePoint(C, 0.0)
    if n == 0.0 or gamma == 0.0 or a2 == 0.0:
        return _result(0.0, proto.nu, Strategy.COHERENCE_MEDIATED, proto.tau, point)
    dgamma = lt * lt * (1.0 + 2.0 * n) * thermal.dn_dT()
    dC = -C * 2.0 * a2 * math.exp(-gamma) * dgamma
    log_c = 2.0 * a2 * math.expm1(-gamma)
    one_minus_c2 = -math.expm1(2.0 * log_c)
    F = dC * dC / one_minus_c2
    return _result(F, proto.nu, Strategy.COHERENCE_MEDIATED, proto.tau, point)


def qfi_coherence_weak(thermal: ThermalModeSpec, proto: ProtocolParams) -> float:
    """Weak-dephasing approximation ``alpha^2 (lambda tau)^2 n (hbar w / k T^2)^2``."""
    T = thermal.T
    if T == 0.0:
        return 0.0
    slope = CONSTANTS.hbar * thermal.omega_a / (CONSTANTS.k_B * T * T)
    return proto.alpha**2 * (proto.lambda_ * proto.tau) ** 2 * thermal.n_bar * slope**2


def qfi_phase(thermal: ThermalModeSpec, lambda_: float, tau: float, nu: int = 1) -> QfiResult:
    """Phase-tracking QFI in the single-photon normalisation, ``(lambda tau dn/dT)^2``."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    dphi = lambda_ * tau * thermal.dn_dT()
    F = dphi * dphi
    point = CoherencePoint(1.0, lambda_ * tau * thermal.n_bar)
    return _result(F, nu, Strategy.PHASE_SHIFT, tau, point)


def qfi_phase_pure_state(alpha: float, dphi_dT: float) -> float:
    """QFI of a coherent state ``|alpha e^{i phi(T)}>``: ``4 alpha^2 (dphi/dT)^2``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return 4.0 * alpha * alpha * dphi_dT * dphi_dT


def qfi_qubit_only(thermal: ThermalModeSpec, chi_a: float, tau: float, nu: int = 1) -> QfiResult:
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    n = thermal.n_bar
    dn = thermal.dn_dT()
    f = filter_function(thermal.kappa_a, tau)
    gamma = (2.0 * chi_a) ** 2 * n * (n + 1.0) * f
    point = CoherencePoint(math.exp(-gamma), 2.0 * chi_a * n * tau)
    dgamma = (2.0 * chi_a) ** 2 * f * (1.0 + 2.0 * n) * dn
    if dgamma == 0.0:
        amp_term = 0.0
    elif gamma == 0.0:
        amp_term = math.inf
    elif gamma < 1e-8:
        amp_term = dgamma * dgamma / (2.0 * gamma) * (1.0 - gamma)
    else:
        amp_term = dgamma * dgamma * math.exp(-2.0 * gamma) / -math.expm1(-2.0 * gamma)
    phase_term = math.exp(-2.0 * gamma) * (2.0 * chi_a * tau * dn) ** 2
    F = amp_term + phase_term
    return _result(F, nu, Strategy.QUBIT_ONLY, tau, point)


def strategy_qfi(strategy: Strategy | str, thermal: ThermalModeSpec, params: ProtocolParams, tau: float) -> QfiResult:
    strategy = Strategy(strategy)
    if strategy is Strategy.COHERENCE_MEDIATED:
        return qfi_coherence(thermal, params.with_tau(tau))
    if strategy is Strategy.PHASE_SHIFT:
        return qfi_phase(thermal, params.lambda_, tau, params.nu)
    return qfi_qubit_only(thermal, params.chi_a, tau, params.nu)


def fisher_rate(F_of_tau: Callable[[float], float], tau: float, tau_oh: float) -> float:
    """Fisher information per unit wall-clock time, ``F(tau)/(tau + tau_oh)``."""
    if tau < 0 or tau_oh < 0:
        raise ValueError("tau and tau_oh must be nonnegative")
    total = tau + tau_oh
    if total == 0.0:
        raise ValueError("total cycle time is zero")
    return F_of_tau(tau) / total


@dataclass(frozen=True)
class TauOptimum:
    tau: float
    objective: float
    at_boundary: bool


def maximize_log_tau(
    objective: Callable[[float], float],
    tau_lo: float,
    tau_hi: float,
    rel_tol: float = 1e-3,
    coarse_points: int = 65,
) -> TauOptimum:
    """Maximise ``objective`` over ``[tau_lo, tau_hi]`` in log tau.

    A coarse log grid picks the bracketing cell, golden-section search then
    refines it until the bracket is narrower than ``rel_tol`` in tau.
    """
    if not (0 < tau_lo < tau_hi):
        raise ValueError("need 0 < tau_lo < tau_hi")
    u_lo, u_hi = math.log(tau_lo), math.log(tau_hi)
    step = (u_hi - u_lo) / (coarse_points - 1)
    grid = [u_lo + i * step for i in range(coarse_points)]
    values = [objective(math.exp(u)) for u in grid]
    best = max(range(coarse_points), key=lambda i: values[i])
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, coarse_points - 1)]

    f = lambda u: objective(math.exp(u))  # noqa: E731
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    tol = math.log1p(rel_tol)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    u_best = c if fc >= fd else d
    f_best = max(fc, fd)
    # an interior cell can never beat the coarse endpoint value on a monotone objective
    for i in (0, coarse_points - 1):
        if values[i] > f_best:
            u_best, f_best = grid[i], values[i]
    at_boundary = abs(u_best - u_lo) <= tol or abs(u_best - u_hi) <= tol
    tau = min(max(math.exp(u_best), tau_lo), tau_hi)
    return TauOptimum(tau, f_best, at_boundary)


def optimal_tau(
    strategy: Strategy | str,
    thermal: ThermalModeSpec,
    params: ProtocolParams,
    bracket: tuple[float, float],
    tau_oh: float | None = None,
) -> TauOptimum:
    """Interaction time maximising the QFI (or the Fisher rate if ``tau_oh`` is given).

    ``at_boundary`` is set when the maximum sits on a bracket endpoint, i.e.
    the objective is monotone over the bracket.
    """
    strategy = Strategy(strategy)

    def qfi(tau: float) -> float:
        return strategy_qfi(strategy, thermal, params, tau).qfi

    if tau_oh is None:
        objective = qfi
    else:
        objective = lambda tau: fisher_rate(qfi, tau, tau_oh)  # noqa: E731
    return maximize_log_tau(objective, bracket[0], bracket[1])


# -- finite-difference oracle ------------------------------------------------
#
# The envelopes are re-evaluated from scratch in 50-digit arithmetic so that
# the central difference stays accurate where C saturates and dC is far
# below double-precision resolution of C itself.

_FD_DPS = 50
_FD_MAX_EXTRA_DPS = 400


def _mp_occupancy(omega, T):
    x = mpmath.mpf(CONSTANTS.hbar) * omega / (mpmath.mpf(CONSTANTS.k_B) * T)
    return 1 / mpmath.expm1(x)


def _mp_envelope(strategy: Strategy, thermal: ThermalModeSpec, params: ProtocolParams, tau, T):
    omega = mpmath.mpf(thermal.omega_a)
    n = _mp_occupancy(omega, T)
    if strategy is Strategy.COHERENCE_MEDIATED:
        gamma = (mpmath.mpf(params.lambda_) * tau) ** 2 * n * (n + 1)
        C = mpmath.exp(-2 * mpmath.mpf(params.alpha) ** 2 * (1 - mpmath.exp(-gamma)))
        return C, mpmath.mpf(0)
    if strategy is Strategy.PHASE_SHIFT:
        return mpmath.mpf(1), mpmath.mpf(params.lambda_) * tau * n
    kappa = mpmath.mpf(thermal.kappa_a)
    if kappa == 0:
        f = tau * tau / 2
    else:
        f = (kappa * tau - 1 + mpmath.exp(-kappa * tau)) / kappa**2
    chi = mpmath.mpf(params.chi_a)
    gamma = (2 * chi) ** 2 * n * (n + 1) * f
    return mpmath.exp(-gamma), 2 * chi * n * tau


def finite_difference_qfi(
    strategy: Strategy | str,
    thermal: ThermalModeSpec,
    params: ProtocolParams,
    rel_step: float = 1e-6,
) -> float:
    """Independent QFI oracle: central differences of C(T) and Phi(T) fed to :func:`bloch_qfi`.

    Evaluated at ``params.tau``.  Test and validation use only.
    """
    if not (0 < rel_step <= 1e-3):
        raise ValueError("rel_step must lie in (0, 1e-3]")
    strategy = Strategy(strategy)
    T0 = thermal.T
    if T0 == 0.0:
        return 0.0
    dps = _FD_DPS
    if strategy is Strategy.COHERENCE_MEDIATED:
        # C saturates at exp(-2 alpha^2) and its T dependence shrinks like
        # exp(-Gamma): carry enough digits that the difference survives
        gamma = phase_variance(params.lambda_, params.tau, thermal.n_bar)
        dps += min(int(gamma / math.log(10.0)), _FD_MAX_EXTRA_DPS)
    with mpmath.workdps(dps):
        T = mpmath.mpf(T0)
        h = T * mpmath.mpf(rel_step)
        tau = mpmath.mpf(params.tau)
        C0, P0 = _mp_envelope(strategy, thermal, params, tau, T)
        Cp, Pp = _mp_envelope(strategy, thermal, params, tau, T + h)
        Cm, Pm = _mp_envelope(strategy, thermal, params, tau, T - h)
        dC = (Cp - Cm) / (2 * h)
        dP = (Pp - Pm) / (2 * h)
        if dC != 0 and C0 < 1:
            # keep 1 - C^2 in extended precision; float(C0) may round to 1
            amp = dC * dC / (1 - C0 * C0)
            return float(amp + C0 * C0 * dP * dP)
        return bloch_qfi(float(C0), float(dC), float(P0), float(dP))
