"""Physical constants, unit helpers and Bose-Einstein occupancy.

Library functions work in angular frequency (rad/s) and kelvin.  Ordinary
frequencies (Hz) are accepted at the edges through the ``from_hz``
constructors and :func:`hz_to_rad`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "CONSTANTS",
    "Constants",
    "ProbeSpec",
    "ThermalModeSpec",
    "displaced_thermal_variance",
    "hz_to_rad",
    "occupancy",
    "occupancy_derivative",
    "rad_to_hz",
    "temperature_from_occupancy",
    "thermal_variance",
]

TWO_PI = 2.0 * math.pi

# exp(x) - 1 overflows shortly after x ~ 709
_EXPONENT_CUTOFF = 700.0


@dataclass(frozen=True)
class Constants:
    """CODATA 2018 values, SI units."""

    hbar: float = 1.054571817e-34
    k_B: float = 1.380649e-23


CONSTANTS = Constants()


def hz_to_rad(f: float) -> float:
    return TWO_PI * f


def rad_to_hz(omega: float) -> float:
    return omega / TWO_PI


def _check_omega_T(omega: float, T: float) -> None:
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega!r}")
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T!r}")


def _reduced_energy(omega: float, T: float) -> float:
    return CONSTANTS.hbar * omega / (CONSTANTS.k_B * T)


def occupancy(omega: float, T: float) -> float:
    """Mean thermal photon number ``1/(exp(hbar*omega/k_B T) - 1)``.

    Returns exactly 0 once the reduced energy exceeds 700 so that deep
    sub-millikelvin grid points never overflow.
    """
    _check_omega_T(omega, T)
    x = _reduced_energy(omega, T)
    if x > _EXPONENT_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)


def occupancy_derivative(omega: float, T: float) -> float:
    """Temperature derivative of :func:`occupancy` in 1/K."""
    _check_omega_T(omega, T)
    x = _reduced_energy(omega, T)
    if x > _EXPONENT_CUTOFF:
        return 0.0
    n = 1.0 / math.expm1(x)
    return (x / T) * n * (n + 1.0)


def thermal_variance(n_bar: float) -> float:
    """Photon-number variance of a thermal state, ``n(n+1)``."""
    if n_bar < 0:
        raise ValueError(f"occupancy must be nonnegative, got {n_bar!r}")
    return n_bar * (n_bar + 1.0)


def displaced_thermal_variance(n_bar_b: float, alpha: float) -> float:
    """Photon-number variance of a displaced thermal state."""
    if n_bar_b < 0 or alpha < 0:
        raise ValueError("occupancy and coherent amplitude must be nonnegative")
    return n_bar_b * (1.0 + n_bar_b) + alpha**2 * (1.0 + 2.0 * n_bar_b)


def temperature_from_occupancy(omega: float, n_bar: float) -> float:
    """Invert :func:`occupancy`: ``T = hbar*omega / (k_B ln(1 + 1/n))``."""
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega!r}")
    if not n_bar > 0:
        raise ValueError(f"occupancy must be positive, got {n_bar!r}")
    return CONSTANTS.hbar * omega / (CONSTANTS.k_B * math.log1p(1.0 / n_bar))


@dataclass(frozen=True)
class ThermalModeSpec:
    """The sensing mode ``a``: frequency, linewidth and bath state.

    Exactly one of ``temperature`` and ``occupancy`` is given; the other is
    derived.  A zero occupancy maps to the T -> 0 limit.
    """

    omega_a: float
    kappa_a: float = 0.0
    temperature: float | None = None
    occupancy: float | None = None
    _n_bar: float = field(init=False, repr=False, compare=False)
    _T: float = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.omega_a > 0:
            raise ValueError("omega_a must be positive")
        if self.kappa_a < 0:
            raise ValueError("kappa_a must be nonnegative")
        if (self.temperature is None) == (self.occupancy is None):
            raise ValueError("give exactly one of temperature or occupancy")
        if self.temperature is not None:
            if not self.temperature > 0:
                raise ValueError("temperature must be positive")
            T = float(self.temperature)
            n = occupancy(self.omega_a, T)
        else:
            n = float(self.occupancy)
            if n < 0:
                raise ValueError("occupancy must be nonnegative")
            T = temperature_from_occupancy(self.omega_a, n) if n > 0 else 0.0
        object.__setattr__(self, "_n_bar", n)
        object.__setattr__(self, "_T", T)

    @classmethod
    def from_hz(cls, f_a: float, kappa_hz: float = 0.0, **kwargs) -> "ThermalModeSpec":
        return cls(hz_to_rad(f_a), hz_to_rad(kappa_hz), **kwargs)

    @property
    def n_bar(self) -> float:
        return self._n_bar

    @property
    def T(self) -> float:
        return self._T

    def dn_dT(self) -> float:
        """Occupancy derivative at the mode temperature (0 at T = 0)."""
        if self._T == 0.0:
            return 0.0
        return occupancy_derivative(self.omega_a, self._T)

    def at_temperature(self, T: float) -> "ThermalModeSpec":
        return ThermalModeSpec(self.omega_a, self.kappa_a, temperature=T)


@dataclass(frozen=True)
class ProbeSpec:
    """Coherent reference mode ``b``.  ``alpha`` is |alpha|; the phase is irrelevant."""

    omega_b: float
    kappa_b: float = 0.0
    alpha: float = 0.0
    residual_occupancy: float = 0.0

    def __post_init__(self) -> None:
        if not self.omega_b > 0:
            raise ValueError("omega_b must be positive")
        if self.kappa_b < 0:
            raise ValueError("kappa_b must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha is a nonnegative amplitude")
        if self.residual_occupancy < 0:
            raise ValueError("residual occupancy must be nonnegative")

    @classmethod
    def from_hz(cls, f_b: float, kappa_hz: float = 0.0, **kwargs) -> "ProbeSpec":
        return cls(hz_to_rad(f_b), hz_to_rad(kappa_hz), **kwargs)

    def number_variance(self) -> float:
        return displaced_thermal_variance(self.residual_occupancy, self.alpha)
