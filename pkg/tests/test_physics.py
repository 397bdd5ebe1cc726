import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermoq.physics import (
    CONSTANTS,
    ProbeSpec,
    ThermalModeSpec,
    displaced_thermal_variance,
    hz_to_rad,
    occupancy,
    occupancy_derivative,
    rad_to_hz,
    temperature_from_occupancy,
    thermal_variance,
)

# 50-digit mpmath evaluations, frozen: (f_Hz, T_K, n_bar, dn/dT)
MP_ORACLE = [
    (1e9, 0.01, 0.0083043733888619869605, 4.0185674804310164933),
    (1e9, 0.002, 3.7894491701641594136e-11, 4.5466219178324185169e-7),
    (5e9, 0.05, 0.0083043733888619883548, 0.80371349608620337894),
    (1e9, 1.0, 20.340618351800996813, 20.832620227409159686),
]


@pytest.mark.parametrize("f, T, n_ref, dn_ref", MP_ORACLE)
def test_occupancy_matches_high_precision(f, T, n_ref, dn_ref):
    w = hz_to_rad(f)
    assert occupancy(w, T) == pytest.approx(n_ref, rel=1e-13)
    assert occupancy_derivative(w, T) == pytest.approx(dn_ref, rel=1e-12)


def test_sensing_point_reduced_energy():
    x = CONSTANTS.hbar * hz_to_rad(1e9) / (CONSTANTS.k_B * 0.01)
    assert x == pytest.approx(4.799243, rel=1e-6)


def test_occupancy_underflow_returns_zero():
    w = hz_to_rad(1e9)
    T = CONSTANTS.hbar * w / (CONSTANTS.k_B * 750.0)
    assert occupancy(w, T) == 0.0
    assert occupancy_derivative(w, T) == 0.0


@pytest.mark.parametrize("omega, T", [(0.0, 0.01), (-1.0, 0.01), (1.0, 0.0), (1.0, -1.0)])
def test_occupancy_domain_errors(omega, T):
    with pytest.raises(ValueError):
        occupancy(omega, T)
    with pytest.raises(ValueError):
        occupancy_derivative(omega, T)


def test_high_temperature_is_classical():
    w = hz_to_rad(1e9)
    T = 100.0
    kT_over_hw = CONSTANTS.k_B * T / (CONSTANTS.hbar * w)
    assert occupancy(w, T) == pytest.approx(kT_over_hw - 0.5, rel=1e-6)


@given(st.floats(1e-3, 10.0), st.floats(1e8, 2e10))
def test_temperature_inverts_occupancy(T, f):
    w = hz_to_rad(f)
    n = occupancy(w, T)
    if n > 1e-250:
        assert temperature_from_occupancy(w, n) == pytest.approx(T, rel=1e-11)


@given(st.floats(1e-3, 10.0), st.floats(1e8, 2e10))
def test_occupancy_increasing_in_T(T, f):
    w = hz_to_rad(f)
    assert occupancy_derivative(w, T) >= 0.0
    assert occupancy(w, 1.01 * T) >= occupancy(w, T)


@given(st.floats(0.0, 1e3))
def test_thermal_variance(n):
    assert thermal_variance(n) == n * (n + 1.0)


def test_displaced_thermal_variance():
    assert displaced_thermal_variance(0.0, 2.0) == 4.0
    assert displaced_thermal_variance(0.5, 0.0) == 0.75
    assert displaced_thermal_variance(0.5, 1.0) == pytest.approx(0.75 + 2.0)
    with pytest.raises(ValueError):
        displaced_thermal_variance(-1.0, 1.0)


def test_unit_helpers_round_trip():
    assert rad_to_hz(hz_to_rad(123.456)) == pytest.approx(123.456, rel=1e-15)
    assert hz_to_rad(1.0) == 2.0 * math.pi


class TestThermalModeSpec:
    def test_from_temperature(self, sensing_mode):
        assert sensing_mode.n_bar == pytest.approx(MP_ORACLE[0][2], rel=1e-13)
        assert sensing_mode.T == 0.01
        assert sensing_mode.dn_dT() == pytest.approx(MP_ORACLE[0][3], rel=1e-12)

    def test_from_occupancy(self):
        m = ThermalModeSpec.from_hz(1e9, occupancy=MP_ORACLE[0][2])
        assert m.T == pytest.approx(0.01, rel=1e-12)

    def test_zero_occupancy_is_zero_temperature(self):
        m = ThermalModeSpec.from_hz(1e9, occupancy=0.0)
        assert m.T == 0.0
        assert m.dn_dT() == 0.0

    @pytest.mark.parametrize(
        "kw",
        [{}, {"temperature": 0.01, "occupancy": 0.1}, {"temperature": -1.0}, {"occupancy": -0.1}],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ThermalModeSpec(1.0, **kw)

    def test_invalid_frequency_and_linewidth(self):
        with pytest.raises(ValueError):
            ThermalModeSpec(0.0, temperature=1.0)
        with pytest.raises(ValueError):
            ThermalModeSpec(1.0, -1.0, temperature=1.0)

    def test_at_temperature_keeps_mode(self, sensing_mode):
        hot = sensing_mode.at_temperature(0.1)
        assert hot.omega_a == sensing_mode.omega_a
        assert hot.n_bar > sensing_mode.n_bar


def test_probe_spec():
    p = ProbeSpec.from_hz(5e9, 1e3, alpha=2.0)
    assert p.omega_b == hz_to_rad(5e9)
    assert p.number_variance() == 4.0
    with pytest.raises(ValueError):
        ProbeSpec(1.0, alpha=-1.0)
