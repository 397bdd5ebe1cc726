import pytest
from hypothesis import settings

from thermoq.physics import ThermalModeSpec, hz_to_rad

settings.register_profile("thermoq", deadline=None, max_examples=60)
settings.load_profile("thermoq")


@pytest.fixture
def sensing_mode() -> ThermalModeSpec:
    """1 GHz mode at 10 mK."""
    return ThermalModeSpec.from_hz(1e9, temperature=0.01)


@pytest.fixture
def lam_fig() -> float:
    return hz_to_rad(5e4)


CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
