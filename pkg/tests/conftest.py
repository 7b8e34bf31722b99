from __future__ import annotations

import pytest

from synthsurvey.domain import DemographicProfile, Persona, SurveySample


def make_profile(**over) -> DemographicProfile:
    base = dict(sex="male", age_band="16-24", income_band=">45000", housing="rent",
                social_class="upper_middle", education="a_level", region="north", work="not_working")
    base.update(over)
    return DemographicProfile(**base)


@pytest.fixture
def example_persona() -> Persona:
    return Persona("P1", make_profile(), 1.0)


@pytest.fixture
def small_sample() -> SurveySample:
    ages = ["16-24", "25-34", "35-44", "45-54", "55-64"]
    personas = tuple(
        Persona(f"R{i:03d}", make_profile(age_band=ages[i % 5], housing=["rent", "council", "outright"][i % 3]),
                0.5 + (i % 4) * 0.25)
        for i in range(40)
    )
    return SurveySample(personas, "small", 99)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
