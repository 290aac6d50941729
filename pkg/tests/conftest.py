import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pcmsched.io import synthetic_weather
from pcmsched.mdp import Scenario, Tariff
from pcmsched.thermal import BuildingThermalParams

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_scenario(horizon=24, mode="cooling", season=None, seed=0, **kw):
    season = season or ("summer" if mode == "cooling" else "winter")
    weather = synthetic_weather(season, horizon + 1, seed=seed)
    return Scenario(weather=tuple(weather), horizon_hours=horizon, mode=mode, **kw)


@pytest.fixture
def params():
    return BuildingThermalParams()


@pytest.fixture
def flat_tariff():
    return Tariff.flat(20.0)


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        if not ok and not self.detail:
            self.detail = str(exc).splitlines()[0] if str(exc) else exc_type.__name__
        ACCEPTANCE[self.number] = (self.title, ok, self.detail)
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one pass/fail line for the summary."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n} {'PASS' if ok else 'FAIL'}  {title}"
                                    + (f"  [{detail}]" if detail else ""))
