"""Hourly hysteresis relay used as the non-optimizing baseline."""

from __future__ import annotations

from typing import Optional, Tuple

from ..exceptions import InvalidArgumentError
from ..mdp import GridModel, Scenario
from ..thermal import MODES, BuildingThermalParams
from ..trace import PolicyTrace, rollout

DEFAULT_BANDS = {"heating": (20.0, 22.0), "cooling": (22.0, 26.0)}


def relay_action(t_in_c: float, previous: float, mode: str, band: Tuple[float, float]) -> float:
    """Switch only at the band edges; hold the previous state strictly inside."""
    low, high = band
    if mode == "heating":
        if t_in_c < low:
            return 1.0
        if t_in_c > high:
            return 0.0
    elif mode == "cooling":
        if t_in_c > high:
            return 1.0
        if t_in_c < low:
            return 0.0
    else:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    return previous


def run_deadband(scenario: Scenario, params: BuildingThermalParams, initial_t_in: float = None,
                 band: Optional[Tuple[float, float]] = None, model: GridModel = None) -> PolicyTrace:
    """Relay trace under the same hourly transitions and cost as the solvers.

    The relay reads the unrounded temperature at slot start and starts off.
    """
    model = model or GridModel(scenario, params)
    band = band or DEFAULT_BANDS[scenario.mode]
    t0 = scenario.initial_t_in_c if initial_t_in is None else initial_t_in
    s0 = model.start_index(t0)
    return rollout(model, s0,
                   lambda k, s, reading, prev: relay_action(reading, prev, scenario.mode, band),
                   reading=t0)
