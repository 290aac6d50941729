"""Finite-horizon deterministic MDP over the discretized indoor temperature.

The state is the indoor temperature rounded to the comfort grid
{T_1, T_1 + d, ..., T_2}; anything rounding outside the band collapses into a
single absorbing out-of-band marker. Every hour the envelope node is re-seeded
to the grid temperature, which keeps the state Markov in T_in alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import InvalidArgumentError, ScenarioValidationError
from .thermal import MODES, BuildingThermalParams, Mode, ThermalState, integrate

DEFAULT_SETPOINT = {"heating": 20.0, "cooling": 23.0}
DEFAULT_FRACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)
# tolerance (in grid steps) below which a value counts as an exact half-step tie
_TIE_TOL = 1e-9


class _Marker(Enum):
    OUT_OF_BAND = "out_of_band"

    def __repr__(self):
        return "OUT_OF_BAND"


OUT_OF_BAND = _Marker.OUT_OF_BAND


@dataclass(frozen=True)
class Tariff:
    """Daily time-of-use price schedule in cents/kWh.

    ``periods`` is a sequence of ``(start_hour, end_hour, cents)`` covering
    [0, 24) without gaps or overlaps; it repeats every day.
    """

    periods: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        periods = tuple(tuple(float(x) for x in p) for p in self.periods)
        object.__setattr__(self, "periods", periods)
        problems = []
        if not periods:
            problems.append(("tariff", "at least one period required"))
        else:
            ordered = sorted(periods)
            edge = 0.0
            for start, end, cents in ordered:
                if start != edge:
                    kind = "gap" if start > edge else "overlap"
                    problems.append(("tariff", f"{kind} at hour {edge:g}"))
                    break
                if not end > start:
                    problems.append(("tariff", f"empty period starting at {start:g}"))
                    break
                if not (math.isfinite(cents) and cents >= 0):
                    problems.append(("tariff", f"price must be finite and >= 0, got {cents}"))
                    break
                edge = end
            else:
                if edge != 24.0:
                    problems.append(("tariff", f"periods end at {edge:g}, expected 24"))
        if problems:
            raise ScenarioValidationError(problems)

    @classmethod
    def flat(cls, cents: float) -> "Tariff":
        return cls(((0, 24, cents),))

    @classmethod
    def default(cls) -> "Tariff":
        """Illustrative peak/shoulder/off-peak schedule."""
        return cls(((0, 7, 15.0), (7, 14, 25.0), (14, 20, 50.0), (20, 22, 25.0), (22, 24, 15.0)))

    def price(self, hour: int) -> float:
        h = hour % 24
        for start, end, cents in self.periods:
            if start <= h < end:
                return cents
        raise AssertionError("tariff periods validated to cover the day")


@dataclass(frozen=True)
class Scenario:
    weather: Tuple[float, ...]
    horizon_hours: int = 24
    tariff: Tariff = field(default_factory=Tariff.default)
    lam: float = 0.95
    mode: Mode = "cooling"
    setpoint_c: Optional[float] = None
    comfort_low_c: float = 20.0
    comfort_high_c: float = 26.0
    discretization_c: float = 0.1
    block_length: int = 4
    macro_fractions: Tuple[float, ...] = DEFAULT_FRACTIONS
    out_of_band_penalty: float = 1e6
    initial_t_in_c: float = 23.0
    initial_t_e_c: Optional[float] = None
    substeps: int = 60

    def __post_init__(self):
        object.__setattr__(self, "weather", tuple(float(x) for x in self.weather))
        object.__setattr__(self, "macro_fractions", tuple(float(x) for x in self.macro_fractions))
        if self.setpoint_c is None and self.mode in MODES:
            object.__setattr__(self, "setpoint_c", DEFAULT_SETPOINT[self.mode])
        if self.initial_t_e_c is None:
            object.__setattr__(self, "initial_t_e_c", self.initial_t_in_c)
        problems = []
        if self.mode not in MODES:
            problems.append(("mode", f"must be one of {MODES}, got {self.mode!r}"))
        if not self.comfort_low_c < self.comfort_high_c:
            problems.append(("comfort_low_c, comfort_high_c",
                             f"comfort_low_c ({self.comfort_low_c}) must be below "
                             f"comfort_high_c ({self.comfort_high_c})"))
        if not self.discretization_c > 0:
            problems.append(("discretization_c", "must be > 0"))
        elif self.comfort_low_c < self.comfort_high_c:
            steps = (self.comfort_high_c - self.comfort_low_c) / self.discretization_c
            if abs(steps - round(steps)) > 1e-6:
                problems.append(("discretization_c", "comfort band width must be a multiple of it"))
            low = self.comfort_low_c / self.discretization_c
            if abs(low - round(low)) > 1e-6:
                problems.append(("discretization_c", "comfort_low_c must be a multiple of it"))
        if not (isinstance(self.horizon_hours, (int, np.integer)) and self.horizon_hours >= 1):
            problems.append(("horizon_hours", "must be a positive integer"))
        if not (isinstance(self.block_length, (int, np.integer)) and self.block_length >= 1):
            problems.append(("block_length", "must be a positive integer"))
        elif isinstance(self.horizon_hours, (int, np.integer)) and self.horizon_hours % self.block_length:
            problems.append(("horizon_hours",
                             f"{self.horizon_hours} is not divisible by block_length {self.block_length}"))
        if isinstance(self.horizon_hours, (int, np.integer)) and len(self.weather) < self.horizon_hours + 1:
            problems.append(("weather", f"needs at least {self.horizon_hours + 1} hourly values, "
                                        f"got {len(self.weather)}"))
        if not all(math.isfinite(x) for x in self.weather):
            problems.append(("weather", "all temperatures must be finite"))
        if not 0.0 <= self.lam <= 1.0:
            problems.append(("lambda", f"must lie in [0, 1], got {self.lam}"))
        fr = self.macro_fractions
        if any(not 0.0 <= f <= 1.0 for f in fr):
            problems.append(("macro_fractions", "values must lie in [0, 1]"))
        elif list(fr) != sorted(set(fr)):
            problems.append(("macro_fractions", "must be strictly increasing"))
        elif 0.0 not in fr or 1.0 not in fr:
            problems.append(("macro_fractions", "must contain 0 and 1"))
        if not self.out_of_band_penalty > 0:
            problems.append(("out_of_band_penalty", "must be > 0"))
        if not (isinstance(self.substeps, (int, np.integer)) and self.substeps >= 1):
            problems.append(("substeps", "must be a positive integer"))
        for name in ("setpoint_c", "initial_t_in_c", "initial_t_e_c"):
            v = getattr(self, name)
            if v is None or not math.isfinite(v):
                problems.append((name, "must be finite"))
        if problems:
            raise ScenarioValidationError(problems)

    @property
    def n_states(self) -> int:
        return int(round((self.comfort_high_c - self.comfort_low_c) / self.discretization_c)) + 1

    @property
    def n_blocks(self) -> int:
        return self.horizon_hours // self.block_length

    def with_overrides(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class StageCost:
    electricity_cents: float
    discomfort_c: float
    weighted: float

    @classmethod
    def combine(cls, electricity_cents: float, discomfort_c: float, lam: float) -> "StageCost":
        return cls(electricity_cents, discomfort_c, lam * electricity_cents + (1.0 - lam) * discomfort_c)


def _steps(t, d):
    q = np.asarray(t, dtype=float) / d
    return np.sign(q) * np.floor(np.abs(q) + 0.5 + _TIE_TOL)


def round_to_grid(t, d: float):
    """Nearest multiple of ``d``; exact half-steps round away from zero."""
    out = np.round(_steps(t, d) * d, 10)
    return float(out) if np.ndim(out) == 0 else out


def grid_values(scenario: Scenario) -> np.ndarray:
    k_low = round(scenario.comfort_low_c / scenario.discretization_c)
    ks = k_low + np.arange(scenario.n_states)
    return np.round(ks * scenario.discretization_c, 10)


def grid_indices(t, scenario: Scenario) -> np.ndarray:
    """Vectorized discretization: grid index, or ``n_states`` for out-of-band."""
    n = scenario.n_states
    k_low = round(scenario.comfort_low_c / scenario.discretization_c)
    idx = _steps(t, scenario.discretization_c) - k_low
    idx = np.where(np.isfinite(idx), idx, -1)
    return np.where((idx >= 0) & (idx < n), idx, n).astype(np.int64)


def discretize(t_in_c: float, scenario: Scenario):
    """Grid index of ``t_in_c`` or :data:`OUT_OF_BAND`."""
    if not math.isfinite(t_in_c):
        raise InvalidArgumentError(f"temperature must be finite, got {t_in_c!r}")
    i = int(grid_indices(t_in_c, scenario))
    return OUT_OF_BAND if i == scenario.n_states else i


def terminal_values(scenario: Scenario) -> np.ndarray:
    """Values after the last hour: zero in band, the penalty for the out-of-band slot (last entry)."""
    v = np.zeros(scenario.n_states + 1)
    v[-1] = scenario.out_of_band_penalty
    return v


def _slot(scenario: Scenario, params: BuildingThermalParams, t_in, t_e, action, hour: int):
    a, e = integrate(params, t_in, t_e, scenario.weather[hour], action, scenario.mode,
                     1.0, scenario.substeps)
    price = scenario.tariff.price(hour)
    electricity = price * params.hvac_rated_electrical_kw * np.asarray(action, dtype=float)
    discomfort = np.abs(a - scenario.setpoint_c)
    weighted = scenario.lam * electricity + (1.0 - scenario.lam) * discomfort
    return a, e, electricity, discomfort, weighted


def transition(state: ThermalState, action: float, hour: int, scenario: Scenario,
               params: BuildingThermalParams):
    """One hourly MDP step from ``state``.

    The returned state has T_in rounded to the grid and the envelope re-seeded
    to that temperature. Discomfort uses the unrounded slot-end temperature.
    """
    if not 0 <= hour < scenario.horizon_hours:
        raise InvalidArgumentError(f"hour must lie in [0, {scenario.horizon_hours}), got {hour}")
    if not 0.0 <= action <= 1.0:
        raise InvalidArgumentError(f"action must lie in [0, 1], got {action}")
    a, _, el, dis, w = _slot(scenario, params, np.array([state.t_in_c]), np.array([state.t_e_c]),
                             action, hour)
    t_next = round_to_grid(float(a[0]), scenario.discretization_c)
    return ThermalState(t_next, t_next), StageCost(float(el), float(dis[0]), float(w[0]))


class SlotRow(NamedTuple):
    """Transitions of every grid state for one (hour, action); last entry is out-of-band."""

    next_index: np.ndarray
    t_in_end: np.ndarray
    t_e_end: np.ndarray
    electricity: np.ndarray
    discomfort: np.ndarray
    weighted: np.ndarray


class GridModel:
    """Memoized hourly transitions of all grid states.

    Rows are computed on first request, one vectorized integration per
    (hour, action), and reused by every solver sharing this instance.
    """

    def __init__(self, scenario: Scenario, params: BuildingThermalParams):
        self.scenario = scenario
        self.params = params
        self.grid = grid_values(scenario)
        self.n = scenario.n_states
        self.oob = self.n
        self._rows = {}
        self._free = {}
        self.evaluations = 0

    def row(self, hour: int, action: float) -> SlotRow:
        key = (hour, float(action))
        r = self._rows.get(key)
        if r is None:
            r = self._compute(hour, float(action))
            self._rows[key] = r
        return r

    def _compute(self, hour, action):
        sc = self.scenario
        a, e, el, dis, w = _slot(sc, self.params, self.grid, self.grid, action, hour)
        self.evaluations += 1
        nxt = grid_indices(round_to_grid(a, sc.discretization_c), sc)
        pad = lambda x, fill: np.append(np.broadcast_to(x, a.shape), fill)  # noqa: E731
        return SlotRow(
            next_index=np.append(nxt, self.oob),
            t_in_end=pad(a, np.nan),
            t_e_end=pad(e, np.nan),
            electricity=pad(el, 0.0),
            discomfort=pad(dis, 0.0),
            weighted=pad(w, 0.0),
        )

    def free_slot(self, hour: int, t_c: float, action: float):
        """Physical slot from an off-grid (rounded) temperature, memoized.

        Returns ``(t_in_end, t_e_end, electricity, discomfort)``; used to
        continue a trace after it has left the band.
        """
        key = (hour, float(t_c), float(action))
        out = self._free.get(key)
        if out is None:
            t = np.array([float(t_c)])
            a, e, el, dis, _ = _slot(self.scenario, self.params, t, t, float(action), hour)
            out = (float(a[0]), float(e[0]), float(np.asarray(el).reshape(-1)[0]), float(dis[0]))
            self._free[key] = out
        return out

    def start_index(self, t_in_c: float) -> int:
        i = discretize(t_in_c, self.scenario)
        if i is OUT_OF_BAND:
            raise InvalidArgumentError(
                f"initial temperature {t_in_c} is outside the comfort band "
                f"[{self.scenario.comfort_low_c}, {self.scenario.comfort_high_c}]")
        return i
