"""Hour-indexed policy traces and the closed-loop rollout that produces them."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from .exceptions import InvalidArgumentError
from .mdp import GridModel, round_to_grid

COLUMNS = (
    "hour", "action", "state_c", "t_in_c", "t_e_c", "t_out_c",
    "electricity_cents", "discomfort_c", "weighted_cost", "cumulative_cost", "in_band",
)


@dataclass(frozen=True, eq=False)
class PolicyTrace:
    """Per-hour record of a controlled trajectory.

    ``state_c`` is the grid temperature at slot start, ``t_in_c``/``t_e_c`` the
    unrounded slot-end temperatures. ``weighted_cost`` includes the
    out-of-band penalty on the hour the trajectory leaves the band; later hours
    are absorbed and add nothing to the weighted cost, though their physical
    electricity and discomfort are still recorded. ``in_band`` is true when the
    slot ends on a comfort-band grid point.
    """

    hour: np.ndarray
    action: np.ndarray
    state_c: np.ndarray
    t_in_c: np.ndarray
    t_e_c: np.ndarray
    t_out_c: np.ndarray
    electricity_cents: np.ndarray
    discomfort_c: np.ndarray
    weighted_cost: np.ndarray
    cumulative_cost: np.ndarray
    in_band: np.ndarray

    def __post_init__(self):
        n = len(self.hour)
        if n == 0:
            raise InvalidArgumentError("a trace needs at least one hour")
        for f in fields(self):
            if len(getattr(self, f.name)) != n:
                raise InvalidArgumentError(f"column {f.name} has inconsistent length")

    def __len__(self):
        return len(self.hour)

    def __eq__(self, other):
        if not isinstance(other, PolicyTrace):
            return NotImplemented
        return all(np.array_equal(getattr(self, c), getattr(other, c), equal_nan=True)
                   for c in COLUMNS)

    @property
    def total_cost(self) -> float:
        return float(self.cumulative_cost[-1])

    @property
    def total_electricity(self) -> float:
        return float(np.sum(self.electricity_cents))

    @property
    def total_discomfort(self) -> float:
        return float(np.sum(self.discomfort_c))

    @property
    def on_hours(self) -> float:
        return float(np.sum(self.action))

    @property
    def feasible(self) -> bool:
        return bool(np.all(self.in_band))


Policy = Callable[[int, int, float, float], float]


def rollout(model: GridModel, start_index: int, policy: Policy, reading: float = None) -> PolicyTrace:
    """Run ``policy(hour, state_index, reading, previous_action)`` from a grid start.

    ``reading`` is the undiscretized temperature a thermostat would see at slot
    start (the initial temperature, then each previous slot-end value). While
    in band, transitions come from ``model``'s memoized rows; once absorbed the
    trajectory is continued off-grid for the physical columns only.
    """
    sc = model.scenario
    K = sc.horizon_hours
    cols = {c: np.empty(K) for c in COLUMNS}
    cols["in_band"] = np.zeros(K, dtype=bool)
    cols["hour"] = np.arange(K)
    s = int(start_index)
    free_t = None  # rounded temperature after absorption
    reading = float(model.grid[s]) if reading is None else float(reading)
    prev = 0.0
    cum = 0.0
    for k in range(K):
        if s != model.oob:
            a = float(policy(k, s, reading, prev))
            r = model.row(k, a)
            start_t = model.grid[s]
            t_end, e_end = r.t_in_end[s], r.t_e_end[s]
            el, dis, w = r.electricity[s], r.discomfort[s], r.weighted[s]
            nxt = int(r.next_index[s])
            if nxt == model.oob:
                w = w + sc.out_of_band_penalty
                free_t = round_to_grid(t_end, sc.discretization_c)
            cols["in_band"][k] = nxt != model.oob
            s = nxt
        else:
            a = float(policy(k, model.oob, reading, prev))
            start_t = free_t
            t_end, e_end, el, dis = model.free_slot(k, free_t, a)
            w = 0.0
            free_t = round_to_grid(t_end, sc.discretization_c)
        cum += w
        cols["action"][k] = a
        cols["state_c"][k] = start_t
        cols["t_in_c"][k] = t_end
        cols["t_e_c"][k] = e_end
        cols["t_out_c"][k] = sc.weather[k]
        cols["electricity_cents"][k] = el
        cols["discomfort_c"][k] = dis
        cols["weighted_cost"][k] = w
        cols["cumulative_cost"][k] = cum
        reading = float(t_end)
        prev = a
    return PolicyTrace(**cols)


def evaluate_actions(model: GridModel, start_index: int, actions: Sequence[float]) -> PolicyTrace:
    """Open-loop rollout of a fixed action sequence."""
    actions = list(actions)
    if len(actions) != model.scenario.horizon_hours:
        raise InvalidArgumentError(
            f"expected {model.scenario.horizon_hours} actions, got {len(actions)}")
    return rollout(model, start_index, lambda k, s, t, prev: actions[k])

