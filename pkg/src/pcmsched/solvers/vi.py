"""Monolithic backward induction over the full horizon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mdp import GridModel, Scenario, terminal_values
from ..thermal import BuildingThermalParams
from ..trace import PolicyTrace, rollout

PRIMITIVE_ACTIONS = (0.0, 1.0)


@dataclass(frozen=True, eq=False)
class ValueTable:
    """``values[k, s]`` is the optimal cost-to-go from grid state ``s`` at hour ``k``.

    Column ``n_states`` is the absorbing out-of-band state. ``best_action`` has
    one row per decision hour.
    """

    values: np.ndarray
    best_action: np.ndarray
    grid: np.ndarray

    @property
    def horizon(self) -> int:
        return self.best_action.shape[0]


def backup(hour: int, next_values: np.ndarray, model: GridModel):
    """Bellman backup of every grid state at ``hour`` given the row for ``hour + 1``.

    Ties go to the off action.
    """
    r0 = model.row(hour, 0.0)
    r1 = model.row(hour, 1.0)
    q0 = r0.weighted + next_values[r0.next_index]
    q1 = r1.weighted + next_values[r1.next_index]
    best = np.where(q1 < q0, 1.0, 0.0)
    return np.minimum(q0, q1), best


def value_table(model: GridModel) -> ValueTable:
    sc = model.scenario
    K = sc.horizon_hours
    values = np.empty((K + 1, model.n + 1))
    best = np.empty((K, model.n + 1))
    values[K] = terminal_values(sc)
    for k in range(K - 1, -1, -1):
        values[k], best[k] = backup(k, values[k + 1], model)
    return ValueTable(values, best, model.grid)


def trace_from_table(table: ValueTable, model: GridModel, start_index: int) -> PolicyTrace:
    """Forward pass following the stored argmin actions."""
    return rollout(model, start_index, lambda k, s, t, prev: table.best_action[k, s])


def solve(scenario: Scenario, params: BuildingThermalParams, initial_t_in: float = None,
          model: GridModel = None):
    """Solve the whole horizon and trace the optimal policy from ``initial_t_in``.

    Returns ``(ValueTable, PolicyTrace)``. Passing a shared ``model`` reuses its
    memoized transitions.
    """
    model = model or GridModel(scenario, params)
    t0 = scenario.initial_t_in_c if initial_t_in is None else initial_t_in
    s0 = model.start_index(t0)
    table = value_table(model)
    return table, trace_from_table(table, model, s0)
