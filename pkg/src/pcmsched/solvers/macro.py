"""Macro-action block solver.

Phase 1 solves the block chain with one abstract action per block: run the
HVAC at a constant fraction ``phi`` of rated power for all ``L`` hours. Phase 2
walks forward and replaces each chosen ``phi`` by the cheapest primitive on/off
sequence with ``phi * L`` on-hours, scored against the downstream macro value.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import List, Optional

import numpy as np

from ..exceptions import InvalidArgumentError
from ..mdp import (GridModel, Scenario, StageCost, discretize, terminal_values, transition,
                   OUT_OF_BAND)
from ..thermal import BuildingThermalParams, ThermalState
from ..trace import PolicyTrace, rollout


def macro_transition(state: ThermalState, phi: float, block_index: int, scenario: Scenario,
                     params: BuildingThermalParams):
    """Compose ``block_length`` hourly transitions at constant fraction ``phi``.

    Costs are summed hour by hour; returns ``(ThermalState, StageCost)``.
    """
    if phi not in scenario.macro_fractions:
        raise InvalidArgumentError(f"phi={phi} is not one of {scenario.macro_fractions}")
    L = scenario.block_length
    el = dis = w = 0.0
    for j in range(L):
        state, c = transition(state, phi, block_index * L + j, scenario, params)
        el += c.electricity_cents
        dis += c.discomfort_c
        w += c.weighted
    return state, StageCost(el, dis, w)


@lru_cache(maxsize=None)
def equivalence_class(phi: float, block_length: int):
    """All on/off sequences with ``phi * block_length`` on-hours, lexicographically sorted."""
    on = phi * block_length
    if abs(on - round(on)) > 1e-9:
        raise InvalidArgumentError(f"phi={phi} does not give a whole number of on-hours "
                                   f"over {block_length} hours")
    on = int(round(on))
    seqs = []
    for pos in combinations(range(block_length), on):
        s = [0.0] * block_length
        for p in pos:
            s[p] = 1.0
        seqs.append(tuple(s))
    return tuple(sorted(seqs))


def _chain(model: GridModel, h0: int, starts: np.ndarray, actions, downstream: np.ndarray):
    """Right-nested cost of a fixed action sequence plus downstream value; also the landing index."""
    idx = starts
    stage = []
    for j, a in enumerate(actions):
        r = model.row(h0 + j, a)
        stage.append(r.weighted[idx])
        idx = r.next_index[idx]
    total = downstream[idx]
    for w in reversed(stage):
        total = w + total
    return total, idx


@dataclass(frozen=True, eq=False)
class MacroBlock:
    index: int
    starts: np.ndarray
    values: np.ndarray
    best_phi: np.ndarray

    def phi_at(self, start: int) -> float:
        pos = np.searchsorted(self.starts, start)
        if pos >= len(self.starts) or self.starts[pos] != start:
            raise KeyError(f"macro block {self.index} was not solved for start index {start}")
        return float(self.best_phi[pos])


@dataclass(frozen=True, eq=False)
class MacroTable:
    blocks: List[MacroBlock]
    terminal: np.ndarray

    def downstream(self, block_index: int) -> np.ndarray:
        if block_index + 1 < len(self.blocks):
            return self.blocks[block_index + 1].values
        return self.terminal


def solve_macro_block(block_index: int, boundary_values: np.ndarray, model: GridModel,
                      starts: Optional[np.ndarray] = None):
    """Best constant fraction per start; ties go to the smaller fraction."""
    sc = model.scenario
    L = sc.block_length
    if starts is None:
        starts = np.arange(model.n + 1)
    starts = np.asarray(starts, dtype=np.int64)
    best_val = None
    best_phi = None
    for phi in sc.macro_fractions:
        total, _ = _chain(model, block_index * L, starts, [phi] * L, boundary_values)
        if best_val is None:
            best_val, best_phi = total, np.full(len(starts), phi)
        else:
            better = total < best_val
            best_phi = np.where(better, phi, best_phi)
            best_val = np.minimum(best_val, total)
    return best_val, best_phi


def macro_table(model: GridModel, first_block_starts: Optional[np.ndarray] = None) -> MacroTable:
    sc = model.scenario
    M = sc.n_blocks
    every = np.arange(model.n + 1)
    term = terminal_values(sc)
    boundary = term
    blocks = [None] * M
    for m in range(M - 1, -1, -1):
        starts = every if (m > 0 or first_block_starts is None) else np.sort(first_block_starts)
        vals, phis = solve_macro_block(m, boundary, model, starts)
        blocks[m] = MacroBlock(m, starts, vals, phis)
        boundary = vals
    return MacroTable(blocks, term)


def expand_index(phi: float, entry_index: int, block_index: int, model: GridModel,
                 downstream: np.ndarray):
    """Cheapest member of the ``phi`` equivalence class from a grid entry state."""
    members = equivalence_class(phi, model.scenario.block_length)
    h0 = block_index * model.scenario.block_length
    start = np.array([entry_index])
    best, best_total = None, None
    for seq in members:
        total, _ = _chain(model, h0, start, seq, downstream)
        if best_total is None or total[0] < best_total:
            best, best_total = seq, total[0]
    return best


def expand_macro(phi: float, block_entry_state: ThermalState, block_index: int,
                 scenario: Scenario, params: BuildingThermalParams,
                 downstream_values: Optional[np.ndarray] = None, model: GridModel = None):
    """Primitive sequence realizing macro action ``phi`` for one block.

    ``downstream_values`` defaults to the terminal values (a last block).
    """
    if phi not in scenario.macro_fractions:
        raise InvalidArgumentError(f"phi={phi} is not one of {scenario.macro_fractions}")
    model = model or GridModel(scenario, params)
    i = discretize(block_entry_state.t_in_c, scenario)
    if i is OUT_OF_BAND:
        i = model.oob
    if downstream_values is None:
        downstream_values = terminal_values(scenario)
    return expand_index(phi, i, block_index, model, downstream_values)


def trace_from_macro(table: MacroTable, model: GridModel, start_index: int) -> PolicyTrace:
    L = model.scenario.block_length
    plan = {}

    def policy(k, s, reading, prev):
        if s == model.oob:
            return 0.0
        m, j = divmod(k, L)
        if j == 0:
            phi = table.blocks[m].phi_at(s)
            plan["phi"] = phi
            plan["seq"] = expand_index(phi, s, m, model, table.downstream(m))
        return plan["seq"][j]

    return rollout(model, start_index, policy)


def solve(scenario: Scenario, params: BuildingThermalParams, initial_t_in: float = None,
          model: GridModel = None):
    """Both phases from a fixed initial temperature; returns ``(MacroTable, PolicyTrace)``."""
    model = model or GridModel(scenario, params)
    for phi in scenario.macro_fractions:
        equivalence_class(phi, scenario.block_length)
    t0 = scenario.initial_t_in_c if initial_t_in is None else initial_t_in
    s0 = model.start_index(t0)
    table = macro_table(model, first_block_starts=np.array([s0]))
    return table, trace_from_macro(table, model, s0)
