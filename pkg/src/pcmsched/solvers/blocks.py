"""Multi-timescale solver: the horizon is cut into blocks of ``block_length`` hours.

Each block is solved as its own MDP for every grid start point, enumerating
all 2**L primitive on/off sequences, and the blocks are chained backwards by
looking up the downstream block's value at the exact landing grid index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..exceptions import InvalidArgumentError
from ..mdp import GridModel, Scenario, terminal_values
from ..thermal import BuildingThermalParams
from ..trace import PolicyTrace, rollout


@dataclass(frozen=True, eq=False)
class BlockSolution:
    """Lookup table of one block: entry value and best sequence per start index."""

    index: int
    starts: np.ndarray
    values: np.ndarray
    sequences: np.ndarray

    def lookup(self, start: int):
        pos = np.searchsorted(self.starts, start)
        if pos >= len(self.starts) or self.starts[pos] != start:
            raise KeyError(f"block {self.index} was not solved for start index {start}")
        return self.values[pos], self.sequences[pos]


def solve_block(block_index: int, boundary_values: np.ndarray, model: GridModel,
                starts: Optional[np.ndarray] = None):
    """Solve one block for each start index against ``boundary_values``.

    Every sequence is a leaf of a binary decision tree (child ``2*i + a`` of
    node ``i``), so leaves are in lexicographic order. Node values are reduced
    bottom-up with ties going to the off branch, which selects the
    lexicographically smallest optimal sequence and reproduces per-hour
    backups bit for bit.

    Returns ``(values, sequences)`` with one entry per start.
    """
    sc = model.scenario
    L = sc.block_length
    if len(boundary_values) != model.n + 1:
        raise InvalidArgumentError("boundary values must cover every grid state and out-of-band")
    if starts is None:
        starts = np.arange(model.n + 1)
    starts = np.asarray(starts, dtype=np.int64)
    h0 = block_index * L

    # forward: node states and stage costs at each depth
    states = [starts[:, None]]
    costs = []
    for j in range(L):
        r0 = model.row(h0 + j, 0.0)
        r1 = model.row(h0 + j, 1.0)
        cur = states[-1]
        nxt = np.empty((len(starts), cur.shape[1] * 2), dtype=np.int64)
        nxt[:, 0::2] = r0.next_index[cur]
        nxt[:, 1::2] = r1.next_index[cur]
        costs.append((r0.weighted[cur], r1.weighted[cur]))
        states.append(nxt)

    # backward: min over children, ties to action 0
    value = boundary_values[states[L]]
    choices = [None] * L
    for j in range(L - 1, -1, -1):
        w0, w1 = costs[j]
        q0 = w0 + value[:, 0::2]
        q1 = w1 + value[:, 1::2]
        choices[j] = q1 < q0
        value = np.minimum(q0, q1)

    seqs = np.zeros((len(starts), L))
    node = np.zeros(len(starts), dtype=np.int64)
    rows = np.arange(len(starts))
    for j in range(L):
        a = choices[j][rows, node].astype(np.int64)
        seqs[:, j] = a
        node = 2 * node + a
    return value[:, 0], seqs


@dataclass(frozen=True, eq=False)
class BlockTable:
    blocks: List[BlockSolution]

    def entry_values(self, block_index: int) -> np.ndarray:
        return self.blocks[block_index].values


def block_table(model: GridModel, first_block_starts: Optional[np.ndarray] = None) -> BlockTable:
    """Solve blocks last-to-first.

    Interior blocks are solved for every grid start. The first block is solved
    only for ``first_block_starts`` when given (a fixed initial temperature).
    """
    sc = model.scenario
    if sc.horizon_hours % sc.block_length:
        raise InvalidArgumentError(
            f"horizon {sc.horizon_hours} is not divisible by block length {sc.block_length}")
    M = sc.n_blocks
    every = np.arange(model.n + 1)
    boundary = terminal_values(sc)
    blocks = [None] * M
    for m in range(M - 1, -1, -1):
        starts = every if (m > 0 or first_block_starts is None) else np.sort(first_block_starts)
        vals, seqs = solve_block(m, boundary, model, starts)
        blocks[m] = BlockSolution(m, starts, vals, seqs)
        if m > 0:
            boundary = vals
    return BlockTable(blocks)


def trace_from_blocks(table: BlockTable, model: GridModel, start_index: int) -> PolicyTrace:
    """Concatenate each block's best sequence along the realized state path."""
    L = model.scenario.block_length
    plan = {}

    def policy(k, s, reading, prev):
        if s == model.oob:
            return 0.0
        m, j = divmod(k, L)
        if j == 0:
            plan["seq"] = table.blocks[m].lookup(s)[1]
        return plan["seq"][j]

    return rollout(model, start_index, policy)


def solve(scenario: Scenario, params: BuildingThermalParams, initial_t_in: float = None,
          model: GridModel = None):
    """Solve from a fixed initial temperature; returns ``(BlockTable, PolicyTrace)``."""
    model = model or GridModel(scenario, params)
    t0 = scenario.initial_t_in_c if initial_t_in is None else initial_t_in
    s0 = model.start_index(t0)
    table = block_table(model, first_block_starts=np.array([s0]))
    return table, trace_from_blocks(table, model, s0)
