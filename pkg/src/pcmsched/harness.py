"""Batch runs over start points, timing, and solver comparisons."""

from __future__ import annotations

import time
from statistics import median
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .exceptions import InvalidArgumentError
from .mdp import GridModel, Scenario
from .metrics import ComparisonReport, compare
from .solvers import blocks, deadband, macro, vi
from .thermal import BuildingThermalParams
from .trace import PolicyTrace

SOLVERS = ("exact", "blocks", "macro", "deadband")


def start_points(scenario: Scenario, n: int = 61) -> np.ndarray:
    """``n`` evenly spaced initial temperatures across the comfort band."""
    return np.round(np.linspace(scenario.comfort_low_c, scenario.comfort_high_c, n), 10)


def solve_all(solver: str, scenario: Scenario, params: BuildingThermalParams,
              starts: Sequence[float], model: GridModel = None) -> List[PolicyTrace]:
    """Build the solver's policy once and roll it out from every start."""
    model = model or GridModel(scenario, params)
    idx = [model.start_index(float(t)) for t in starts]
    if solver == "exact":
        table = vi.value_table(model)
        return [vi.trace_from_table(table, model, s) for s in idx]
    if solver == "blocks":
        table = blocks.block_table(model)
        return [blocks.trace_from_blocks(table, model, s) for s in idx]
    if solver == "macro":
        table = macro.macro_table(model)
        return [macro.trace_from_macro(table, model, s) for s in idx]
    if solver == "deadband":
        return [deadband.run_deadband(scenario, params, float(t), model=model) for t in starts]
    raise InvalidArgumentError(f"unknown solver {solver!r}; choose from {SOLVERS}")


def timed(fn: Callable[[], object], repeats: int = 5) -> Tuple[object, float]:
    """Result of the last call and the median wall time over ``repeats`` calls."""
    times, out = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, median(times)


def timed_solve_all(solver, scenario, params, starts, repeats: int = 5):
    """Each repeat starts from an empty transition cache, so no run reuses another's work."""
    return timed(lambda: solve_all(solver, scenario, params, starts), repeats)


def run_comparison(solver_a: str, solver_b: str, scenario: Scenario,
                   params: BuildingThermalParams, n_starts: int = 61,
                   repeats: int = 5) -> Tuple[ComparisonReport, Dict[str, List[PolicyTrace]]]:
    starts = start_points(scenario, n_starts)
    traces_a, time_a = timed_solve_all(solver_a, scenario, params, starts, repeats)
    traces_b, time_b = timed_solve_all(solver_b, scenario, params, starts, repeats)
    report = compare(solver_a, traces_a, solver_b, traces_b, time_a, time_b)
    return report, {solver_a: traces_a, solver_b: traces_b}
