"""Estimator-style wrappers around the solvers.

``fit`` takes an hourly outdoor temperature series and builds the policy
tables; ``predict`` maps initial indoor temperatures to hourly action rows.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .mdp import GridModel, Scenario, Tariff
from .solvers import blocks, deadband, macro, vi
from .thermal import BuildingThermalParams
from .trace import PolicyTrace


class _Scheduler(BaseEstimator):
    def __init__(self, horizon_hours: int = 24, mode: str = "cooling", lam: float = 0.95,
                 setpoint_c: Optional[float] = None, comfort_low_c: float = 20.0,
                 comfort_high_c: float = 26.0, discretization_c: float = 0.1,
                 block_length: int = 4, tariff: Optional[Tariff] = None,
                 building: Optional[BuildingThermalParams] = None, substeps: int = 60):
        self.horizon_hours = horizon_hours
        self.mode = mode
        self.lam = lam
        self.setpoint_c = setpoint_c
        self.comfort_low_c = comfort_low_c
        self.comfort_high_c = comfort_high_c
        self.discretization_c = discretization_c
        self.block_length = block_length
        self.tariff = tariff
        self.building = building
        self.substeps = substeps

    @classmethod
    def from_scenario(cls, scenario: Scenario, building: Optional[BuildingThermalParams] = None):
        return cls(horizon_hours=scenario.horizon_hours, mode=scenario.mode, lam=scenario.lam,
                   setpoint_c=scenario.setpoint_c, comfort_low_c=scenario.comfort_low_c,
                   comfort_high_c=scenario.comfort_high_c,
                   discretization_c=scenario.discretization_c,
                   block_length=scenario.block_length, tariff=scenario.tariff,
                   building=building, substeps=scenario.substeps)

    def fit(self, X, y=None):
        """X: outdoor temperatures, shape (n_hours,) or (n_hours, 1)."""
        w = check_array(X, ensure_2d=False, dtype=float).reshape(-1)
        self.scenario_ = Scenario(weather=tuple(w), horizon_hours=self.horizon_hours,
                                  tariff=self.tariff or Tariff.default(), lam=self.lam,
                                  mode=self.mode, setpoint_c=self.setpoint_c,
                                  comfort_low_c=self.comfort_low_c,
                                  comfort_high_c=self.comfort_high_c,
                                  discretization_c=self.discretization_c,
                                  block_length=self.block_length, substeps=self.substeps)
        self.building_ = self.building or BuildingThermalParams()
        self.model_ = GridModel(self.scenario_, self.building_)
        self._build()
        return self

    def _build(self):
        pass

    def _trace_from_index(self, s0: int) -> PolicyTrace:
        raise NotImplementedError

    def trace(self, initial_t_in_c: float) -> PolicyTrace:
        check_is_fitted(self, "model_")
        return self._trace_from_index(self.model_.start_index(float(initial_t_in_c)))

    def predict(self, X) -> np.ndarray:
        """Hourly actions for each initial indoor temperature; shape (n, horizon)."""
        t0 = check_array(X, ensure_2d=False, dtype=float).reshape(-1)
        return np.stack([self.trace(t).action for t in t0])

    def score(self, X, y=None) -> float:
        """Negative mean total weighted cost over the given initial temperatures."""
        t0 = check_array(X, ensure_2d=False, dtype=float).reshape(-1)
        return -float(np.mean([self.trace(t).total_cost for t in t0]))


class ExactScheduler(_Scheduler):
    """Hour-by-hour backward induction over the temperature grid."""

    def _build(self):
        self.table_ = vi.value_table(self.model_)

    def _trace_from_index(self, s0):
        return vi.trace_from_table(self.table_, self.model_, s0)


class BlockScheduler(_Scheduler):
    """Exhaustive on/off search inside each block, blocks chained backwards."""

    def _build(self):
        self.table_ = blocks.block_table(self.model_)

    def _trace_from_index(self, s0):
        return blocks.trace_from_blocks(self.table_, self.model_, s0)


class MacroScheduler(_Scheduler):
    """Constant-fraction macro actions per block, expanded to on/off hours."""

    def _build(self):
        self.table_ = macro.macro_table(self.model_)

    def _trace_from_index(self, s0):
        return macro.trace_from_macro(self.table_, self.model_, s0)


class DeadbandScheduler(_Scheduler):
    """Hysteresis relay; ``fit`` only builds the transition model."""

    def _trace_from_index(self, s0):
        t0 = float(self.model_.grid[s0])
        return deadband.run_deadband(self.scenario_, self.building_, t0, model=self.model_)

    def trace(self, initial_t_in_c: float) -> PolicyTrace:
        check_is_fitted(self, "model_")
        return deadband.run_deadband(self.scenario_, self.building_, float(initial_t_in_c),
                                     model=self.model_)


SCHEDULERS = {"exact": ExactScheduler, "blocks": BlockScheduler, "macro": MacroScheduler,
              "deadband": DeadbandScheduler}
