"""HVAC on/off scheduling for buildings with phase-change-material walls.

A two-node thermal model with a temperature-dependent PCM capacity drives a
finite-horizon MDP over a discretized indoor temperature. Three solvers share
one memoized transition model: hourly backward induction (``solvers.vi``),
exhaustive per-block search (``solvers.blocks``) and constant-fraction macro
actions (``solvers.macro``). A hysteresis relay (``solvers.deadband``) is the
baseline.
"""

from .estimators import BlockScheduler, DeadbandScheduler, ExactScheduler, MacroScheduler
from .exceptions import (GapError, InvalidArgumentError, ModelValidityError,
                         NumericInstabilityError, ParseError, ScenarioValidationError,
                         SchemaError)
from .io import load_scenario, load_trace, load_weather, save_trace, save_weather, synthetic_weather
from .mdp import GridModel, Scenario, StageCost, Tariff, discretize, transition
from .thermal import (BlendWindow, BuildingThermalParams, PcmCurveParams, PolyFit, ThermalState,
                      specific_heat, step_dynamics)
from .trace import PolicyTrace

__version__ = "0.1.0"

__all__ = [
    "BlendWindow", "BlockScheduler", "BuildingThermalParams", "DeadbandScheduler",
    "ExactScheduler", "GapError", "GridModel", "InvalidArgumentError", "MacroScheduler",
    "ModelValidityError", "NumericInstabilityError", "ParseError", "PcmCurveParams",
    "PolicyTrace", "PolyFit", "Scenario", "ScenarioValidationError", "SchemaError", "StageCost",
    "Tariff", "ThermalState", "discretize", "load_scenario", "load_trace", "load_weather",
    "save_trace", "save_weather", "specific_heat", "step_dynamics", "synthetic_weather",
    "transition",
]
