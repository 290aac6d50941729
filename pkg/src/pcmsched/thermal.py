"""Two-node lumped thermal model of a single-zone building with a PCM layer.

Nodes:
- T_in: indoor air temperature (°C), capacitance m_a*c_a
- T_e:  envelope/PCM surface temperature (°C), capacitance C_e + m_pcm*c_pcm(T_e)

Model:
(C_e + C_pcm(T_e)) dT_e/dt = (T_in - T_e)/R_in + (T_out - T_e)/R_out
m_a c_a dT_in/dt = (T_out - T_in)/R_dw + (T_e - T_in)/R_in + Q_hvac + Q_inf
Q_inf = ACH * V * rho_air * c_air * (T_out - T_in) / 3600

The PCM specific heat has a kink at the melting point, so the curve is
smoothed (cosine blend or polynomial fit) before it enters the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Union

import numpy as np

from .exceptions import InvalidArgumentError, NumericInstabilityError, ScenarioValidationError

Mode = Literal["heating", "cooling"]
MODES = ("heating", "cooling")

AIR_DENSITY = 1.2  # kg/m^3
AIR_SPECIFIC_HEAT = 1005.0  # J/(kg K)


@dataclass(frozen=True)
class BlendWindow:
    """C1 cosine blend toward the peak value within ``half_width_c`` of the melting point."""

    half_width_c: float = 0.05


@dataclass(frozen=True)
class PolyFit:
    """Least-squares polynomial fitted to the raw curve over ``fit_range_c``."""

    degree: int = 10
    fit_range_c: tuple = (15.0, 35.0)


Smoothing = Union[BlendWindow, PolyFit]


@dataclass(frozen=True)
class PcmCurveParams:
    melting_point_c: float = 25.1
    base_solid: float = 1200.0
    amp_solid: float = 18800.0
    solid_decay_c: float = 1.5
    base_liquid: float = 1300.0
    amp_liquid: float = 18700.0
    liquid_width: float = 4.0
    smoothing: Smoothing = field(default_factory=BlendWindow)

    def __post_init__(self):
        problems = []
        if not math.isfinite(self.melting_point_c):
            problems.append(("melting_point_c", "must be finite"))
        for name in ("amp_solid", "amp_liquid", "solid_decay_c", "liquid_width"):
            if not getattr(self, name) > 0:
                problems.append((name, "must be > 0"))
        for name in ("base_solid", "base_liquid"):
            if not getattr(self, name) > 0:
                problems.append((name, "must be > 0"))
        if isinstance(self.smoothing, BlendWindow):
            if not self.smoothing.half_width_c > 0:
                problems.append(("smoothing.half_width_c", "must be > 0"))
        elif isinstance(self.smoothing, PolyFit):
            lo, hi = self.smoothing.fit_range_c
            if self.smoothing.degree < 1:
                problems.append(("smoothing.degree", "must be >= 1"))
            if not lo < hi:
                problems.append(("smoothing.fit_range_c", "lower bound must be below upper bound"))
        else:
            problems.append(("smoothing", f"unknown smoothing {self.smoothing!r}"))
        if problems:
            raise ScenarioValidationError(problems)

    @property
    def peak(self) -> float:
        """Curve value at the melting point (mean of the two branch limits)."""
        return 0.5 * ((self.base_solid + self.amp_solid) + (self.base_liquid + self.amp_liquid))


def _solid(curve: PcmCurveParams, t):
    # clamp keeps exp() bounded where this branch is unused
    return curve.base_solid + curve.amp_solid * np.exp(
        -(curve.melting_point_c - np.minimum(t, curve.melting_point_c)) / curve.solid_decay_c
    )


def _liquid(curve: PcmCurveParams, t):
    return curve.base_liquid + curve.amp_liquid * np.exp(
        -curve.liquid_width * (curve.melting_point_c - t) ** 2
    )


def raw_specific_heat(curve: PcmCurveParams, t):
    """Unsmoothed piecewise curve (solid branch below the melting point)."""
    t = np.asarray(t, dtype=float)
    return np.where(t < curve.melting_point_c, _solid(curve, t), _liquid(curve, t))


@lru_cache(maxsize=32)
def _polyfit(curve: PcmCurveParams):
    lo, hi = curve.smoothing.fit_range_c
    xs = np.linspace(lo, hi, 4001)
    ys = raw_specific_heat(curve, xs)
    poly = np.polynomial.Polynomial.fit(xs, ys, curve.smoothing.degree)
    floor = float(ys.min())
    return poly, floor


def _cpcm(curve: PcmCurveParams, t):
    """Smoothed curve without argument checks (hot path of the integrator)."""
    sm = curve.smoothing
    tp = curve.melting_point_c
    if isinstance(sm, BlendWindow):
        raw = np.where(t < tp, _solid(curve, t), _liquid(curve, t))
        u = np.abs(t - tp) / sm.half_width_c
        inside = u < 1.0
        if not np.any(inside):
            return raw
        s = 0.5 * (1.0 - np.cos(np.pi * np.minimum(u, 1.0)))
        blended = raw + (1.0 - s) * (curve.peak - raw)
        return np.where(inside, blended, raw)
    poly, floor = _polyfit(curve)
    lo, hi = sm.fit_range_c
    fitted = np.maximum(poly(t), floor)
    return np.where((t >= lo) & (t <= hi), fitted, raw_specific_heat(curve, t))


def specific_heat(curve: PcmCurveParams, t_c):
    """PCM specific heat in J/(kg K) at temperature ``t_c`` (scalar or array)."""
    t = np.asarray(t_c, dtype=float)
    if not np.all(np.isfinite(t)):
        raise InvalidArgumentError(f"temperature must be finite, got {t_c!r}")
    out = _cpcm(curve, t)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BuildingThermalParams:
    """Lumped parameters of the building.

    Defaults describe an illustrative 8 m x 6 m x 2.7 m lightweight zone; they
    are placeholders, not measured values.
    """

    r_dw: float = 0.025  # K/W, doors and windows
    r_in: float = 3.5e-4  # K/W, indoor air to envelope surface
    r_out: float = 0.01  # K/W, envelope to outdoor
    c_envelope: float = 8.0e6  # J/K
    c_pcm_mass_kg: float = 1800.0  # kg, ~70 m^2 of a 0.03 m PCM layer
    air_heat_capacity: float = 4.7e5  # J/K, zone air plus furnishings (about 3x the air alone)
    hvac_rated_electrical_kw: float = 2.0
    hvac_cop: float = 3.0
    infiltration_ach: float = 0.5
    zone_volume_m3: float = 129.6
    pcm: PcmCurveParams = field(default_factory=PcmCurveParams)

    def __post_init__(self):
        problems = []
        for name in ("r_dw", "r_in", "r_out"):
            if not getattr(self, name) > 0:
                problems.append((name, "resistance must be > 0"))
        for name in ("c_envelope", "air_heat_capacity"):
            if not getattr(self, name) > 0:
                problems.append((name, "capacitance must be > 0"))
        if not self.c_pcm_mass_kg >= 0:
            problems.append(("c_pcm_mass_kg", "must be >= 0"))
        if not self.hvac_cop > 0:
            problems.append(("hvac_cop", "must be > 0"))
        if not self.hvac_rated_electrical_kw >= 0:
            problems.append(("hvac_rated_electrical_kw", "must be >= 0"))
        if not self.infiltration_ach >= 0:
            problems.append(("infiltration_ach", "must be >= 0"))
        if not self.zone_volume_m3 > 0:
            problems.append(("zone_volume_m3", "must be > 0"))
        if problems:
            raise ScenarioValidationError(problems)

    @property
    def infiltration_conductance(self) -> float:
        """W/K equivalent of the air-change infiltration term."""
        return self.infiltration_ach * self.zone_volume_m3 * AIR_DENSITY * AIR_SPECIFIC_HEAT / 3600.0

    def hvac_thermal_watts(self, fraction, mode: Mode):
        sign = 1.0 if mode == "heating" else -1.0
        return sign * self.hvac_cop * self.hvac_rated_electrical_kw * 1000.0 * fraction


@dataclass(frozen=True)
class ThermalState:
    t_in_c: float
    t_e_c: float


def integrate(params: BuildingThermalParams, t_in, t_e, t_out, hvac_fraction, mode: Mode,
              slot_hours: float = 1.0, substeps: int = 60):
    """Fixed-step RK4 over one slot; array arguments broadcast.

    Outdoor temperature is held constant over the slot. Returns ``(t_in, t_e)``
    as float arrays.
    """
    t_in = np.asarray(t_in, dtype=float)
    t_e = np.asarray(t_e, dtype=float)
    t_in, t_e = np.broadcast_arrays(t_in, t_e)
    t_out = np.asarray(t_out, dtype=float)
    q_hvac = params.hvac_thermal_watts(np.asarray(hvac_fraction, dtype=float), mode)
    g_in = 1.0 / params.r_in
    g_out = 1.0 / params.r_out
    g_amb = 1.0 / params.r_dw + params.infiltration_conductance
    c_air = params.air_heat_capacity
    c_env = params.c_envelope
    mass = params.c_pcm_mass_kg
    curve = params.pcm
    # constant part of the air-node forcing
    forcing = g_amb * t_out + q_hvac

    def deriv(a, e):
        cap = c_env + mass * _cpcm(curve, e)
        de = (g_in * (a - e) + g_out * (t_out - e)) / cap
        da = (forcing - g_amb * a + g_in * (e - a)) / c_air
        return da, de

    h = slot_hours * 3600.0 / substeps
    a, e = t_in, t_e
    # overflow is reported through the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(substeps):
            k1a, k1e = deriv(a, e)
            k2a, k2e = deriv(a + 0.5 * h * k1a, e + 0.5 * h * k1e)
            k3a, k3e = deriv(a + 0.5 * h * k2a, e + 0.5 * h * k2e)
            k4a, k4e = deriv(a + h * k3a, e + h * k3e)
            a = a + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            e = e + (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(e))):
                raise NumericInstabilityError(i)
    return a, e


def step_dynamics(params: BuildingThermalParams, state: ThermalState, t_out_c: float,
                  hvac_fraction: float, mode: Mode, slot_hours: float = 1.0,
                  substeps: int = 60) -> ThermalState:
    """Advance ``state`` by one slot of ``slot_hours``."""
    if not 0.0 <= hvac_fraction <= 1.0:
        raise InvalidArgumentError(f"hvac_fraction must lie in [0, 1], got {hvac_fraction}")
    if substeps < 1:
        raise InvalidArgumentError(f"substeps must be >= 1, got {substeps}")
    if not slot_hours > 0:
        raise InvalidArgumentError(f"slot_hours must be > 0, got {slot_hours}")
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    a, e = integrate(params, state.t_in_c, state.t_e_c, t_out_c, hvac_fraction, mode,
                     slot_hours, substeps)
    return ThermalState(float(a), float(e))


def simulate(params: BuildingThermalParams, state: ThermalState, t_out, fractions, mode: Mode,
             substeps: int = 60):
    """Free continuous rollout (no discretization): one slot per entry of ``t_out``.

    Returns an array of shape (len(t_out) + 1, 2) with columns (t_in, t_e).
    """
    t_out = np.asarray(t_out, dtype=float)
    fractions = np.broadcast_to(np.asarray(fractions, dtype=float), t_out.shape)
    out = np.empty((len(t_out) + 1, 2))
    out[0] = state.t_in_c, state.t_e_c
    for k, (to, f) in enumerate(zip(t_out, fractions)):
        state = step_dynamics(params, state, float(to), float(f), mode, substeps=substeps)
        out[k + 1] = state.t_in_c, state.t_e_c
    return out
