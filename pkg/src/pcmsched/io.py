"""File formats: hourly weather CSV, YAML scenarios, trace CSV, comparison reports.

Weather CSV: header ``timestamp,temp_c``; ISO-8601 timestamps one hour apart.
Trace CSV: header :data:`pcmsched.trace.COLUMNS`; floats written with
``repr`` so a save/load round trip is exact.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from datetime import datetime, timedelta
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import yaml

from .exceptions import GapError, InvalidArgumentError, ParseError, SchemaError, ScenarioValidationError
from .mdp import Scenario, Tariff
from .thermal import BlendWindow, BuildingThermalParams, PcmCurveParams, PolyFit
from .trace import COLUMNS, PolicyTrace

OUT_DIR_ENV = "PCMSCHED_OUT_DIR"
WEATHER_HEADER = ["timestamp", "temp_c"]


@dataclasses.dataclass(frozen=True)
class SeasonPreset:
    mean_c: float
    amplitude_c: float
    start: str
    mode: str


# daily sinusoid peaking mid-afternoon; ranges loosely follow a coastal temperate climate
SEASONS: Dict[str, SeasonPreset] = {
    "spring": SeasonPreset(17.5, 5.0, "2023-10-16T00:00:00", "heating"),
    "summer": SeasonPreset(26.0, 5.5, "2024-01-16T00:00:00", "cooling"),
    "autumn": SeasonPreset(19.0, 4.5, "2024-04-01T00:00:00", "heating"),
    "winter": SeasonPreset(12.0, 5.0, "2024-07-25T00:00:00", "heating"),
}


def synthetic_weather(season: str, hours: int, seed: Optional[int] = 0,
                      day_sigma_c: float = 1.0) -> np.ndarray:
    """Hourly outdoor temperatures: seasonal sinusoid plus a seeded per-day offset."""
    if season not in SEASONS:
        raise InvalidArgumentError(f"unknown season {season!r}; choose from {sorted(SEASONS)}")
    p = SEASONS[season]
    h = np.arange(hours)
    days = h // 24
    rng = np.random.default_rng(seed)
    offsets = rng.normal(0.0, day_sigma_c, days[-1] + 1 if hours else 0) if seed is not None \
        else np.zeros(days[-1] + 1 if hours else 0)
    return p.mean_c + offsets[days] + p.amplitude_c * np.sin(2 * np.pi * (h - 9) / 24)


def save_weather(path, temps: Sequence[float], start: str = "2024-01-01T00:00:00") -> Path:
    path = Path(path)
    t0 = datetime.fromisoformat(start)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(WEATHER_HEADER)
        for i, t in enumerate(temps):
            w.writerow([(t0 + timedelta(hours=i)).isoformat(), repr(float(t))])
    return path


def load_weather(path, min_length: int = 1) -> np.ndarray:
    """Read an hourly weather CSV into a float array."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(path, 0, f"cannot read file: {e}") from e
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != WEATHER_HEADER:
        raise ParseError(path, 1, f"expected header {','.join(WEATHER_HEADER)}")
    stamps, temps = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(path, lineno, f"expected 2 fields, got {len(row)}")
        try:
            ts = datetime.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(path, lineno, f"bad timestamp {row[0]!r}") from None
        try:
            t = float(row[1])
        except ValueError:
            raise ParseError(path, lineno, f"non-numeric temperature {row[1]!r}") from None
        if not math.isfinite(t):
            raise ParseError(path, lineno, f"non-finite temperature {row[1]!r}")
        if stamps:
            step = ts - stamps[-1]
            if step <= timedelta(0):
                raise ParseError(path, lineno, "timestamps must be strictly increasing")
            if step % timedelta(hours=1):
                raise ParseError(path, lineno, "timestamps must lie on the hourly grid")
            if step > timedelta(hours=1):
                missing = []
                cur = stamps[-1] + timedelta(hours=1)
                while cur < ts:
                    missing.append(cur.isoformat())
                    cur += timedelta(hours=1)
                raise GapError(path, missing)
        stamps.append(ts)
        temps.append(t)
    if len(temps) < min_length:
        raise ParseError(path, len(rows), f"need at least {min_length} hourly rows, got {len(temps)}")
    return np.array(temps)


# -- scenarios -----------------------------------------------------------------

_SCENARIO_KEYS = {
    "horizon_hours": "horizon_hours", "mode": "mode", "lambda": "lam", "setpoint_c": "setpoint_c",
    "comfort_low_c": "comfort_low_c", "comfort_high_c": "comfort_high_c",
    "discretization_c": "discretization_c", "block_length": "block_length",
    "macro_fractions": "macro_fractions", "out_of_band_penalty": "out_of_band_penalty",
    "initial_t_in_c": "initial_t_in_c", "initial_t_e_c": "initial_t_e_c", "substeps": "substeps",
}
_INT_KEYS = {"horizon_hours", "block_length", "substeps"}
_BUILDING_KEYS = {f.name for f in dataclasses.fields(BuildingThermalParams)} - {"pcm"}
_PCM_KEYS = {f.name for f in dataclasses.fields(PcmCurveParams)} - {"smoothing"}


def _number(value, field, problems, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append((field, f"expected a number, got {value!r}"))
        return None
    if integer:
        if float(value) != int(value):
            problems.append((field, f"expected an integer, got {value!r}"))
            return None
        return int(value)
    return float(value)


def _mapping(doc, key, problems):
    v = doc.get(key, {})
    if v is None:
        return {}
    if not isinstance(v, dict):
        problems.append((key, "expected a mapping"))
        return {}
    return v


def _prefixed(err: ScenarioValidationError, prefix: str):
    return [(f"{prefix}.{f}" if prefix else f, m) for f, m in err.problems]


def _parse_building(doc, problems) -> Optional[BuildingThermalParams]:
    b = _mapping(doc, "building", problems)
    kwargs = {}
    for k, v in b.items():
        if k == "pcm":
            continue
        if k not in _BUILDING_KEYS:
            problems.append((f"building.{k}", "unknown field"))
            continue
        n = _number(v, f"building.{k}", problems)
        if n is not None:
            kwargs[k] = n
    pcm_doc = b.get("pcm", {}) or {}
    if not isinstance(pcm_doc, dict):
        problems.append(("building.pcm", "expected a mapping"))
        pcm_doc = {}
    pcm_kwargs = {}
    for k, v in pcm_doc.items():
        if k == "smoothing":
            continue
        if k not in _PCM_KEYS:
            problems.append((f"building.pcm.{k}", "unknown field"))
            continue
        n = _number(v, f"building.pcm.{k}", problems)
        if n is not None:
            pcm_kwargs[k] = n
    sm = pcm_doc.get("smoothing")
    if sm is not None:
        if not isinstance(sm, dict) or sm.get("kind") not in ("blend", "polyfit"):
            problems.append(("building.pcm.smoothing", "expected {kind: blend|polyfit, ...}"))
        elif sm["kind"] == "blend":
            hw = _number(sm.get("half_width_c", 0.05), "building.pcm.smoothing.half_width_c", problems)
            if hw is not None:
                pcm_kwargs["smoothing"] = BlendWindow(hw)
        else:
            deg = _number(sm.get("degree", 10), "building.pcm.smoothing.degree", problems, integer=True)
            rng = sm.get("fit_range_c", [15.0, 35.0])
            if not (isinstance(rng, list) and len(rng) == 2):
                problems.append(("building.pcm.smoothing.fit_range_c", "expected [low, high]"))
            elif deg is not None:
                lo = _number(rng[0], "building.pcm.smoothing.fit_range_c", problems)
                hi = _number(rng[1], "building.pcm.smoothing.fit_range_c", problems)
                if lo is not None and hi is not None:
                    pcm_kwargs["smoothing"] = PolyFit(deg, (lo, hi))
    try:
        pcm = PcmCurveParams(**pcm_kwargs)
    except ScenarioValidationError as e:
        problems.extend(_prefixed(e, "building.pcm"))
        return None
    try:
        return BuildingThermalParams(pcm=pcm, **kwargs)
    except ScenarioValidationError as e:
        problems.extend(_prefixed(e, "building"))
        return None


def _parse_tariff(doc, problems) -> Optional[Tariff]:
    t = doc.get("tariff")
    if t is None:
        return Tariff.default()
    if isinstance(t, (int, float)) and not isinstance(t, bool):
        return Tariff.flat(float(t))
    if not isinstance(t, list) or not all(isinstance(p, list) and len(p) == 3 for p in t):
        problems.append(("tariff", "expected a list of [start_hour, end_hour, cents_per_kwh]"))
        return None
    try:
        return Tariff(tuple(tuple(p) for p in t))
    except (ScenarioValidationError, TypeError, ValueError) as e:
        problems.extend(e.problems if isinstance(e, ScenarioValidationError) else [("tariff", str(e))])
        return None


def _parse_weather(doc, base: Path, horizon: int, mode: str, problems):
    w = doc.get("weather")
    if w is None:
        season = "summer" if mode == "cooling" else "winter"
        return synthetic_weather(season, horizon + 1)
    if not isinstance(w, dict) or len(w) != 1 or next(iter(w)) not in ("csv", "synthetic", "values"):
        problems.append(("weather", "expected exactly one of csv / synthetic / values"))
        return None
    kind, entry = next(iter(w.items()))
    if kind == "csv":
        return load_weather((base / str(entry)) if not os.path.isabs(str(entry)) else entry)
    if kind == "values":
        if not isinstance(entry, list):
            problems.append(("weather.values", "expected a list of temperatures"))
            return None
        vals = [_number(v, "weather.values", problems) for v in entry]
        return None if None in vals else np.array(vals)
    entry = entry or {}
    if not isinstance(entry, dict):
        problems.append(("weather.synthetic", "expected a mapping"))
        return None
    season = entry.get("season", "summer" if mode == "cooling" else "winter")
    if season not in SEASONS:
        problems.append(("weather.synthetic.season", f"unknown season {season!r}"))
        return None
    seed = entry.get("seed", 0)
    return synthetic_weather(season, horizon + 1, seed=seed)


def parse_scenario(doc: dict, base: Path = Path(".")) -> Tuple[Scenario, BuildingThermalParams]:
    """Build and validate a scenario from an already-parsed YAML document."""
    if doc is None:
        doc = {}
    problems = []
    if not isinstance(doc, dict):
        raise ScenarioValidationError([("<root>", "expected a mapping")])
    for k in doc:
        if k not in ("scenario", "weather", "tariff", "building"):
            problems.append((k, "unknown section"))
    s = _mapping(doc, "scenario", problems)
    kwargs = {}
    for k, v in s.items():
        if k not in _SCENARIO_KEYS:
            problems.append((f"scenario.{k}", "unknown field"))
            continue
        if k == "mode":
            kwargs["mode"] = v
        elif k == "macro_fractions":
            if not isinstance(v, list):
                problems.append(("scenario.macro_fractions", "expected a list"))
            else:
                vals = [_number(x, "scenario.macro_fractions", problems) for x in v]
                if None not in vals:
                    kwargs["macro_fractions"] = tuple(vals)
        else:
            n = _number(v, f"scenario.{k}", problems, integer=k in _INT_KEYS)
            if n is not None:
                kwargs[_SCENARIO_KEYS[k]] = n
    params = _parse_building(doc, problems)
    tariff = _parse_tariff(doc, problems)
    horizon = kwargs.get("horizon_hours", 24)
    weather = None
    if isinstance(horizon, int) and horizon >= 1:
        weather = _parse_weather(doc, base, horizon, kwargs.get("mode", "cooling"), problems)
    # validate the scenario fields even when other sections failed, so one error lists everything
    placeholder = weather
    if placeholder is None:
        placeholder = [0.0] * (horizon + 1 if isinstance(horizon, int) and horizon > 0 else 2)
    scenario = None
    try:
        scenario = Scenario(weather=tuple(placeholder), tariff=tariff or Tariff.default(), **kwargs)
    except ScenarioValidationError as e:
        problems.extend(_prefixed(e, "scenario"))
    if problems:
        raise ScenarioValidationError(problems)
    return scenario, params


def read_scenario_doc(path) -> dict:
    """Raw YAML mapping of a scenario file (not yet validated)."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(path, 0, f"cannot read file: {e}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ParseError(path, mark.line + 1 if mark else 0, f"invalid YAML: {e}") from None
    return {} if doc is None else doc


def load_scenario(path) -> Tuple[Scenario, BuildingThermalParams]:
    path = Path(path)
    return parse_scenario(read_scenario_doc(path), path.parent)


# -- traces and reports ----------------------------------------------------------


def save_trace(trace: PolicyTrace, path) -> Path:
    if trace is None or len(trace) == 0:
        raise InvalidArgumentError("cannot save an empty trace")
    path = Path(path)
    try:
        with path.open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(COLUMNS)
            for i in range(len(trace)):
                row = []
                for c in COLUMNS:
                    v = getattr(trace, c)[i]
                    if c == "hour":
                        row.append(str(int(v)))
                    elif c == "in_band":
                        row.append("1" if v else "0")
                    else:
                        row.append(repr(float(v)))
                w.writerow(row)
    except OSError as e:
        raise OSError(f"{path}: {e}") from e
    return path


def load_trace(path) -> PolicyTrace:
    path = Path(path)
    try:
        rows = list(csv.reader(path.read_text(encoding="utf-8").splitlines()))
    except OSError as e:
        raise OSError(f"{path}: {e}") from e
    if not rows or tuple(rows[0]) != COLUMNS:
        raise SchemaError(f"{path}: expected header {','.join(COLUMNS)}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise InvalidArgumentError(f"{path}: trace has no rows")
    cols = {c: [] for c in COLUMNS}
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(COLUMNS):
            raise SchemaError(f"{path}:{lineno}: expected {len(COLUMNS)} fields, got {len(r)}")
        try:
            for c, v in zip(COLUMNS, r):
                cols[c].append(int(v) if c in ("hour", "in_band") else float(v))
        except ValueError:
            raise ParseError(path, lineno, "malformed value") from None
    arrays = {c: np.array(v, dtype=float) for c, v in cols.items()}
    arrays["hour"] = np.array(cols["hour"], dtype=np.int64)
    arrays["in_band"] = np.array(cols["in_band"], dtype=bool)
    return PolicyTrace(**arrays)


def output_dir(explicit=None) -> Path:
    """Explicit path, else ``$PCMSCHED_OUT_DIR``, else ``./out``."""
    d = Path(explicit or os.environ.get(OUT_DIR_ENV) or "out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def save_json(data, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    return path


def save_summary_csv(summaries, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        names = [fl.name for fl in dataclasses.fields(summaries[0])]
        w.writerow(names)
        for s in summaries:
            w.writerow([getattr(s, n) if isinstance(getattr(s, n), str) else repr(float(getattr(s, n)))
                        for n in names])
    return path
