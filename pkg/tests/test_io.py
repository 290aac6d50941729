import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_scenario
from pcmsched.exceptions import (GapError, InvalidArgumentError, ParseError, SchemaError,
                                 ScenarioValidationError)
from pcmsched.io import (SEASONS, load_scenario, load_trace, load_weather, output_dir,
                         parse_scenario, read_scenario_doc, save_trace, save_weather,
                         synthetic_weather)
from pcmsched.mdp import GridModel, Tariff
from pcmsched.solvers import blocks
from pcmsched.thermal import BuildingThermalParams, PolyFit
from pcmsched.trace import COLUMNS, PolicyTrace, evaluate_actions


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# -- weather -------------------------------------------------------------------


def test_two_row_file(tmp_path):
    p = write(tmp_path, "w.csv", "timestamp,temp_c\n2024-01-01T00:00:00,21.5\n"
                                 "2024-01-01T01:00:00,22.0\n")
    assert load_weather(p).tolist() == [21.5, 22.0]


def test_non_numeric_value_reports_line(tmp_path):
    rows = ["timestamp,temp_c"] + [f"2024-01-01T0{i}:00:00,{20 + i}" for i in range(3)]
    rows.append("2024-01-01T03:00:00,warm")
    p = write(tmp_path, "w.csv", "\n".join(rows) + "\n")
    with pytest.raises(ParseError) as err:
        load_weather(p)
    assert err.value.line == 5


def test_gap_lists_missing_hours(tmp_path):
    p = write(tmp_path, "w.csv", "timestamp,temp_c\n2024-01-01T00:00:00,20\n"
                                 "2024-01-01T03:00:00,21\n")
    with pytest.raises(GapError) as err:
        load_weather(p)
    assert err.value.missing == ["2024-01-01T01:00:00", "2024-01-01T02:00:00"]


@pytest.mark.parametrize("body,line", [
    ("time,temp\n", 1),
    ("timestamp,temp_c\nnot-a-date,20\n", 2),
    ("timestamp,temp_c\n2024-01-01T00:00:00,nan\n", 2),
    ("timestamp,temp_c\n2024-01-01T00:00:00,20,1\n", 2),
    ("timestamp,temp_c\n2024-01-01T01:00:00,20\n2024-01-01T00:00:00,20\n", 3),
    ("timestamp,temp_c\n2024-01-01T00:00:00,20\n2024-01-01T00:30:00,20\n", 3),
])
def test_malformed_weather(tmp_path, body, line):
    with pytest.raises(ParseError) as err:
        load_weather(write(tmp_path, "w.csv", body))
    assert err.value.line == line


def test_missing_weather_file(tmp_path):
    with pytest.raises(ParseError):
        load_weather(tmp_path / "absent.csv")


@pytest.mark.parametrize("season", sorted(SEASONS))
def test_synthetic_round_trip_is_exact(tmp_path, season):
    w = synthetic_weather(season, 168, seed=4)
    back = load_weather(save_weather(tmp_path / "w.csv", w))
    assert np.array_equal(w, back)


def test_synthetic_is_seeded():
    assert np.array_equal(synthetic_weather("summer", 48, 1), synthetic_weather("summer", 48, 1))
    assert not np.array_equal(synthetic_weather("summer", 48, 1), synthetic_weather("summer", 48, 2))


def test_synthetic_unknown_season():
    with pytest.raises(InvalidArgumentError):
        synthetic_weather("monsoon", 24)


@given(st.lists(st.floats(-40, 50, allow_nan=False), min_size=1, max_size=50))
def test_weather_round_trip_property(temps):
    with tempfile.TemporaryDirectory() as d:
        back = load_weather(save_weather(Path(d) / "w.csv", temps))
    assert back.tolist() == [float(t) for t in temps]


# -- scenarios -----------------------------------------------------------------


def test_minimal_yaml_uses_defaults(tmp_path):
    p = write(tmp_path, "s.yaml", "scenario:\n  mode: cooling\n")
    sc, params = load_scenario(p)
    assert sc.horizon_hours == 24 and sc.block_length == 4 and sc.discretization_c == 0.1
    assert (sc.comfort_low_c, sc.comfort_high_c) == (20.0, 26.0)
    assert params == BuildingThermalParams()
    assert sc.tariff == Tariff.default()


def test_empty_yaml_is_valid(tmp_path):
    sc, _ = load_scenario(write(tmp_path, "s.yaml", ""))
    assert sc.mode == "cooling"


def test_full_yaml(tmp_path):
    save_weather(tmp_path / "w.csv", synthetic_weather("autumn", 49))
    p = write(tmp_path, "s.yaml", """
scenario:
  horizon_hours: 48
  mode: heating
  lambda: 0.05
  block_length: 6
  initial_t_in_c: 21.0
weather:
  csv: w.csv
tariff:
  - [0, 16, 20.0]
  - [16, 21, 55.0]
  - [21, 24, 20.0]
building:
  r_dw: 0.03
  pcm:
    smoothing: {kind: polyfit, degree: 8}
""")
    sc, params = load_scenario(p)
    assert sc.horizon_hours == 48 and sc.mode == "heating" and sc.lam == 0.05
    assert sc.block_length == 6 and sc.initial_t_in_c == 21.0
    assert sc.tariff.price(17) == 55.0
    assert params.r_dw == 0.03
    assert params.pcm.smoothing == PolyFit(8, (15.0, 35.0))
    assert np.array_equal(sc.weather, synthetic_weather("autumn", 49))


def test_comfort_order_error_names_both_fields(tmp_path):
    p = write(tmp_path, "s.yaml", "scenario:\n  comfort_low_c: 26\n  comfort_high_c: 20\n")
    with pytest.raises(ScenarioValidationError) as err:
        load_scenario(p)
    assert any("comfort_low_c" in f and "comfort_high_c" in f for f in err.value.fields)


def test_indivisible_horizon(tmp_path):
    p = write(tmp_path, "s.yaml", "scenario:\n  horizon_hours: 25\n  block_length: 4\n")
    with pytest.raises(ScenarioValidationError) as err:
        load_scenario(p)
    assert "scenario.horizon_hours" in err.value.fields


def test_all_problems_reported_together():
    doc = {"scenario": {"lambda": 2.0, "bogus": 1}, "building": {"r_dw": -1.0}, "extra": {}}
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(doc)
    fields = err.value.fields
    assert "scenario.lambda" in fields and "scenario.bogus" in fields
    assert "building.r_dw" in fields and "extra" in fields


@pytest.mark.parametrize("weather", [{"csv": "a.csv", "values": [1.0]}, "summer",
                                     {"synthetic": {"season": "monsoon"}}])
def test_bad_weather_section(weather):
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario({"weather": weather})
    assert any(f.startswith("weather") for f in err.value.fields)


def test_inline_weather_values():
    sc, _ = parse_scenario({"scenario": {"horizon_hours": 2, "block_length": 1},
                            "weather": {"values": [20, 21, 22]}})
    assert sc.weather == (20.0, 21.0, 22.0)


def test_flat_tariff_number():
    sc, _ = parse_scenario({"tariff": 25})
    assert all(sc.tariff.price(h) == 25.0 for h in range(24))


def test_non_numeric_field():
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario({"scenario": {"horizon_hours": "a day"}})
    assert "scenario.horizon_hours" in err.value.fields


def test_yaml_syntax_error_reports_line(tmp_path):
    p = write(tmp_path, "s.yaml", "scenario:\n  mode: [cooling\n  lambda: 0.5\n")
    with pytest.raises(ParseError) as err:
        read_scenario_doc(p)
    assert err.value.line >= 2


# -- traces --------------------------------------------------------------------


@pytest.fixture(scope="module")
def trace():
    _, tr = blocks.solve(make_scenario(horizon=8), BuildingThermalParams(), 23.0)
    return tr


def test_trace_round_trip_is_exact(tmp_path, trace):
    back = load_trace(save_trace(trace, tmp_path / "t.csv"))
    assert back == trace
    assert back.in_band.dtype == bool and back.hour.dtype.kind == "i"


def test_trace_round_trip_with_absorption(tmp_path, params):
    sc = make_scenario(horizon=8, block_length=4)
    model = GridModel(sc, params)
    tr = evaluate_actions(model, model.start_index(20.0), [1.0] * 8)
    assert not tr.feasible
    assert load_trace(save_trace(tr, tmp_path / "t.csv")) == tr


def test_trace_header_mismatch(tmp_path):
    p = write(tmp_path, "t.csv", "hour,action\n0,1\n")
    with pytest.raises(SchemaError):
        load_trace(p)


def test_trace_empty(tmp_path):
    p = write(tmp_path, "t.csv", ",".join(COLUMNS) + "\n")
    with pytest.raises(InvalidArgumentError):
        load_trace(p)


def test_empty_trace_object_rejected():
    with pytest.raises(InvalidArgumentError):
        PolicyTrace(**{c: np.array([]) for c in COLUMNS})


def test_save_trace_unwritable_path_mentions_path(tmp_path, trace):
    target = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError) as err:
        save_trace(trace, target)
    assert str(target) in str(err.value)


def test_output_dir_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("PCMSCHED_OUT_DIR", str(tmp_path / "env"))
    assert output_dir(tmp_path / "explicit") == tmp_path / "explicit"
    assert output_dir() == tmp_path / "env"
    monkeypatch.delenv("PCMSCHED_OUT_DIR")
    monkeypatch.chdir(tmp_path)
    assert output_dir().resolve() == (tmp_path / "out").resolve()
