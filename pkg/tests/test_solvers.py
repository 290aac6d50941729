import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_scenario
from oracles import all_sequences, best_with_ties, sequence_costs
from pcmsched.exceptions import InvalidArgumentError
from pcmsched.mdp import GridModel, Scenario, Tariff, grid_indices, transition
from pcmsched.solvers import blocks, deadband, macro, vi
from pcmsched.thermal import BuildingThermalParams, ThermalState
from pcmsched.trace import evaluate_actions

P = BuildingThermalParams()


def narrow(horizon, mode="cooling", lam=0.5, low=22.0, width=1.2, seed=0, **kw):
    """Small grid (at most 13 states) so exhaustive enumeration stays cheap."""
    return make_scenario(horizon=horizon, mode=mode, lam=lam, comfort_low_c=low,
                         comfort_high_c=round(low + width, 10), seed=seed,
                         initial_t_in_c=low, block_length=kw.pop("block_length", 1), **kw)


def check_against_enumeration(sc):
    model = GridModel(sc, P)
    table = vi.value_table(model)
    seqs = all_sequences(sc.horizon_hours)
    costs = sequence_costs(sc, P, model.grid, seqs)
    for s in range(model.n):
        best, first, _ = best_with_ties(costs[s], seqs)
        assert table.values[0, s] == pytest.approx(best, rel=1e-9, abs=1e-9)
        trace = vi.trace_from_table(table, model, s)
        assert np.array_equal(trace.action, first)


# -- value iteration -----------------------------------------------------------


def test_two_step_three_state_enumeration():
    check_against_enumeration(narrow(2, width=0.2))


def test_two_step_toy_enumeration():
    check_against_enumeration(narrow(2, mode="heating", lam=0.95))


@settings(max_examples=12)
@given(st.integers(1, 8), st.sampled_from(["heating", "cooling"]), st.sampled_from([0.0, 0.05, 0.5, 0.95, 1.0]),
       st.sampled_from([20.0, 21.0, 22.0, 23.0]), st.integers(0, 1000))
def test_vi_matches_enumeration(K, mode, lam, low, seed):
    check_against_enumeration(narrow(K, mode=mode, lam=lam, low=low, seed=seed))


def test_backup_prefers_off_when_cheaper():
    sc = make_scenario(horizon=1, block_length=1, lam=1.0, tariff=Tariff.flat(20.0),
                       initial_t_in_c=23.0)
    model = GridModel(sc, P)
    table = vi.value_table(model)
    s = model.start_index(23.0)
    assert model.row(0, 0.0).next_index[s] != model.oob
    assert table.best_action[0, s] == 0.0


def test_backup_when_every_successor_leaves_the_band():
    sc = make_scenario(horizon=1, block_length=1, mode="heating", comfort_low_c=20.0,
                       comfort_high_c=20.5, initial_t_in_c=20.0)
    model = GridModel(sc, P)
    s = model.start_index(20.0)
    r0, r1 = model.row(0, 0.0), model.row(0, 1.0)
    assert r0.next_index[s] == model.oob and r1.next_index[s] == model.oob
    values, best = vi.backup(0, vi.terminal_values(sc), model)
    assert values[s] == min(r0.weighted[s], r1.weighted[s]) + sc.out_of_band_penalty
    assert best[s] == (1.0 if r1.weighted[s] < r0.weighted[s] else 0.0)


def test_zero_tariff_pure_electricity_costs_nothing():
    sc = make_scenario(lam=1.0, tariff=Tariff.flat(0.0))
    _, trace = vi.solve(sc, P)
    assert trace.total_cost == 0.0


def test_bellman_residual_exactly_zero():
    sc = make_scenario(mode="heating", lam=0.5)
    model = GridModel(sc, P)
    t = vi.value_table(model)
    for k in range(sc.horizon_hours):
        q = [model.row(k, a).weighted + t.values[k + 1][model.row(k, a).next_index] for a in (0.0, 1.0)]
        assert np.array_equal(t.values[k], np.minimum(*q))
        chosen = np.where(t.best_action[k] == 1.0, q[1], q[0])
        assert np.array_equal(chosen, t.values[k])


@pytest.mark.parametrize("mode", ["heating", "cooling"])
def test_trace_cost_matches_value(mode):
    sc = make_scenario(mode=mode)
    table, trace = vi.solve(sc, P, 21.3)
    s0 = GridModel(sc, P).start_index(21.3)
    assert trace.total_cost == pytest.approx(table.values[0, s0], rel=1e-9)
    assert len(trace) == 24
    assert np.all(np.diff(trace.cumulative_cost) >= 0)


def test_vi_rejects_out_of_band_start():
    with pytest.raises(InvalidArgumentError):
        vi.solve(make_scenario(), P, 26.5)


@pytest.mark.parametrize("mode,lam", [("cooling", 0.95), ("heating", 0.05), ("heating", 0.95)])
def test_optimal_beats_deadband(mode, lam):
    sc = make_scenario(mode=mode, lam=lam)
    model = GridModel(sc, P)
    table = vi.value_table(model)
    for t0 in (20.0, 21.5, 23.0, 24.7, 26.0):
        # both totals are summed hour by hour, so equal policies give equal totals
        best = vi.trace_from_table(table, model, model.start_index(t0)).total_cost
        relay = deadband.run_deadband(sc, P, t0, model=model).total_cost
        assert best <= relay + 1e-12 * abs(relay)


# -- blocks ------------------------------------------------------------------------


def test_block_length_one_reduces_to_backups():
    sc = make_scenario(horizon=8, block_length=1, lam=0.5)
    model = GridModel(sc, P)
    t = vi.value_table(model)
    bt = blocks.block_table(model)
    for m in range(8):
        assert np.array_equal(bt.blocks[m].values, t.values[m])
        assert np.array_equal(bt.blocks[m].sequences[:, 0], t.best_action[m])


def test_single_block_equals_vi():
    sc = make_scenario(horizon=4, block_length=4, mode="heating", lam=0.05)
    model = GridModel(sc, P)
    t = vi.value_table(model)
    bt = blocks.block_table(model)
    assert np.array_equal(bt.blocks[0].values, t.values[0])


def test_terminal_block_against_enumeration():
    sc = make_scenario(horizon=4, block_length=4, lam=0.5)
    model = GridModel(sc, P)
    vals, seqs = blocks.solve_block(0, vi.terminal_values(sc), model)
    cand = all_sequences(4)
    costs = sequence_costs(sc, P, model.grid, cand)
    for s in range(model.n):
        best, first, _ = best_with_ties(costs[s], cand)
        assert vals[s] == pytest.approx(best, rel=1e-9)
        assert np.array_equal(seqs[s], first)


def test_interior_block_against_enumeration():
    sc = make_scenario(horizon=12, block_length=4, mode="heating", lam=0.5)
    model = GridModel(sc, P)
    bt = blocks.block_table(model)
    boundary = bt.blocks[2].values
    cand = all_sequences(4)
    costs, landing, alive = sequence_costs(sc, P, model.grid, cand, hour0=4, with_landing=True)
    idx = grid_indices(landing, sc)
    total = costs + np.where(alive, boundary[idx], 0.0)
    for s in range(model.n):
        best, first, _ = best_with_ties(total[s], cand)
        v, seq = bt.blocks[1].lookup(s)
        assert v == pytest.approx(best, rel=1e-9)
        assert np.array_equal(seq, first)


@pytest.mark.parametrize("K", [8, 24])
@pytest.mark.parametrize("mode", ["heating", "cooling"])
@pytest.mark.parametrize("lam", [0.05, 0.5, 0.95])
def test_blocks_identical_to_vi(K, mode, lam):
    sc = make_scenario(horizon=K, mode=mode, lam=lam)
    model = GridModel(sc, P)
    table = vi.value_table(model)
    bt = blocks.block_table(model)
    for m, b in enumerate(bt.blocks):
        assert np.array_equal(b.values, table.values[m * sc.block_length])
    for s in range(model.n):
        assert blocks.trace_from_blocks(bt, model, s) == vi.trace_from_table(table, model, s)


def test_blocks_solve_cost_matches_stitched_value():
    sc = make_scenario(mode="heating", lam=0.5)
    bt, trace = blocks.solve(sc, P, 22.0)
    s0 = GridModel(sc, P).start_index(22.0)
    assert trace.total_cost == pytest.approx(bt.blocks[0].lookup(s0)[0], rel=1e-9)
    assert len(bt.blocks[0].starts) == 1


def test_blocks_rejects_indivisible_horizon():
    sc = make_scenario(horizon=8)
    object.__setattr__(sc, "block_length", 3)  # bypass scenario validation
    with pytest.raises(InvalidArgumentError):
        blocks.solve(sc, P)


def test_missing_block_start_raises():
    sc = make_scenario(horizon=8)
    bt, _ = blocks.solve(sc, P, 23.0)
    with pytest.raises(KeyError):
        bt.blocks[0].lookup(0)


# -- macro ---------------------------------------------------------------------------


@pytest.mark.parametrize("phi", [0.0, 1.0])
def test_macro_endpoints_equal_primitive_composition(phi):
    sc = make_scenario(mode="heating")
    state = ThermalState(21.0, 21.0)
    got, cost = macro.macro_transition(state, phi, 1, sc, P)
    s, total = state, 0.0
    for j in range(4):
        s, c = transition(s, phi, 4 + j, sc, P)
        total += c.weighted
    assert got == s
    assert cost.weighted == total


def test_macro_half_power_costs_half_electricity():
    sc = make_scenario(tariff=Tariff.flat(17.0))
    _, half = macro.macro_transition(ThermalState(23.0, 23.0), 0.5, 0, sc, P)
    _, full = macro.macro_transition(ThermalState(23.0, 23.0), 1.0, 0, sc, P)
    assert half.electricity_cents == 0.5 * full.electricity_cents


def test_macro_rejects_unknown_fraction():
    with pytest.raises(InvalidArgumentError):
        macro.macro_transition(ThermalState(23.0, 23.0), 0.3, 0, make_scenario(), P)


@pytest.mark.parametrize("phi", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_equivalence_classes(phi):
    cls = macro.equivalence_class(phi, 4)
    assert len(cls) == comb(4, int(phi * 4))
    assert list(cls) == sorted(cls)
    assert all(sum(s) == phi * 4 for s in cls)


def test_equivalence_class_requires_whole_hours():
    with pytest.raises(InvalidArgumentError):
        macro.equivalence_class(0.3, 4)


def test_expand_singletons():
    sc = make_scenario()
    st0 = ThermalState(23.0, 23.0)
    assert macro.expand_macro(0.0, st0, 0, sc, P) == (0.0, 0.0, 0.0, 0.0)
    assert macro.expand_macro(1.0, st0, 0, sc, P) == (1.0, 1.0, 1.0, 1.0)


def test_expand_quarter_avoids_peak_hour():
    # electricity only; the first hour of block 1 is the expensive one
    tariff = Tariff(((0, 4, 10.0), (4, 5, 90.0), (5, 24, 10.0)))
    sc = make_scenario(mode="heating", season="spring", lam=1.0, tariff=tariff)
    entry = ThermalState(23.0, 23.0)
    seq = macro.expand_macro(0.25, entry, 1, sc, P)
    assert seq[0] == 0.0 and sum(seq) == 1.0
    members = np.array(macro.equivalence_class(0.25, 4))
    costs = sequence_costs(sc, P, [23.0], members, hour0=4)[0]
    _, first, _ = best_with_ties(costs, members)
    assert tuple(first) == seq


@pytest.mark.parametrize("mode", ["heating", "cooling"])
@pytest.mark.parametrize("lam", [0.05, 0.5, 0.95])
def test_macro_never_beats_blocks(mode, lam):
    sc = make_scenario(mode=mode, lam=lam)
    model = GridModel(sc, P)
    bt = blocks.block_table(model)
    mt = macro.macro_table(model)
    for s in range(0, model.n, 3):
        cost_b = blocks.trace_from_blocks(bt, model, s).total_cost
        cost_m = macro.trace_from_macro(mt, model, s).total_cost
        assert cost_m >= cost_b - 1e-9 * abs(cost_b)


@pytest.mark.parametrize("phi", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_macro_expansion_preserves_on_hours(phi):
    sc = make_scenario(mode="heating", lam=0.5)
    model = GridModel(sc, P)
    mt = macro.macro_table(model)
    for s in range(0, model.n, 6):
        for m in range(sc.n_blocks):
            seq = macro.expand_index(phi, s, m, model, mt.downstream(m))
            assert sum(seq) == phi * 4
            assert seq in macro.equivalence_class(phi, 4)


def test_macro_gap_zero_when_optimum_is_all_off():
    # constant mild weather and electricity-only cost: staying off is optimal
    sc = Scenario(weather=(23.0,) * 25, lam=1.0, initial_t_in_c=23.0)
    b_tab, b_trace = blocks.solve(sc, P)
    assert b_trace.on_hours == 0
    _, m_trace = macro.solve(sc, P)
    assert m_trace.total_cost == b_trace.total_cost


def test_binary_macro_equals_block_constant_enumeration():
    sc = make_scenario(mode="heating", lam=0.5, macro_fractions=(0.0, 1.0))
    model = GridModel(sc, P)
    mt = macro.macro_table(model)
    choices = np.array(list(itertools.product((0.0, 1.0), repeat=sc.n_blocks)))
    seqs = np.repeat(choices, sc.block_length, axis=1)
    costs = sequence_costs(sc, P, model.grid, seqs)
    for s in range(model.n):
        best, first, _ = best_with_ties(costs[s], seqs)
        trace = macro.trace_from_macro(mt, model, s)
        assert trace.total_cost == pytest.approx(best, rel=1e-9)
        assert np.array_equal(trace.action, first)


# -- deadband ------------------------------------------------------------------------


def test_relay_cooling_examples():
    band = deadband.DEFAULT_BANDS["cooling"]
    assert deadband.relay_action(27.0, 0.0, "cooling", band) == 1.0
    assert deadband.relay_action(24.0, 0.0, "cooling", band) == 0.0
    assert deadband.relay_action(24.0, 1.0, "cooling", band) == 1.0
    assert deadband.relay_action(21.9, 1.0, "cooling", band) == 0.0


def test_relay_heating_single_on_run_between_crossings():
    band = deadband.DEFAULT_BANDS["heating"]
    readings = [21.0, 20.4, 19.8, 20.3, 21.2, 21.9, 22.3, 21.5, 20.5]
    actions, prev = [], 0.0
    for t in readings:
        prev = deadband.relay_action(t, prev, "heating", band)
        actions.append(prev)
    runs = sum(1 for a, b in zip([0.0] + actions, actions) if b == 1.0 and a == 0.0)
    assert runs == 1
    assert actions == [0, 0, 1, 1, 1, 1, 0, 0, 0]


@given(st.lists(st.floats(20.01, 21.99), min_size=1, max_size=30), st.sampled_from([0.0, 1.0]))
def test_relay_never_switches_inside_band(readings, start):
    prev = start
    for t in readings:
        nxt = deadband.relay_action(t, prev, "heating", (20.0, 22.0))
        assert nxt == prev
        prev = nxt


def test_relay_rejects_unknown_mode():
    with pytest.raises(InvalidArgumentError):
        deadband.relay_action(22.0, 0.0, "fan", (20.0, 22.0))


def test_deadband_uses_shared_transitions():
    sc = make_scenario(mode="heating")
    model = GridModel(sc, P)
    trace = deadband.run_deadband(sc, P, 22.0, model=model)
    again = evaluate_actions(model, model.start_index(22.0), trace.action)
    assert again == trace
    assert trace.action[0] == 0.0
