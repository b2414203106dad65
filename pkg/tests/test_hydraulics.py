"""Hydraulic solver: headloss law, continuity, emitters, pumps, tanks."""

import math

import numpy as np
import pytest

from aquasentry import fixtures, units
from aquasentry.hydraulics import (
    HydraulicModel,
    advance_tank_levels,
    emitter_flow_m3s,
    fit_pump_curve,
    run_extended_period,
    solve_snapshot,
)
from aquasentry.netmodel import Junction, Network, NetworkIndex, Pipe, Pump, Reservoir, Tank


def hazen_williams_headloss(length_m, diam_mm, c, q_m3s):
    """Independent textbook form, SI."""
    d = diam_mm / 1000.0
    return 10.667 * length_m / (c**1.852 * d**4.871) * abs(q_m3s) ** 1.852


def node_residuals_m3s(net, snap):
    """Continuity residual at every junction, recomputed from scratch."""
    index = NetworkIndex(net)
    res = -snap.demand.copy() - snap.emitter_flow
    for k in range(index.n_links):
        s, e = index.link_start[k], index.link_end[k]
        if s < index.n_junctions:
            res[s] -= snap.flow[k]
        if e < index.n_junctions:
            res[e] += snap.flow[k]
    return res


def test_single_pipe_matches_hand_headloss():
    net = fixtures.onepipe(demand_lps=35.34)
    snap = solve_snapshot(net)
    expected = 50.0 - hazen_williams_headloss(1000.0, 300.0, 130.0, 35.34e-3)
    assert snap.head[0] == pytest.approx(expected, rel=1e-3)  # acceptance bound is 0.1%
    assert snap.head[0] == pytest.approx(expected, rel=1e-12)  # solver is exact here
    assert abs(node_residuals_m3s(net, snap)).max() <= 1e-9


def test_continuity_toy_and_town_all_hours():
    for name in ("toy6", "town"):
        net = getattr(fixtures, name)()
        for hour in (0, 8, 12, 19):
            snap = solve_snapshot(net, hour=hour)
            assert abs(node_residuals_m3s(net, snap)).max() <= 1e-9, (name, hour)


def test_parallel_pipes_split_by_resistance():
    # Q1/Q2 = (r2/r1)^(1/1.852); equal length/roughness, diameters 300/200.
    net = Network(
        junctions=(Junction("J1", 1000.0, 0.0, 0.0, 40.0),),
        reservoirs=(Reservoir("R1", 0.0, 0.0, 60.0),),
        pipes=(
            Pipe("PA", "R1", "J1", 900.0, 300.0, 120.0),
            Pipe("PB", "R1", "J1", 900.0, 200.0, 120.0),
        ),
    )
    snap = solve_snapshot(net)
    ratio = snap.flow[0] / snap.flow[1]
    expected = (0.3 / 0.2) ** (4.871 / 1.852)
    assert ratio == pytest.approx(expected, rel=1e-6)
    assert snap.flow[0] + snap.flow[1] == pytest.approx(0.040, abs=1e-12)


def test_emitter_formula_value():
    # 166.5 gpm/psi^0.5 hydrant at 70 psi of pressure head.
    p_m = 70.0 * units.PSI_TO_M
    q = emitter_flow_m3s(166.5, p_m)
    assert q == pytest.approx(166.5 * 6.30902e-5 * math.sqrt(70.0), rel=1e-12)
    assert q * 1000.0 == pytest.approx(87.88, abs=0.01)
    assert emitter_flow_m3s(166.5, 0.0) == 0.0
    assert emitter_flow_m3s(166.5, -5.0) == 0.0


def test_solved_emitter_satisfies_formula_and_continuity():
    net = fixtures.toy6()
    snap = solve_snapshot(net, hour=9, emitters={"IN3": 166.5})
    index = NetworkIndex(net)
    i = index.node_index["IN3"]
    pressure = snap.head[i] - 0.0
    assert snap.emitter_flow[i] == pytest.approx(emitter_flow_m3s(166.5, pressure), abs=1e-12)
    assert snap.emitter_flow[i] > 0.01  # tens of L/s, not a degenerate solve
    assert abs(node_residuals_m3s(net, snap)).max() <= 1e-9


def test_emitter_closed_when_pressure_nonpositive():
    net = Network(
        junctions=(Junction("J1", 100.0, 0.0, 20.0, 0.0),),  # elevation == source head
        reservoirs=(Reservoir("R1", 0.0, 0.0, 20.0),),
        pipes=(Pipe("P1", "R1", "J1", 100.0, 200.0, 130.0),),
    )
    snap = solve_snapshot(net, emitters={"J1": 166.5})
    assert snap.emitter_flow[0] == 0.0


def test_fit_pump_curve_exact_through_points():
    h0, r, w = fit_pump_curve(((0.0, 40.0), (20.0, 32.0), (40.0, 12.0)))
    assert h0 == 40.0
    for q_lps, h in ((20.0, 32.0), (40.0, 12.0)):
        q = q_lps * 1e-3
        assert h0 - r * q**w == pytest.approx(h, rel=1e-12)


def test_pump_operating_point_lies_on_curve():
    net = Network(
        junctions=(
            Junction("J2", 50.0, 0.0, 0.0, 0.0),
            Junction("J1", 100.0, 0.0, 0.0, 25.0),
        ),
        reservoirs=(Reservoir("R1", 0.0, 0.0, 10.0),),
        pipes=(Pipe("P1", "J2", "J1", 400.0, 250.0, 130.0),),
        pumps=(Pump("PU1", "R1", "J2", ((0.0, 40.0), (20.0, 32.0), (40.0, 12.0))),),
    )
    snap = solve_snapshot(net)
    index = NetworkIndex(net)
    k = index.link_index["PU1"]
    q = snap.flow[k]
    assert q == pytest.approx(0.025, abs=1e-12)  # demand-driven: pump carries it all
    h0, r, w = fit_pump_curve(net.pumps[0].curve)
    gain = snap.head[index.node_index["J2"]] - 10.0
    assert gain == pytest.approx(h0 - r * q**w, rel=1e-9)


def test_tank_forward_euler_update():
    # 10 L/s net inflow into a 100 m^2 tank for one hour: +0.36 m.
    net = Network(
        junctions=(Junction("J1", 0.0, 0.0, 0.0, 0.0),),
        reservoirs=(Reservoir("R1", -10.0, 0.0, 30.0),),
        tanks=(Tank("T1", 10.0, 0.0, 0.0, math.sqrt(400.0 / math.pi), 0.5, 2.0, 9.0),),
        pipes=(
            Pipe("P1", "R1", "J1", 100.0, 200.0, 130.0),
            Pipe("P2", "J1", "T1", 100.0, 200.0, 130.0),
        ),
    )
    index = NetworkIndex(net)
    assert index.tank_area[0] == pytest.approx(100.0, rel=1e-12)
    level, notes = advance_tank_levels(index, np.array([2.0]), np.array([0.010]), 3600.0)
    assert level[0] == pytest.approx(2.36, abs=1e-12)
    assert notes == ()


def test_tank_clamps_at_max_with_note():
    net = fixtures.town()
    index = NetworkIndex(net)
    level, notes = advance_tank_levels(index, np.array([4.7]), np.array([0.050]), 3600.0)
    assert level[0] == index.tank_level_max[0]
    assert any("clamped at maximum" in n for n in notes)


def test_extended_period_tank_levels_follow_net_inflow():
    net = fixtures.town()
    index = NetworkIndex(net)
    model = HydraulicModel(index)
    slices = run_extended_period(net, hours=6)
    for a, b in zip(slices, slices[1:]):
        inflow = model.tank_net_inflow(a.snapshot)
        expected = a.snapshot.tank_level + inflow * 3600.0 / index.tank_area
        expected = np.clip(expected, index.tank_level_min, index.tank_level_max)
        assert b.snapshot.tank_level == pytest.approx(expected, abs=1e-12)


def test_pattern_demand_applied_per_hour():
    net = fixtures.toy6()
    snap3 = solve_snapshot(net, hour=3)
    snap8 = solve_snapshot(net, hour=8)
    mult3, mult8 = net.patterns["PR"][3], net.patterns["PR"][8]
    assert snap3.demand.sum() == pytest.approx(16.0e-3 * mult3, rel=1e-12)
    assert snap8.demand.sum() == pytest.approx(16.0e-3 * mult8, rel=1e-12)


def test_warm_start_reaches_same_solution():
    net = fixtures.town()
    index = NetworkIndex(net)
    model = HydraulicModel(index)
    demand = index.demands_at_hour(9)
    cold = model.solve(demand)
    warm = model.solve(demand, q_init=cold.flow)
    assert warm.iterations <= cold.iterations
    assert np.abs(warm.head - cold.head).max() < 1e-8
