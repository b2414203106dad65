"""Network model: formats, validation, snapping."""

import math

import pytest

from aquasentry import fixtures
from aquasentry.netmodel import (
    DEFAULT_CLASS_FRACTIONS,
    Junction,
    Network,
    NetworkSemanticError,
    NetworkSyntaxError,
    Pipe,
    Reservoir,
    UnsupportedFeatureError,
    nearest_intermediate_node,
    parse_inp_subset,
    parse_native,
    serialize_native,
    validate,
)


def test_native_round_trip_toy6():
    net = fixtures.toy6()
    assert parse_native(serialize_native(net)) == net


def test_native_round_trip_town():
    net = fixtures.town()
    assert parse_native(serialize_native(net)) == net


def test_native_round_trip_preserves_awkward_floats():
    net = fixtures.onepipe(demand_lps=35.340000000000003)
    again = parse_native(serialize_native(net))
    assert again.junctions[0].base_demand == 35.340000000000003


def test_native_syntax_error_reports_line():
    text = "[NODES]\nJ1 0 0 0 1 - - 0\nJ2 bogus 0 0 1 - - 0\n"
    with pytest.raises(NetworkSyntaxError) as err:
        parse_native(text)
    assert err.value.line == 3


def test_native_unknown_section_rejected():
    with pytest.raises(NetworkSyntaxError):
        parse_native("[WIDGETS]\nx 1\n")


def test_unknown_pattern_reference_rejected():
    net = Network(
        junctions=(Junction("J1", 0, 0, 0, 1.0, pattern="P9"),),
        reservoirs=(Reservoir("R1", 0, 0, 10.0),),
        pipes=(Pipe("P1", "R1", "J1", 100.0, 100.0, 100.0),),
    )
    with pytest.raises(NetworkSemanticError) as err:
        validate(net)
    assert "P9" in str(err.value) and "J1" in str(err.value)


def test_disconnected_node_rejected():
    net = Network(
        junctions=(Junction("J1", 0, 0, 0, 1.0), Junction("LONER", 9, 9, 0, 0.0)),
        reservoirs=(Reservoir("R1", 0, 0, 10.0),),
        pipes=(Pipe("P1", "R1", "J1", 100.0, 100.0, 100.0),),
    )
    with pytest.raises(NetworkSemanticError) as err:
        validate(net)
    assert "LONER" in str(err.value)


def test_tank_level_ordering_enforced():
    import dataclasses

    net = fixtures.town()
    bad = dataclasses.replace(net.tanks[0], level_init=0.2)  # below level_min
    with pytest.raises(NetworkSemanticError):
        validate(dataclasses.replace(net, tanks=(bad,)))


def test_intermediate_junctions_are_zero_demand():
    net = fixtures.toy6()
    ids = sorted(j.id for j in net.intermediate_junctions())
    assert ids == ["IN1", "IN2", "IN3", "IN4", "IN5", "IN6"]


def test_default_class_fractions():
    # Non-consumptive demand fractions for the four standard classes.
    assert DEFAULT_CLASS_FRACTIONS["residential-low"] == 0.60
    assert DEFAULT_CLASS_FRACTIONS["residential-medium"] == 0.51
    assert DEFAULT_CLASS_FRACTIONS["residential-high"] == 0.43
    assert DEFAULT_CLASS_FRACTIONS["industrial"] == 0.96


def test_nearest_intermediate_matches_brute_force():
    net = fixtures.town()
    inters = net.intermediate_junctions()
    import random

    rnd = random.Random(7)
    x0, y0, x1, y1 = net.bounding_box()
    for _ in range(200):
        p = (rnd.uniform(x0 - 100, x1 + 100), rnd.uniform(y0 - 100, y1 + 100))
        oracle = min(
            inters, key=lambda j: (math.hypot(j.x - p[0], j.y - p[1]), j.id)
        ).id
        assert nearest_intermediate_node(net, p) == oracle


def test_nearest_intermediate_tie_breaks_lexicographically():
    net = Network(
        junctions=(
            Junction("J1", 0.0, 0.0, 0.0, 1.0),
            Junction("IN10", -50.0, 0.0, 0.0, 0.0),
            Junction("IN02", 50.0, 0.0, 0.0, 0.0),
        ),
        reservoirs=(Reservoir("R1", 0.0, 100.0, 10.0),),
        pipes=(
            Pipe("P1", "R1", "J1", 100.0, 100.0, 100.0),
            Pipe("P2", "J1", "IN10", 50.0, 100.0, 100.0),
            Pipe("P3", "J1", "IN02", 50.0, 100.0, 100.0),
        ),
    )
    # (0, 0) is exactly equidistant from IN02 and IN10.
    assert nearest_intermediate_node(net, (0.0, 0.0)) == "IN02"


INP_GPM = """
[TITLE]
gpm import check
[JUNCTIONS]
 J1  328.084  15.85
[RESERVOIRS]
 R1  164.042
[PIPES]
 P1  R1  J1  3280.84  11.811  130
[COORDINATES]
 J1  100  0
 R1  0  0
[OPTIONS]
 UNITS  GPM
 HEADLOSS  H-W
[END]
"""


def test_inp_gpm_unit_conversion():
    net = parse_inp_subset(INP_GPM)
    j = net.junctions[0]
    # 15.85 gpm through the pinned conversion constant.
    assert j.base_demand == pytest.approx(15.85 * 6.30902e-5 * 1000.0, rel=1e-12)
    assert j.base_demand == pytest.approx(0.99997967, abs=1e-7)
    assert j.elevation == pytest.approx(328.084 * 0.3048, rel=1e-12)  # ft -> m
    p = net.pipes[0]
    assert p.length == pytest.approx(1000.0, abs=0.01)  # 3280.84 ft
    assert p.diameter == pytest.approx(300.0, abs=0.01)  # 11.811 in


def test_inp_valves_section_rejected_by_name():
    text = INP_GPM.replace("[OPTIONS]", "[VALVES]\n V1 J1 R1 11.811 PRV 20 0\n[OPTIONS]")
    with pytest.raises(UnsupportedFeatureError) as err:
        parse_inp_subset(text)
    assert "VALVES" in str(err.value)


def test_inp_cosmetic_section_skipped_with_warning():
    text = INP_GPM.replace("[OPTIONS]", "[LABELS]\n 10 10 \"depot\"\n[OPTIONS]")
    with pytest.warns(UserWarning, match="LABELS"):
        net = parse_inp_subset(text)
    assert len(net.junctions) == 1


INP_LPS_PUMP = """
[JUNCTIONS]
 J1  5  10
[RESERVOIRS]
 R1  2
[PIPES]
 P1  J2  J1  800  200  120
[JUNCTIONS]
 J2  3
[PUMPS]
 PU1  R1  J2  HEAD  C1
[CURVES]
 C1  0  40
 C1  20  32
 C1  40  12
[PATTERNS]
 PA1  1 1 1 1 1 1 1 1 1 1 1 1
 PA1  1 1 1 1 1 1 1 1 1 1 1 1
[COORDINATES]
 J1  200  0
 J2  100  0
 R1  0  0
[OPTIONS]
 UNITS  LPS
"""


def test_inp_lps_pump_and_split_pattern():
    net = parse_inp_subset(INP_LPS_PUMP)
    assert net.pumps[0].curve == ((0.0, 40.0), (20.0, 32.0), (40.0, 12.0))
    assert len(net.patterns["PA1"]) == 24


def test_inp_single_point_pump_curve_expanded():
    text = INP_LPS_PUMP.replace(" C1  0  40\n C1  20  32\n C1  40  12\n", " C1  30  24\n")
    net = parse_inp_subset(text)
    (q0, h0), (q1, h1), (q2, h2) = net.pumps[0].curve
    assert (q0, h0) == (0.0, 32.0)  # 4/3 of design head
    assert (q1, h1) == (30.0, 24.0)
    assert (q2, h2) == (60.0, 0.0)


def test_serialize_native_is_stable():
    a = serialize_native(fixtures.town())
    b = serialize_native(fixtures.town())
    assert a == b
