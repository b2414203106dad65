"""Optimizer oracles: diversity metrics, sorting, operators, brute force."""

import math

import numpy as np
import pytest

from aquasentry.engine import EMPTY_PROTOCOL, EmergencySimulator, evaluate_protocol
from aquasentry.fixtures import toy6, toy6_timeline
from aquasentry.optimizer import (
    GASettings,
    OptimizerError,
    ProtocolOptimizer,
    crowding_distances,
    distance_matrix,
    diversity_scores,
    dominates,
    fast_non_dominated_sort,
    polynomial_mutation,
    protocol_distance,
    reflect_into,
    sbx_crossover,
)
from aquasentry.units import parse_clock


# ---------------------------------------------------------------------------
# Reference (brute-force) implementations used as oracles
# ---------------------------------------------------------------------------


def brute_distance(a, b):
    total = 0.0
    for k in range(a.shape[0]):
        dx = a[k, 0] - b[k, 0]
        dy = a[k, 1] - b[k, 1]
        total += math.sqrt(dx * dx + dy * dy)
    return total


def brute_metrics(genomes, utim, metric):
    n = len(genomes)
    rows = [[brute_distance(genomes[i], genomes[j]) for j in range(n)] for i in range(n)]
    if metric == "DNN":
        return np.array([min(rows[i][j] for j in range(n) if j != i) for i in range(n)])
    if metric == "ADS":
        # Same summation primitive as the implementation so the comparison
        # is exact; the distances themselves are recomputed independently.
        return np.array([np.sum(np.array(rows[i])) / n for i in range(n)])
    best = min(range(n), key=lambda i: (utim[i], i))
    return np.array([rows[i][best] for i in range(n)])


def reference_ranks(utim, div):
    n = len(utim)
    remaining = set(range(n))
    rank = np.full(n, -1, dtype=int)
    level = 0
    while remaining:
        front = [
            i
            for i in remaining
            if not any(
                dominates(utim[j], div[j], utim[i], div[i])
                for j in remaining
                if j != i
            )
        ]
        for i in front:
            rank[i] = level
        remaining -= set(front)
        level += 1
    return rank


# ---------------------------------------------------------------------------
# Distance and diversity
# ---------------------------------------------------------------------------


def test_protocol_distance_basics():
    a = np.array([[0.0, 0.0], [5.0, 5.0]])
    assert protocol_distance(a, a) == 0.0
    b = np.array([[3.0, 4.0], [5.0, 5.0]])
    assert protocol_distance(a, b) == 5.0
    rng = np.random.default_rng(3)
    for _ in range(50):
        x = rng.uniform(-100, 100, size=(4, 2))
        y = rng.uniform(-100, 100, size=(4, 2))
        assert protocol_distance(x, y) == protocol_distance(y, x)
    with pytest.raises(OptimizerError):
        protocol_distance(a, np.zeros((3, 2)))


def test_diversity_on_a_line_matches_hand_values():
    genomes = np.array([[[0.0, 0.0]], [[10.0, 0.0]], [[25.0, 0.0]]])
    utim = np.array([5.0, 9.0, 7.0])
    assert diversity_scores(genomes, utim, "DNN")[1] == 10.0
    assert diversity_scores(genomes, utim, "ADS")[1] == (10.0 + 0.0 + 15.0) / 3.0
    dbs = diversity_scores(genomes, utim, "DBS")
    assert dbs[0] == 0.0  # the best member's distance to itself
    assert dbs[1] == 10.0 and dbs[2] == 25.0


def test_diversity_metrics_match_brute_force_exactly():
    rng = np.random.default_rng(11)
    for trial in range(1000):
        n = int(rng.integers(2, 14))
        slots = int(rng.integers(1, 5))
        genomes = rng.uniform(-500.0, 500.0, size=(n, slots, 2))
        # Integer-valued UTIM forces occasional argmin ties for DBS.
        utim = rng.integers(0, 4, size=n).astype(float)
        for metric in ("DNN", "ADS", "DBS"):
            got = diversity_scores(genomes, utim, metric)
            want = brute_metrics(genomes, utim, metric)
            assert np.array_equal(got, want), (trial, metric)


def test_identical_genomes_have_zero_dnn():
    genomes = np.zeros((4, 2, 2))
    dnn = diversity_scores(genomes, np.arange(4.0), "DNN")
    assert (dnn == 0.0).all()


# ---------------------------------------------------------------------------
# Dominance and sorting
# ---------------------------------------------------------------------------


def test_dominates_table():
    assert dominates(10.0, 5.0, 12.0, 4.0)
    assert not dominates(10.0, 5.0, 10.0, 5.0)
    # Genuine trade-off: better UTIM on one side, better diversity on the
    # other; neither dominates.
    assert not dominates(10.0, 5.0, 9.0, 4.0)
    assert not dominates(9.0, 4.0, 10.0, 5.0)
    # Better in both objectives (UTIM minimized, diversity maximized).
    assert dominates(9.0, 9.0, 10.0, 5.0)
    assert dominates(10.0, 5.0, 10.0, 4.0)  # equal UTIM, strictly higher diversity


def test_non_dominated_sort_matches_reference_sorter():
    rng = np.random.default_rng(23)
    for trial in range(1000):
        n = int(rng.integers(2, 24))
        # Small integer grids create plenty of duplicates and ties.
        utim = rng.integers(0, 6, size=n).astype(float)
        div = rng.integers(0, 6, size=n).astype(float)
        got = fast_non_dominated_sort(utim, div)
        want = reference_ranks(utim, div)
        assert np.array_equal(got, want), trial


def test_crowding_distance_hand_example():
    utim = np.array([1.0, 2.0, 4.0, 8.0])
    div = np.array([10.0, 7.0, 5.0, 1.0])
    crowd = crowding_distances(utim, div)
    assert crowd[0] == np.inf and crowd[3] == np.inf
    assert crowd[1] == pytest.approx((4.0 - 1.0) / 7.0 + (10.0 - 5.0) / 9.0)
    assert crowd[2] == pytest.approx((8.0 - 2.0) / 7.0 + (7.0 - 1.0) / 9.0)
    assert (crowding_distances(utim[:2], div[:2]) == np.inf).all()


# ---------------------------------------------------------------------------
# Variation operators
# ---------------------------------------------------------------------------


def test_reflect_into_folds_back_into_range():
    assert reflect_into(5.0, 0.0, 10.0) == 5.0
    assert reflect_into(12.0, 0.0, 10.0) == 8.0
    assert reflect_into(-3.0, 0.0, 10.0) == 3.0
    assert reflect_into(25.0, 0.0, 10.0) == 5.0
    assert reflect_into(7.0, 7.0, 7.0) == 7.0


def test_operators_respect_bounds():
    rng = np.random.default_rng(5)
    lo = np.tile(np.array([0.0, -50.0]), (3, 1))
    hi = np.tile(np.array([100.0, 50.0]), (3, 1))
    for _ in range(200):
        a = rng.uniform(lo, hi)
        b = rng.uniform(lo, hi)
        c1, c2 = sbx_crossover(rng, a, b, 15.0, lo, hi)
        m = polynomial_mutation(rng, c1, 0.5, 10.0, lo, hi)
        for g in (c1, c2, m):
            assert (g >= lo).all() and (g <= hi).all()
    # Originals are never modified in place.
    a = np.full((3, 2), 10.0)
    b = np.full((3, 2), 20.0)
    sbx_crossover(rng, a, b, 15.0, lo, hi)
    assert (a == 10.0).all() and (b == 20.0).all()


# ---------------------------------------------------------------------------
# Whole-generation behaviour
# ---------------------------------------------------------------------------


def coordinate_fitness(protocol):
    """Engine-free deterministic stand-in: prefers westernmost nodes."""
    nodes = protocol.flush_nodes + protocol.dye_nodes
    return sum(float(ord(c)) for n in nodes for c in n)


def test_settings_validation():
    with pytest.raises(OptimizerError):
        GASettings(population_size=7)
    with pytest.raises(OptimizerError):
        GASettings(crossover_rate=1.5)
    with pytest.raises(OptimizerError):
        GASettings(mutation_rate=-0.1)
    with pytest.raises(OptimizerError):
        GASettings(diversity_metric="XYZ")
    with pytest.raises(OptimizerError):
        GASettings(n_flush=0, n_dye=0)


def test_no_variation_identical_population_is_closed():
    net = toy6()
    settings = GASettings(population_size=8, crossover_rate=0.0, mutation_rate=0.0, seed=1)
    opt = ProtocolOptimizer(net, settings)
    opt.initialize(coordinate_fitness)
    genome = opt.population[0].genome.copy()
    for ind in opt.population:
        ind.genome = genome.copy()
        ind.protocol = opt.decode(genome)
        ind.utim_g = coordinate_fitness(ind.protocol)
    opt._refresh_ranks(opt.population)
    opt.step_generation(coordinate_fitness)
    assert len(opt.population) == 8
    for ind in opt.population:
        np.testing.assert_array_equal(ind.genome, genome)


def test_decoded_protocols_always_use_intermediate_nodes():
    net = toy6()
    allowed = {j.id for j in net.intermediate_junctions()}
    opt = ProtocolOptimizer(net, GASettings(population_size=10, seed=2))
    opt.initialize(coordinate_fitness)
    for _ in range(3):
        opt.step_generation(coordinate_fitness)
    for ind in opt.population:
        assert set(ind.protocol.flush_nodes) <= allowed
        assert set(ind.protocol.dye_nodes) <= allowed


def test_same_seed_reproduces_trajectory():
    net = toy6()
    runs = []
    for _ in range(2):
        opt = ProtocolOptimizer(net, GASettings(population_size=12, seed=77))
        opt.initialize(coordinate_fitness)
        for _ in range(3):
            opt.step_generation(coordinate_fitness)
        runs.append(np.stack([ind.genome for ind in opt.population]))
    np.testing.assert_array_equal(runs[0], runs[1])


def test_incumbent_utim_never_increases_under_frozen_fitness():
    net = toy6()
    for metric in ("DNN", "ADS", "DBS"):
        opt = ProtocolOptimizer(
            net, GASettings(population_size=12, seed=4, diversity_metric=metric)
        )
        opt.initialize(coordinate_fitness)
        trace = [opt.incumbent().utim_g]
        for _ in range(15):
            opt.step_generation(coordinate_fitness)
            trace.append(opt.incumbent().utim_g)
        assert all(b <= a for a, b in zip(trace, trace[1:])), (metric, trace)


def test_beats_brute_force_on_toy_quickly():
    # Real fitness, 1 flushing slot over 6 candidate hydrants: the search
    # must land on the exhaustive optimum in very few generations.
    net = toy6()
    base = EmergencySimulator(net)
    base.set_scenario(toy6_timeline().entries[0].scenario)
    t_now = parse_clock("06:00")
    base.advance_to(t_now)

    cache = {}

    def fitness(protocol):
        key = (protocol.flush_nodes, protocol.dye_nodes)
        if key not in cache:
            cache[key] = evaluate_protocol(base, protocol, t_now).utim_g()
        return cache[key]

    from aquasentry.engine import ResponseProtocol

    exhaustive = {
        node: fitness(ResponseProtocol((node,), ()))
        for node in ("IN1", "IN2", "IN3", "IN4", "IN5", "IN6")
    }
    best_node = min(exhaustive, key=exhaustive.get)
    assert best_node == "IN5"

    for seed in (0, 1, 2):
        opt = ProtocolOptimizer(
            net, GASettings(population_size=12, n_flush=1, n_dye=0, seed=seed)
        )
        opt.initialize(fitness)
        found = opt.incumbent().utim_g == exhaustive[best_node]
        for _ in range(30):
            if found:
                break
            opt.step_generation(fitness)
            found = opt.incumbent().utim_g == exhaustive[best_node]
        assert found, seed
