"""Response-protocol search: NSGA-II with an artificial diversity objective.

The search space is continuous: a genome is one (x, y) coordinate pair per
response slot (flushing slots first, then dye slots), bounded by the network
bounding box.  Genomes are decoded by snapping every slot to the nearest
intermediate junction, which is where hydrants and injection taps live.

The true objective is the predicted ultimate ingested mass (UTIM, grams,
minimized).  Because the emergency environment keeps changing — scenario
updates, executed protocols, the advancing clock — a converged population
would be stuck in a stale optimum; to stay adaptable the optimizer
*multiobjectivizes*: it adds population diversity as an artificial second
objective (maximized) and runs plain NSGA-II on the pair.  Three diversity
measures are supported:

* ``DNN`` — distance to the nearest neighbour,
* ``ADS`` — average distance to all members (self included),
* ``DBS`` — distance to the current best (minimum-UTIM) member.

Distances between protocols are the sum over corresponding slots of the
Euclidean distance between slot coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .engine import ResponseProtocol
from .netmodel import Network, nearest_intermediate_node

DIVERSITY_METRICS = ("DNN", "ADS", "DBS")


class OptimizerError(Exception):
    pass


@dataclass(frozen=True)
class GASettings:
    population_size: int = 50
    crossover_rate: float = 0.85
    mutation_rate: float = 0.04
    sbx_index: float = 15.0
    mutation_index: float = 10.0
    diversity_metric: str = "DNN"
    n_flush: int = 3
    n_dye: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise OptimizerError("population size must be even and at least 2")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise OptimizerError(f"{name} must be in [0, 1], got {rate}")
        if self.diversity_metric not in DIVERSITY_METRICS:
            raise OptimizerError(
                f"unknown diversity metric {self.diversity_metric!r}; "
                f"choose one of {', '.join(DIVERSITY_METRICS)}"
            )
        if self.n_flush < 0 or self.n_dye < 0 or self.n_flush + self.n_dye == 0:
            raise OptimizerError("need at least one response slot")

    @property
    def n_slots(self) -> int:
        return self.n_flush + self.n_dye


@dataclass
class Individual:
    genome: np.ndarray  # (n_slots, 2) coordinates, metres
    protocol: ResponseProtocol
    utim_g: float = np.nan
    diversity: float = np.nan
    rank: int = -1
    crowding: float = 0.0


FitnessFn = Callable[[ResponseProtocol], float]


# ---------------------------------------------------------------------------
# Distances, diversity, dominance
# ---------------------------------------------------------------------------


def protocol_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Sum over corresponding slots of the Euclidean slot distance."""
    if a.shape != b.shape:
        raise OptimizerError(f"mismatched slot structure: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2).sum())


def distance_matrix(genomes: np.ndarray) -> np.ndarray:
    """Pairwise protocol distances for a (n, slots, 2) genome stack."""
    d = genomes[:, None, :, :] - genomes[None, :, :, :]
    return np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2).sum(axis=2)


def diversity_scores(genomes: np.ndarray, utim: np.ndarray, metric: str) -> np.ndarray:
    """Per-member diversity of the set under consideration."""
    n = len(genomes)
    if n < 2:
        return np.zeros(n)
    dist = distance_matrix(genomes)
    if metric == "DNN":
        np.fill_diagonal(dist, np.inf)
        return dist.min(axis=1)
    if metric == "ADS":
        # The average runs over all members including self (distance 0).
        return dist.sum(axis=1) / n
    if metric == "DBS":
        return dist[:, int(np.argmin(utim))]
    raise OptimizerError(f"unknown diversity metric {metric!r}")


def dominates(utim_a: float, div_a: float, utim_b: float, div_b: float) -> bool:
    """Minimize UTIM, maximize diversity; strict in at least one."""
    return (utim_a <= utim_b and div_a >= div_b) and (utim_a < utim_b or div_a > div_b)


def fast_non_dominated_sort(utim: np.ndarray, div: np.ndarray) -> np.ndarray:
    """Deb's fast non-dominated sort; returns a 0-based rank per member."""
    n = len(utim)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = np.zeros(n, dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(utim[i], div[i], utim[j], div[j]):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif dominates(utim[j], div[j], utim[i], div[i]):
                dominated_by[j].append(i)
                domination_count[i] += 1
    rank = np.full(n, -1, dtype=int)
    front = [i for i in range(n) if domination_count[i] == 0]
    level = 0
    while front:
        nxt: list[int] = []
        for i in front:
            rank[i] = level
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        front = sorted(nxt)
        level += 1
    return rank


def crowding_distances(utim: np.ndarray, div: np.ndarray) -> np.ndarray:
    """Crowding distance within one front (pass front members only)."""
    n = len(utim)
    crowd = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for obj in (utim, div):
        order = np.argsort(obj, kind="stable")
        span = obj[order[-1]] - obj[order[0]]
        crowd[order[0]] = np.inf
        crowd[order[-1]] = np.inf
        if span > 0.0:
            gaps = (obj[order[2:]] - obj[order[:-2]]) / span
            crowd[order[1:-1]] += gaps
    return crowd


# ---------------------------------------------------------------------------
# Variation operators
# ---------------------------------------------------------------------------


def reflect_into(x: float, lo: float, hi: float) -> float:
    """Fold a coordinate back into [lo, hi] (triangular-wave reflection)."""
    if lo == hi:
        return lo
    width = hi - lo
    t = (x - lo) % (2.0 * width)
    return lo + (t if t <= width else 2.0 * width - t)


def sbx_crossover(
    rng: np.random.Generator,
    a: np.ndarray,
    b: np.ndarray,
    eta: float,
    lo: np.ndarray,
    hi: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover on flattened coordinate vectors."""
    c1, c2 = a.copy(), b.copy()
    fa, fb = c1.ravel(), c2.ravel()
    flo, fhi = lo.ravel(), hi.ravel()
    for i in range(fa.size):
        if rng.random() > 0.5:
            continue
        y1, y2 = fa[i], fb[i]
        if abs(y1 - y2) < 1e-12:
            continue
        u = rng.random()
        if u <= 0.5:
            beta = (2.0 * u) ** (1.0 / (eta + 1.0))
        else:
            beta = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0))
        mean = 0.5 * (y1 + y2)
        spread = 0.5 * beta * abs(y2 - y1)
        fa[i] = reflect_into(mean - spread, flo[i], fhi[i])
        fb[i] = reflect_into(mean + spread, flo[i], fhi[i])
    return c1, c2


def polynomial_mutation(
    rng: np.random.Generator,
    genome: np.ndarray,
    rate: float,
    eta: float,
    lo: np.ndarray,
    hi: np.ndarray,
) -> np.ndarray:
    out = genome.copy()
    flat = out.ravel()
    flo, fhi = lo.ravel(), hi.ravel()
    for i in range(flat.size):
        if rng.random() >= rate:
            continue
        u = rng.random()
        if u < 0.5:
            delta = (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0
        else:
            delta = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
        flat[i] = reflect_into(flat[i] + delta * (fhi[i] - flo[i]), flo[i], fhi[i])
    return out


# ---------------------------------------------------------------------------
# The optimizer proper
# ---------------------------------------------------------------------------


class ProtocolOptimizer:
    """Continuation-style NSGA-II over response protocols.

    The population persists across environment epochs; on an epoch change
    the caller re-evaluates everyone against the new fitness oracle and the
    search simply continues — it is never restarted.
    """

    def __init__(
        self,
        net: Network,
        settings: GASettings,
        rng: np.random.Generator | None = None,
    ):
        if not net.intermediate_junctions():
            raise OptimizerError("network has no intermediate junctions to snap to")
        self.net = net
        self.settings = settings
        self.rng = rng if rng is not None else np.random.default_rng(settings.seed)
        x0, y0, x1, y1 = net.bounding_box()
        n = settings.n_slots
        self.lower = np.tile(np.array([x0, y0]), (n, 1))
        self.upper = np.tile(np.array([x1, y1]), (n, 1))
        self.population: list[Individual] = []
        self.generations = 0

    # -- decoding ------------------------------------------------------------

    def decode(self, genome: np.ndarray) -> ResponseProtocol:
        nodes = [
            nearest_intermediate_node(self.net, (float(x), float(y)))
            for x, y in genome
        ]
        k = self.settings.n_flush
        return ResponseProtocol(tuple(nodes[:k]), tuple(nodes[k:]))

    def _make(self, genome: np.ndarray, fitness: FitnessFn) -> Individual:
        ind = Individual(genome=genome, protocol=self.decode(genome))
        ind.utim_g = float(fitness(ind.protocol))
        if not np.isfinite(ind.utim_g):
            raise OptimizerError(f"fitness returned {ind.utim_g} for {ind.protocol}")
        return ind

    # -- population management ------------------------------------------------

    def initialize(self, fitness: FitnessFn) -> None:
        n = self.settings.population_size
        genomes = self.rng.uniform(self.lower, self.upper, size=(n, *self.lower.shape))
        self.population = [self._make(g, fitness) for g in genomes]
        self._refresh_ranks(self.population)

    def re_evaluate(self, fitness: FitnessFn) -> None:
        """New environment epoch: refresh every member's true objective."""
        for ind in self.population:
            ind.utim_g = float(fitness(ind.protocol))
        self._refresh_ranks(self.population)

    def _refresh_ranks(self, members: Sequence[Individual]) -> None:
        utim = np.array([m.utim_g for m in members])
        div = diversity_scores(
            np.stack([m.genome for m in members]), utim, self.settings.diversity_metric
        )
        rank = fast_non_dominated_sort(utim, div)
        for i, m in enumerate(members):
            m.diversity = float(div[i])
            m.rank = int(rank[i])
            m.crowding = 0.0
        for level in range(rank.max() + 1):
            idx = np.flatnonzero(rank == level)
            crowd = crowding_distances(utim[idx], div[idx])
            for j, i in enumerate(idx):
                members[i].crowding = float(crowd[j])

    def _tournament(self) -> Individual:
        i, j = self.rng.integers(0, len(self.population), size=2)
        a, b = self.population[i], self.population[j]
        if a.rank != b.rank:
            return a if a.rank < b.rank else b
        if a.crowding != b.crowding:
            return a if a.crowding > b.crowding else b
        return a

    def step_generation(self, fitness: FitnessFn) -> None:
        """One NSGA-II generation under a frozen fitness oracle."""
        settings = self.settings
        offspring: list[Individual] = []
        while len(offspring) < settings.population_size:
            pa, pb = self._tournament(), self._tournament()
            if self.rng.random() <= settings.crossover_rate:
                ga, gb = sbx_crossover(
                    self.rng, pa.genome, pb.genome, settings.sbx_index, self.lower, self.upper
                )
            else:
                ga, gb = pa.genome.copy(), pb.genome.copy()
            for g in (ga, gb):
                if len(offspring) >= settings.population_size:
                    break
                g = polynomial_mutation(
                    self.rng, g, settings.mutation_rate, settings.mutation_index,
                    self.lower, self.upper,
                )
                offspring.append(self._make(g, fitness))

        combined = self.population + offspring
        utim = np.array([m.utim_g for m in combined])
        div = diversity_scores(
            np.stack([m.genome for m in combined]), utim, settings.diversity_metric
        )
        rank = fast_non_dominated_sort(utim, div)

        selected: list[int] = []
        for level in range(rank.max() + 1):
            idx = np.flatnonzero(rank == level)
            if len(selected) + len(idx) <= settings.population_size:
                selected.extend(int(i) for i in idx)
            else:
                crowd = crowding_distances(utim[idx], div[idx])
                # Fill the remainder by crowding, largest first; break ties
                # by lower UTIM, then by position, for determinism (and so a
                # minimum-UTIM member can never be squeezed out).
                need = settings.population_size - len(selected)
                order = sorted(
                    range(len(idx)), key=lambda j: (-crowd[j], utim[idx[j]], idx[j])
                )
                selected.extend(int(idx[j]) for j in order[:need])
            if len(selected) >= settings.population_size:
                break

        best = int(np.argmin(utim))
        if best not in selected:  # structural safety net; see tests
            selected[-1] = best
        self.population = [combined[i] for i in sorted(selected)]
        self._refresh_ranks(self.population)
        self.generations += 1

    def incumbent(self) -> Individual:
        if not self.population:
            raise OptimizerError("population not initialized")
        utims = [m.utim_g for m in self.population]
        return self.population[int(np.argmin(utims))]
