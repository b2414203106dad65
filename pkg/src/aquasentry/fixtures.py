"""Built-in networks and scenario timelines.

Three fixtures ship with the package:

* ``onepipe``   — one reservoir, one pipe, one demand junction; small enough
  to verify hydraulics and plug-flow transport against hand calculations.
* ``toy6``      — a two-branch toy grid with exactly six intermediate
  junctions, used to cross-check the optimizer against brute force.
* ``town``      — a seeded synthetic distribution system (~10^2 junctions,
  two treatment works, booster pump, elevated tank) sized like a small town.

The bundled ``data/`` copies are generated by this module; a regression test
re-generates them and asserts byte equality, so the committed files are the
canonical artefacts and the generator is provably reproducible.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .netmodel import (
    DEFAULT_CLASS_FRACTIONS,
    Junction,
    Network,
    Pipe,
    Pump,
    Reservoir,
    Tank,
    parse_native,
    serialize_native,
    validate,
)
from .scenario import ContaminationScenario, PerceivedTimeline, TimelineEntry, parse_timeline, serialize_timeline
from .units import parse_clock

TOWN_SEED = 20250815

# Diurnal demand patterns (hourly multipliers, mean ~1.0).
_PATTERN_RESIDENTIAL = (
    0.45, 0.38, 0.35, 0.35, 0.42, 0.62, 0.95, 1.35, 1.52, 1.38, 1.22, 1.12,
    1.08, 1.02, 0.98, 1.02, 1.12, 1.28, 1.45, 1.42, 1.25, 1.02, 0.78, 0.58,
)
_PATTERN_COMMERCIAL = (
    0.25, 0.22, 0.20, 0.20, 0.25, 0.40, 0.75, 1.20, 1.60, 1.75, 1.80, 1.82,
    1.78, 1.75, 1.70, 1.62, 1.45, 1.18, 0.85, 0.62, 0.48, 0.40, 0.32, 0.28,
)
_PATTERN_INDUSTRIAL = (
    0.82, 0.82, 0.82, 0.82, 0.85, 0.92, 1.05, 1.15, 1.18, 1.18, 1.18, 1.15,
    1.12, 1.15, 1.18, 1.18, 1.15, 1.08, 1.00, 0.95, 0.90, 0.86, 0.84, 0.82,
)


def onepipe(demand_lps: float = 35.34, population: float = 0.0) -> Network:
    """Reservoir -> 1000 m x 300 mm pipe -> single demand junction."""
    net = Network(
        junctions=(
            Junction("J1", 1000.0, 0.0, 0.0, demand_lps, None,
                     "residential-medium" if population > 0 else None, population),
        ),
        reservoirs=(Reservoir("R1", 0.0, 0.0, 50.0),),
        pipes=(Pipe("P1", "R1", "J1", 1000.0, 300.0, 130.0),),
    )
    validate(net)
    return net


def toy6() -> Network:
    """Two supply branches off one injection junction, six flush candidates.

    Geometry (x to the right, demands at the branch ends)::

        R1 -- J0 -- IN1 -- IN2 -- IN3 -- D1(big)
               \\-- IN4 -- IN5 -- D2     IN6 -- D3   (IN6 teed off IN5)

    J0 carries a token demand so exactly IN1..IN6 are intermediate.
    """
    junctions = (
        Junction("J0", 200.0, 0.0, 0.0, 0.5, "PR", "residential-medium", 10.0),
        Junction("IN1", 500.0, 150.0, 0.0, 0.0),
        Junction("IN2", 900.0, 150.0, 0.0, 0.0),
        Junction("IN3", 1300.0, 150.0, 0.0, 0.0),
        Junction("D1", 1700.0, 150.0, 0.0, 9.0, "PR", "residential-medium", 2400.0),
        Junction("IN4", 500.0, -150.0, 0.0, 0.0),
        Junction("IN5", 900.0, -150.0, 0.0, 0.0),
        Junction("D2", 1300.0, -150.0, 0.0, 4.0, "PR", "residential-low", 900.0),
        Junction("IN6", 900.0, -450.0, 0.0, 0.0),
        Junction("D3", 1300.0, -450.0, 0.0, 2.5, "PR", "residential-high", 500.0),
    )
    pipes = (
        Pipe("P01", "R1", "J0", 300.0, 300.0, 130.0),
        Pipe("P02", "J0", "IN1", 350.0, 250.0, 130.0),
        Pipe("P03", "IN1", "IN2", 400.0, 250.0, 130.0),
        Pipe("P04", "IN2", "IN3", 400.0, 250.0, 130.0),
        Pipe("P05", "IN3", "D1", 400.0, 250.0, 130.0),
        Pipe("P06", "J0", "IN4", 350.0, 200.0, 130.0),
        Pipe("P07", "IN4", "IN5", 400.0, 200.0, 130.0),
        Pipe("P08", "IN5", "D2", 400.0, 150.0, 130.0),
        Pipe("P09", "IN5", "IN6", 300.0, 150.0, 130.0),
        Pipe("P10", "IN6", "D3", 400.0, 150.0, 130.0),
    )
    net = Network(
        junctions=junctions,
        reservoirs=(Reservoir("R1", 0.0, 0.0, 45.0),),
        pipes=pipes,
        patterns={"PR": _PATTERN_RESIDENTIAL},
    )
    validate(net)
    return net


def toy6_timeline() -> PerceivedTimeline:
    """Single fixed estimate: 12 kg into J0 from 05:00 for 6 h.

    The long release keeps the plume over the demand junctions through the
    morning ingestion events, so response protocols have a real effect.
    """
    return PerceivedTimeline(
        entries=(
            TimelineEntry(
                effective_s=parse_clock("05:30"),
                scenario=ContaminationScenario(
                    node="J0", mass_kg=12.0, start_s=parse_clock("05:00"),
                    duration_s=6 * 3600.0, demand_multiplier=1.0,
                ),
            ),
        )
    )


# ---------------------------------------------------------------------------
# Synthetic town
# ---------------------------------------------------------------------------


def town(seed: int = TOWN_SEED) -> Network:
    """Seeded synthetic distribution system.

    Street grid with randomized gaps, two treatment-works reservoirs (west
    one pumped, east one gravity-fed), an elevated tank, zoned consumer
    classes and diurnal patterns.  Roughly 40% of junctions carry no demand
    and serve as flush/injection candidates.
    """
    rng = np.random.default_rng(seed)
    cols, rows, spacing = 16, 9, 210.0

    keep: dict[tuple[int, int], int] = {}
    positions: list[tuple[float, float]] = []
    cx, cy = (cols - 1) / 2.0, (rows - 1) / 2.0
    for r in range(rows):
        for c in range(cols):
            # Elliptical town outline with a ragged edge.
            norm = ((c - cx) / (cols / 2.0)) ** 2 + ((r - cy) / (rows / 1.72)) ** 2
            if norm > 1.0 + rng.normal(0.0, 0.08):
                continue
            x = c * spacing + rng.normal(0.0, 22.0)
            y = r * spacing + rng.normal(0.0, 22.0)
            keep[(c, r)] = len(positions)
            positions.append((float(round(x, 1)), float(round(y, 1))))
    n = len(positions)

    edges: list[tuple[int, int]] = []
    for (c, r), i in keep.items():
        for dc, dr in ((1, 0), (0, 1)):
            j = keep.get((c + dc, r + dr))
            if j is not None:
                edges.append((i, j))
    # A few diagonal shortcuts make the graph less tree-like.
    for (c, r), i in keep.items():
        j = keep.get((c + 1, r + 1))
        if j is not None and rng.random() < 0.10:
            edges.append((i, j))

    def components(edge_list: list[tuple[int, int]], count: int) -> list[int]:
        parent = list(range(count))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in edge_list:
            parent[find(a)] = find(b)
        return [find(i) for i in range(count)]

    # The outline mask can orphan nodes; keep only the largest component.
    roots = components(edges, n)
    main_root = max(set(roots), key=roots.count)
    survivors = [i for i in range(n) if roots[i] == main_root]
    remap = {old: new for new, old in enumerate(survivors)}
    positions = [positions[i] for i in survivors]
    edges = [(remap[a], remap[b]) for a, b in edges if a in remap and b in remap]
    n = len(positions)

    def connected(edge_list: list[tuple[int, int]]) -> bool:
        return len(set(components(edge_list, n))) == 1

    target_removals = int(0.14 * len(edges))
    removed = 0
    for idx in rng.permutation(len(edges)):
        if removed >= target_removals:
            break
        without = [e for k, e in enumerate(edges) if k != idx and e is not None]
        if edges[idx] is not None and connected(without):
            edges[idx] = None  # type: ignore[call-overload]
            removed += 1
    edges = [e for e in edges if e is not None]

    elev = np.array(
        [4.0 + 6.0 * math.sin(x / 1400.0) * math.cos(y / 1100.0) + rng.normal(0.0, 0.8)
         for x, y in positions]
    ).round(2)

    # Zoning: industrial SW corner, commercial core, residential elsewhere.
    width, height = (cols - 1) * spacing, (rows - 1) * spacing
    classes = []
    for x, y in positions:
        dc2 = ((x - width * 0.52) / (width * 0.23)) ** 2 + ((y - height * 0.5) / (height * 0.33)) ** 2
        if x < width * 0.24 and y < height * 0.38:
            classes.append("industrial")
        elif dc2 < 1.0:
            classes.append("commercial")
        else:
            classes.append(str(rng.choice(["residential-low", "residential-medium", "residential-high"],
                                          p=[0.38, 0.42, 0.20])))

    is_demand = rng.random(n) < 0.62
    base = np.zeros(n)
    pop = np.zeros(n)
    for i in range(n):
        if not is_demand[i]:
            continue
        tag = classes[i]
        if tag == "industrial":
            base[i] = rng.uniform(1.2, 3.2)
            pop[i] = round(rng.uniform(15, 60))
        elif tag == "commercial":
            base[i] = rng.uniform(0.5, 1.6)
            pop[i] = round(rng.uniform(60, 260))
        else:
            scale = {"residential-low": 0.8, "residential-medium": 1.0, "residential-high": 1.35}[tag]
            base[i] = rng.uniform(0.25, 0.85) * scale
            pop[i] = round(base[i] * rng.uniform(420, 560))
        base[i] = round(base[i], 3)

    # Ids: demand junctions J###, intermediates IN### (numbered in grid order).
    ids = []
    jn = 0
    inn = 0
    for i in range(n):
        if is_demand[i]:
            jn += 1
            ids.append(f"J{jn:03d}")
        else:
            inn += 1
            ids.append(f"IN{inn:03d}")

    pattern_of = {"industrial": "PIND", "commercial": "PCOM"}
    junctions = tuple(
        Junction(
            id=ids[i],
            x=positions[i][0],
            y=positions[i][1],
            elevation=float(elev[i]),
            base_demand=float(base[i]),
            pattern=(pattern_of.get(classes[i], "PRES") if is_demand[i] else None),
            consumer_class=classes[i] if is_demand[i] else None,
            population=float(pop[i]),
        )
        for i in range(n)
    )

    # Sources: pumped WTP on the west edge, gravity WTP on the east edge,
    # elevated tank on the northern rim.
    west_i = min(range(n), key=lambda i: positions[i][0] + abs(positions[i][1] - height * 0.5))
    east_i = max(range(n), key=lambda i: positions[i][0] - abs(positions[i][1] - height * 0.45) * 0.4)
    tank_i = max(range(n), key=lambda i: positions[i][1] - abs(positions[i][0] - width * 0.42) * 0.3)

    reservoirs = (
        Reservoir("R-WTP-W", positions[west_i][0] - 420.0, positions[west_i][1] - 60.0, 38.0),
        Reservoir("R-WTP-E", positions[east_i][0] + 380.0, positions[east_i][1] + 40.0, 68.0),
    )
    tank = Tank(
        "T-HILL", positions[tank_i][0] + 60.0, positions[tank_i][1] + 340.0,
        elevation=63.5, diameter=16.0, level_min=1.0, level_init=3.0, level_max=4.8,
    )

    pipe_rows: list[Pipe] = []
    # Hop distance from the two source attachment points sets diameter tiers.
    adjacency: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    hop = np.full(n, 10**9)
    frontier = [west_i, east_i]
    hop[west_i] = hop[east_i] = 0
    while frontier:
        nxt = []
        for i in frontier:
            for j in adjacency[i]:
                if hop[j] > hop[i] + 1:
                    hop[j] = hop[i] + 1
                    nxt.append(j)
        frontier = nxt

    for k, (a, b) in enumerate(sorted(edges), start=1):
        (xa, ya), (xb, yb) = positions[a], positions[b]
        length = round(math.hypot(xb - xa, yb - ya), 1)
        tier = min(hop[a], hop[b])
        diameter = 350.0 if tier <= 1 else 250.0 if tier <= 4 else 150.0 if tier <= 8 else 100.0
        roughness = float(rng.integers(115, 141))
        pipe_rows.append(Pipe(f"P{k:03d}", ids[a], ids[b], max(length, 40.0), diameter, roughness))

    npipe = len(pipe_rows)
    pipe_rows.append(Pipe(f"P{npipe + 1:03d}", "R-WTP-E", ids[east_i], 420.0, 400.0, 135.0))
    pipe_rows.append(Pipe(f"P{npipe + 2:03d}", ids[tank_i], "T-HILL", 500.0, 200.0, 130.0))

    pumps = (
        Pump("P-BOOST", "R-WTP-W", ids[west_i],
             curve=((0.0, 34.0), (45.0, 26.0), (90.0, 12.0))),
    )

    net = Network(
        junctions=junctions,
        reservoirs=reservoirs,
        tanks=(tank,),
        pipes=tuple(pipe_rows),
        pumps=pumps,
        patterns={
            "PRES": _PATTERN_RESIDENTIAL,
            "PCOM": _PATTERN_COMMERCIAL,
            "PIND": _PATTERN_INDUSTRIAL,
        },
        classes=dict(DEFAULT_CLASS_FRACTIONS),
    )
    validate(net)
    return net


def town_timeline(net: Network | None = None) -> PerceivedTimeline:
    """Escalating perception: wrong source first, then a corrected estimate.

    Mirrors the classic tabletop drill: the first alarm blames the eastern
    treatment works; field sampling then pins the injection to an in-town
    intermediate node and revises the mass twice.
    """
    if net is None:
        net = town()
    # Deterministic pick: intermediate node closest to the town centroid's
    # east side (stable for the fixed seed).
    inters = net.intermediate_junctions()
    xs = [j.x for j in net.junctions]
    ys = [j.y for j in net.junctions]
    tx, ty = 0.66 * max(xs), 0.52 * max(ys)
    node = min(inters, key=lambda j: ((j.x - tx) ** 2 + (j.y - ty) ** 2, j.id)).id
    mk = lambda eff, nid, kg, dur: TimelineEntry(  # noqa: E731
        effective_s=parse_clock(eff),
        scenario=ContaminationScenario(nid, kg, parse_clock("00:00"), dur * 3600.0, 1.0),
    )
    return PerceivedTimeline(entries=(
        mk("06:00", "R-WTP-E", 300.0, 5.0),
        mk("08:00", node, 280.0, 4.0),
        mk("10:00", node, 250.0, 5.0),
    ))


# ---------------------------------------------------------------------------
# Bundled data access
# ---------------------------------------------------------------------------

_BUILDERS = {"onepipe": onepipe, "toy6": toy6, "town": town}


def fixture_text(name: str) -> str:
    """Canonical text of a bundled fixture file (from package data)."""
    return resources.files("aquasentry.data").joinpath(name).read_text()


def load_network(ref: str) -> Network:
    """Resolve a network reference: bundled fixture name or file path."""
    if ref in _BUILDERS:
        return parse_native(fixture_text(f"{ref}.net"))
    from pathlib import Path

    path = Path(ref)
    text = path.read_text()
    if path.suffix.lower() == ".inp":
        from .netmodel import parse_inp_subset

        return parse_inp_subset(text)
    return parse_native(text)


def load_timeline(ref: str) -> PerceivedTimeline:
    if ref in ("toy6", "town"):
        return parse_timeline(fixture_text(f"{ref}.scn"))
    from pathlib import Path

    return parse_timeline(Path(ref).read_text())


def generate_data(out_dir) -> list[str]:
    """Write all bundled fixture files; returns the file names written."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in _BUILDERS.items():
        text = serialize_native(builder())
        (out / f"{name}.net").write_text(text)
        written.append(f"{name}.net")
    (out / "toy6.scn").write_text(serialize_timeline(toy6_timeline()))
    written.append("toy6.scn")
    (out / "town.scn").write_text(serialize_timeline(town_timeline()))
    written.append("town.scn")
    return written
