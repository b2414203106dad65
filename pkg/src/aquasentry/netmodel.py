"""Network data model: graph entities, file formats, and indexing.

A :class:`Network` is an immutable description of a water distribution grid:
junctions (with base demand, diurnal pattern, consumer class and population),
reservoirs, tanks, pipes and pumps, plus the pattern and consumer-class
tables they reference.

Two on-disk formats are supported:

* the native sectioned text format (``parse_native`` / ``serialize_native``),
  which round-trips exactly, and
* a strict subset of the EPANET INP format (``parse_inp_subset``) covering
  demand-driven networks without valves or control rules.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import units


class NetworkError(Exception):
    """Base class for network model errors."""


class NetworkSyntaxError(NetworkError):
    """Malformed input text; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NetworkSemanticError(NetworkError):
    """Structurally parseable input that violates a model invariant."""

    def __init__(self, message: str, entity: str = ""):
        super().__init__(message if not entity else f"{entity}: {message}")
        self.entity = entity


class UnsupportedFeatureError(NetworkError):
    """INP input uses a feature outside the supported demand-driven subset."""


# Consumer classes and the fraction of demand that is *non-consumptive*
# (keeps flowing after a cohort stops drinking: toilets, irrigation, process
# water).  The commercial figure is a configuration default, not a measured
# value; override per network via the [CLASSES] section.
DEFAULT_CLASS_FRACTIONS: Mapping[str, float] = {
    "residential-low": 0.60,
    "residential-medium": 0.51,
    "residential-high": 0.43,
    "commercial": 0.51,
    "industrial": 0.96,
}

PATTERN_SLOTS = 24  # hourly multipliers over one day


@dataclass(frozen=True)
class Junction:
    id: str
    x: float
    y: float
    elevation: float  # m
    base_demand: float  # L/s
    pattern: str | None = None  # None => flat multiplier 1.0
    consumer_class: str | None = None
    population: float = 0.0


@dataclass(frozen=True)
class Reservoir:
    id: str
    x: float
    y: float
    head: float  # m, fixed total head


@dataclass(frozen=True)
class Tank:
    id: str
    x: float
    y: float
    elevation: float  # m, tank bottom
    diameter: float  # m
    level_min: float  # m above bottom
    level_init: float
    level_max: float

    @property
    def area(self) -> float:
        return math.pi * self.diameter**2 / 4.0


@dataclass(frozen=True)
class Pipe:
    id: str
    start: str
    end: str
    length: float  # m
    diameter: float  # mm
    roughness: float  # Hazen-Williams C


@dataclass(frozen=True)
class Pump:
    id: str
    start: str
    end: str
    # (flow L/s, head m) points; the first must be at zero flow (shutoff head).
    curve: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class Network:
    junctions: tuple[Junction, ...]
    reservoirs: tuple[Reservoir, ...] = ()
    tanks: tuple[Tank, ...] = ()
    pipes: tuple[Pipe, ...] = ()
    pumps: tuple[Pump, ...] = ()
    patterns: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    classes: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_CLASS_FRACTIONS))

    def node_ids(self) -> list[str]:
        return (
            [j.id for j in self.junctions]
            + [r.id for r in self.reservoirs]
            + [t.id for t in self.tanks]
        )

    def links(self) -> list[Pipe | Pump]:
        return list(self.pipes) + list(self.pumps)

    def intermediate_junctions(self) -> list[Junction]:
        """Junctions with zero base demand: candidate flush/injection sites."""
        return [j for j in self.junctions if j.base_demand == 0.0]

    def bounding_box(self) -> tuple[float, float, float, float]:
        xs = [j.x for j in self.junctions] + [r.x for r in self.reservoirs] + [t.x for t in self.tanks]
        ys = [j.y for j in self.junctions] + [r.y for r in self.reservoirs] + [t.y for t in self.tanks]
        return min(xs), min(ys), max(xs), max(ys)


def validate(net: Network) -> None:
    """Check model invariants; raise NetworkSemanticError on the first failure."""
    ids = net.node_ids()
    seen: set[str] = set()
    for nid in ids:
        if nid in seen:
            raise NetworkSemanticError("duplicate node id", nid)
        seen.add(nid)
    if not net.junctions:
        raise NetworkSemanticError("network has no junctions")
    if not net.reservoirs and not net.tanks:
        raise NetworkSemanticError("network has no fixed-head source (reservoir or tank)")

    link_ids: set[str] = set()
    for link in net.links():
        if link.id in link_ids:
            raise NetworkSemanticError("duplicate link id", link.id)
        link_ids.add(link.id)
        for endpoint in (link.start, link.end):
            if endpoint not in seen:
                raise NetworkSemanticError(f"endpoint {endpoint!r} is not a node", link.id)
        if link.start == link.end:
            raise NetworkSemanticError("link connects a node to itself", link.id)

    for pipe in net.pipes:
        if pipe.length <= 0 or pipe.diameter <= 0 or pipe.roughness <= 0:
            raise NetworkSemanticError("length, diameter and roughness must be positive", pipe.id)
    for pump in net.pumps:
        if len(pump.curve) < 1:
            raise NetworkSemanticError("pump curve needs at least one point", pump.id)
        if pump.curve[0][0] != 0.0:
            raise NetworkSemanticError("first pump curve point must be at zero flow", pump.id)
        flows = [q for q, _ in pump.curve]
        heads = [h for _, h in pump.curve]
        if any(b <= a for a, b in zip(flows, flows[1:])):
            raise NetworkSemanticError("pump curve flows must be strictly increasing", pump.id)
        if any(b >= a for a, b in zip(heads, heads[1:])) or any(h < 0 for h in heads):
            raise NetworkSemanticError("pump curve heads must be non-negative and strictly decreasing", pump.id)
    for tank in net.tanks:
        if tank.diameter <= 0:
            raise NetworkSemanticError("tank diameter must be positive", tank.id)
        if not 0 <= tank.level_min <= tank.level_init <= tank.level_max:
            raise NetworkSemanticError("tank levels must satisfy 0 <= min <= init <= max", tank.id)

    for junc in net.junctions:
        if junc.base_demand < 0:
            raise NetworkSemanticError("base demand must be non-negative", junc.id)
        if junc.population < 0:
            raise NetworkSemanticError("population must be non-negative", junc.id)
        if junc.pattern is not None and junc.pattern not in net.patterns:
            raise NetworkSemanticError(f"references unknown pattern {junc.pattern!r}", junc.id)
        if junc.population > 0 and junc.consumer_class is None:
            raise NetworkSemanticError("populated junction needs a consumer class", junc.id)
        if junc.consumer_class is not None and junc.consumer_class not in net.classes:
            raise NetworkSemanticError(f"references unknown consumer class {junc.consumer_class!r}", junc.id)

    for pid, mults in net.patterns.items():
        if len(mults) != PATTERN_SLOTS:
            raise NetworkSemanticError(f"pattern must have {PATTERN_SLOTS} multipliers, got {len(mults)}", pid)
        if any(m < 0 for m in mults):
            raise NetworkSemanticError("pattern multipliers must be non-negative", pid)
    for tag, frac in net.classes.items():
        if not 0.0 < frac <= 1.0:
            raise NetworkSemanticError("non-consumptive fraction must be in (0, 1]", tag)

    # Connectivity: every node reachable from the first source over links.
    adjacency: dict[str, list[str]] = {nid: [] for nid in ids}
    for link in net.links():
        adjacency[link.start].append(link.end)
        adjacency[link.end].append(link.start)
    root = (net.reservoirs + net.tanks)[0].id
    frontier = [root]
    reached = {root}
    while frontier:
        nid = frontier.pop()
        for other in adjacency[nid]:
            if other not in reached:
                reached.add(other)
                frontier.append(other)
    if len(reached) != len(ids):
        missing = sorted(set(ids) - reached)[0]
        raise NetworkSemanticError("node is disconnected from every source", missing)


# ---------------------------------------------------------------------------
# Native sectioned text format
# ---------------------------------------------------------------------------

_NATIVE_SECTIONS = ("NODES", "RESERVOIRS", "TANKS", "PIPES", "PUMPS", "PATTERNS", "CLASSES")


def _fmt(value: float) -> str:
    """Shortest decimal text that round-trips through float()."""
    return repr(float(value))


def parse_native(text: str) -> Network:
    """Parse the native sectioned format.  Raises NetworkSyntaxError /
    NetworkSemanticError; the returned network is fully validated."""
    section = None
    junctions: list[Junction] = []
    reservoirs: list[Reservoir] = []
    tanks: list[Tank] = []
    pipes: list[Pipe] = []
    pumps: list[Pump] = []
    patterns: dict[str, tuple[float, ...]] = {}
    classes: dict[str, float] = {}

    def need(tokens: Sequence[str], count: int, line: int, what: str) -> None:
        if len(tokens) != count:
            raise NetworkSyntaxError(f"{what} row needs {count} fields, got {len(tokens)}", line)

    def num(token: str, line: int) -> float:
        try:
            return float(token)
        except ValueError:
            raise NetworkSyntaxError(f"expected a number, got {token!r}", line) from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().upper()
            if name not in _NATIVE_SECTIONS:
                raise NetworkSyntaxError(f"unknown section [{name}]", lineno)
            section = name
            continue
        if section is None:
            raise NetworkSyntaxError("content before first section header", lineno)
        tokens = line.split()
        if section == "NODES":
            need(tokens, 8, lineno, "node")
            junctions.append(
                Junction(
                    id=tokens[0],
                    x=num(tokens[1], lineno),
                    y=num(tokens[2], lineno),
                    elevation=num(tokens[3], lineno),
                    base_demand=num(tokens[4], lineno),
                    pattern=None if tokens[5] == "-" else tokens[5],
                    consumer_class=None if tokens[6] == "-" else tokens[6],
                    population=num(tokens[7], lineno),
                )
            )
        elif section == "RESERVOIRS":
            need(tokens, 4, lineno, "reservoir")
            reservoirs.append(
                Reservoir(tokens[0], num(tokens[1], lineno), num(tokens[2], lineno), num(tokens[3], lineno))
            )
        elif section == "TANKS":
            need(tokens, 8, lineno, "tank")
            tanks.append(
                Tank(
                    id=tokens[0],
                    x=num(tokens[1], lineno),
                    y=num(tokens[2], lineno),
                    elevation=num(tokens[3], lineno),
                    diameter=num(tokens[4], lineno),
                    level_min=num(tokens[5], lineno),
                    level_init=num(tokens[6], lineno),
                    level_max=num(tokens[7], lineno),
                )
            )
        elif section == "PIPES":
            need(tokens, 6, lineno, "pipe")
            pipes.append(
                Pipe(
                    id=tokens[0],
                    start=tokens[1],
                    end=tokens[2],
                    length=num(tokens[3], lineno),
                    diameter=num(tokens[4], lineno),
                    roughness=num(tokens[5], lineno),
                )
            )
        elif section == "PUMPS":
            if len(tokens) < 4:
                raise NetworkSyntaxError("pump row needs id, endpoints and at least one flow:head point", lineno)
            points = []
            for token in tokens[3:]:
                if ":" not in token:
                    raise NetworkSyntaxError(f"pump curve point {token!r} must be flow:head", lineno)
                q_text, h_text = token.split(":", 1)
                points.append((num(q_text, lineno), num(h_text, lineno)))
            pumps.append(Pump(tokens[0], tokens[1], tokens[2], tuple(points)))
        elif section == "PATTERNS":
            need(tokens, 1 + PATTERN_SLOTS, lineno, "pattern")
            patterns[tokens[0]] = tuple(num(t, lineno) for t in tokens[1:])
        elif section == "CLASSES":
            need(tokens, 2, lineno, "class")
            classes[tokens[0]] = num(tokens[1], lineno)

    net = Network(
        junctions=tuple(junctions),
        reservoirs=tuple(reservoirs),
        tanks=tuple(tanks),
        pipes=tuple(pipes),
        pumps=tuple(pumps),
        patterns=patterns,
        classes=classes if classes else dict(DEFAULT_CLASS_FRACTIONS),
    )
    validate(net)
    return net


def serialize_native(net: Network) -> str:
    """Render a network in the native format; parse_native inverts exactly."""
    out: list[str] = []
    out.append("[NODES]")
    out.append("# id x y elevation demand_lps pattern class population")
    for j in net.junctions:
        out.append(
            " ".join(
                [
                    j.id,
                    _fmt(j.x),
                    _fmt(j.y),
                    _fmt(j.elevation),
                    _fmt(j.base_demand),
                    j.pattern if j.pattern is not None else "-",
                    j.consumer_class if j.consumer_class is not None else "-",
                    _fmt(j.population),
                ]
            )
        )
    out.append("")
    out.append("[RESERVOIRS]")
    out.append("# id x y head_m")
    for r in net.reservoirs:
        out.append(" ".join([r.id, _fmt(r.x), _fmt(r.y), _fmt(r.head)]))
    out.append("")
    out.append("[TANKS]")
    out.append("# id x y elevation diameter_m level_min level_init level_max")
    for t in net.tanks:
        out.append(
            " ".join(
                [t.id, _fmt(t.x), _fmt(t.y), _fmt(t.elevation), _fmt(t.diameter),
                 _fmt(t.level_min), _fmt(t.level_init), _fmt(t.level_max)]
            )
        )
    out.append("")
    out.append("[PIPES]")
    out.append("# id start end length_m diameter_mm roughness_c")
    for p in net.pipes:
        out.append(" ".join([p.id, p.start, p.end, _fmt(p.length), _fmt(p.diameter), _fmt(p.roughness)]))
    out.append("")
    out.append("[PUMPS]")
    out.append("# id start end flow_lps:head_m ...")
    for pump in net.pumps:
        points = " ".join(f"{_fmt(q)}:{_fmt(h)}" for q, h in pump.curve)
        out.append(" ".join([pump.id, pump.start, pump.end, points]))
    out.append("")
    out.append("[PATTERNS]")
    out.append("# id hourly multipliers x24")
    for pid in net.patterns:
        out.append(" ".join([pid] + [_fmt(m) for m in net.patterns[pid]]))
    out.append("")
    out.append("[CLASSES]")
    out.append("# tag non_consumptive_fraction")
    for tag in net.classes:
        out.append(" ".join([tag, _fmt(net.classes[tag])]))
    out.append("")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# EPANET INP subset importer
# ---------------------------------------------------------------------------

_INP_COSMETIC = {"LABELS", "BACKDROP", "TAGS", "VERTICES", "REPORT", "MAP", "ENERGY", "QUALITY",
                 "REACTIONS", "MIXING", "SOURCES", "EMITTERS"}
_INP_HANDLED = {"TITLE", "JUNCTIONS", "RESERVOIRS", "TANKS", "PIPES", "PUMPS", "PATTERNS",
                "DEMANDS", "CURVES", "COORDINATES", "TIMES", "OPTIONS", "END"}


def parse_inp_subset(text: str) -> Network:
    """Import a demand-driven EPANET INP file.

    Supported: junctions, reservoirs, tanks (cylindrical), pipes, head-curve
    pumps, patterns, demands, coordinates, LPS or GPM unit systems.
    [VALVES], [CONTROLS] and [RULES] are rejected outright; cosmetic sections
    are skipped with a warning.  GPM inputs are converted to SI on the way in.
    """
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line.strip("[] \t").upper()
            if name in ("VALVES", "CONTROLS", "RULES", "STATUS"):
                raise UnsupportedFeatureError(
                    f"[{name}] is outside the supported subset (demand-driven, no valves or controls)"
                )
            if name in _INP_COSMETIC:
                warnings.warn(f"skipping cosmetic INP section [{name}]", stacklevel=2)
                section = f"__skip_{name}"
            elif name in _INP_HANDLED:
                section = name
            else:
                raise UnsupportedFeatureError(f"unrecognised INP section [{name}]")
            continue
        if section is None:
            raise NetworkSyntaxError("content before first section header", lineno)
        if section.startswith("__skip_") or section in ("TITLE", "END"):
            continue
        sections.setdefault(section, []).append((lineno, line.split()))

    flow_unit = "LPS"
    for lineno, tokens in sections.get("OPTIONS", []):
        key = tokens[0].upper()
        if key == "UNITS" and len(tokens) > 1:
            flow_unit = tokens[1].upper()
        elif key == "HEADLOSS" and len(tokens) > 1 and tokens[1].upper() != "H-W":
            raise UnsupportedFeatureError(f"headloss model {tokens[1]} unsupported, only H-W")
    if flow_unit not in ("LPS", "GPM"):
        raise UnsupportedFeatureError(f"flow unit {flow_unit} unsupported, only LPS or GPM")
    us_units = flow_unit == "GPM"

    def length(v: float) -> float:
        return v * units.FT_TO_M if us_units else v

    def pipe_diam(v: float) -> float:
        return v * units.IN_TO_MM if us_units else v

    def tank_diam(v: float) -> float:
        return v * units.FT_TO_M if us_units else v

    def flow_lps(v: float) -> float:
        return v * units.GPM_TO_M3S * 1000.0 if us_units else v

    def num(token: str, lineno: int) -> float:
        try:
            return float(token)
        except ValueError:
            raise NetworkSyntaxError(f"expected a number, got {token!r}", lineno) from None

    for lineno, tokens in sections.get("TIMES", []):
        key = " ".join(tokens[:2]).upper()
        if key == "PATTERN TIMESTEP" and len(tokens) > 2 and tokens[2] not in ("1:00", "1", "1:00:00"):
            raise UnsupportedFeatureError("pattern timestep must be one hour")

    coords: dict[str, tuple[float, float]] = {}
    for lineno, tokens in sections.get("COORDINATES", []):
        if len(tokens) < 3:
            raise NetworkSyntaxError("coordinate row needs id x y", lineno)
        coords[tokens[0]] = (num(tokens[1], lineno), num(tokens[2], lineno))

    def xy(node_id: str) -> tuple[float, float]:
        if node_id not in coords:
            raise NetworkSemanticError("no coordinates given", node_id)
        return coords[node_id]

    junction_demand: dict[str, float] = {}
    junction_pattern: dict[str, str | None] = {}
    junction_elev: dict[str, float] = {}
    junction_order: list[str] = []
    for lineno, tokens in sections.get("JUNCTIONS", []):
        if len(tokens) < 2:
            raise NetworkSyntaxError("junction row needs id and elevation", lineno)
        jid = tokens[0]
        junction_order.append(jid)
        junction_elev[jid] = length(num(tokens[1], lineno))
        junction_demand[jid] = flow_lps(num(tokens[2], lineno)) if len(tokens) > 2 else 0.0
        junction_pattern[jid] = tokens[3] if len(tokens) > 3 else None

    for lineno, tokens in sections.get("DEMANDS", []):
        if len(tokens) < 2:
            raise NetworkSyntaxError("demand row needs id and flow", lineno)
        jid = tokens[0]
        if jid not in junction_demand:
            raise NetworkSemanticError("demand row for unknown junction", jid)
        junction_demand[jid] += flow_lps(num(tokens[1], lineno))
        if len(tokens) > 2:
            existing = junction_pattern[jid]
            if existing is not None and existing != tokens[2]:
                raise UnsupportedFeatureError(
                    f"junction {jid} has demand categories with different patterns; only one pattern per junction"
                )
            junction_pattern[jid] = tokens[2]

    junctions = tuple(
        Junction(
            id=jid,
            x=xy(jid)[0],
            y=xy(jid)[1],
            elevation=junction_elev[jid],
            base_demand=junction_demand[jid],
            pattern=junction_pattern[jid],
        )
        for jid in junction_order
    )

    reservoirs = []
    for lineno, tokens in sections.get("RESERVOIRS", []):
        if len(tokens) < 2:
            raise NetworkSyntaxError("reservoir row needs id and head", lineno)
        if len(tokens) > 2:
            raise UnsupportedFeatureError(f"reservoir {tokens[0]} has a head pattern; fixed heads only")
        reservoirs.append(Reservoir(tokens[0], *xy(tokens[0]), head=length(num(tokens[1], lineno))))

    tanks = []
    for lineno, tokens in sections.get("TANKS", []):
        if len(tokens) < 6:
            raise NetworkSyntaxError("tank row needs id, elevation and four geometry fields", lineno)
        if len(tokens) >= 8:
            raise UnsupportedFeatureError(f"tank {tokens[0]} uses a volume curve; cylindrical tanks only")
        x, y = xy(tokens[0])
        tanks.append(
            Tank(
                id=tokens[0],
                x=x,
                y=y,
                elevation=length(num(tokens[1], lineno)),
                diameter=tank_diam(num(tokens[5], lineno)),
                level_min=length(num(tokens[3], lineno)),
                level_init=length(num(tokens[2], lineno)),
                level_max=length(num(tokens[4], lineno)),
            )
        )

    pipes = []
    for lineno, tokens in sections.get("PIPES", []):
        if len(tokens) < 6:
            raise NetworkSyntaxError("pipe row needs id, endpoints, length, diameter, roughness", lineno)
        status = tokens[7].upper() if len(tokens) > 7 else "OPEN"
        if status != "OPEN":
            raise UnsupportedFeatureError(f"pipe {tokens[0]} status {status} unsupported; pipes must stay open")
        if len(tokens) > 6 and num(tokens[6], lineno) != 0.0:
            warnings.warn(f"pipe {tokens[0]}: minor loss coefficient ignored", stacklevel=2)
        pipes.append(
            Pipe(
                id=tokens[0],
                start=tokens[1],
                end=tokens[2],
                length=length(num(tokens[3], lineno)),
                diameter=pipe_diam(num(tokens[4], lineno)),
                roughness=num(tokens[5], lineno),
            )
        )

    curves: dict[str, list[tuple[float, float]]] = {}
    for lineno, tokens in sections.get("CURVES", []):
        if len(tokens) < 3:
            raise NetworkSyntaxError("curve row needs id x y", lineno)
        curves.setdefault(tokens[0], []).append((flow_lps(num(tokens[1], lineno)), length(num(tokens[2], lineno))))

    pumps = []
    for lineno, tokens in sections.get("PUMPS", []):
        if len(tokens) < 5 or tokens[3].upper() != "HEAD":
            raise UnsupportedFeatureError(
                f"pump {tokens[0] if tokens else '?'} must be defined as 'id node1 node2 HEAD curve'"
            )
        curve_id = tokens[4]
        if curve_id not in curves:
            raise NetworkSemanticError(f"references unknown curve {curve_id!r}", tokens[0])
        points = curves[curve_id]
        if points[0][0] != 0.0:
            # Single-point EPANET curves describe the design point; synthesise
            # the standard shape (shutoff = 1.33 H_d, max flow = 2 Q_d).
            if len(points) == 1:
                qd, hd = points[0]
                points = [(0.0, 4.0 * hd / 3.0), (qd, hd), (2.0 * qd, 0.0)]
            else:
                raise NetworkSemanticError("pump curve must start at zero flow", tokens[0])
        pumps.append(Pump(tokens[0], tokens[1], tokens[2], tuple(points)))

    patterns: dict[str, tuple[float, ...]] = {}
    accumulating: dict[str, list[float]] = {}
    for lineno, tokens in sections.get("PATTERNS", []):
        accumulating.setdefault(tokens[0], []).extend(num(t, lineno) for t in tokens[1:])
    for pid, mults in accumulating.items():
        if len(mults) != PATTERN_SLOTS:
            raise NetworkSemanticError(
                f"pattern must supply {PATTERN_SLOTS} hourly multipliers, got {len(mults)}", pid
            )
        patterns[pid] = tuple(mults)

    net = Network(
        junctions=junctions,
        reservoirs=tuple(reservoirs),
        tanks=tuple(tanks),
        pipes=tuple(pipes),
        pumps=tuple(pumps),
        patterns=patterns,
    )
    validate(net)
    return net


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------


def nearest_intermediate_node(net: Network, point: tuple[float, float]) -> str:
    """Id of the zero-demand junction closest to ``point`` (Euclidean).

    Exact distance ties break to the lexicographically smallest id, so
    snapping is deterministic.
    """
    candidates = net.intermediate_junctions()
    if not candidates:
        raise NetworkSemanticError("network has no intermediate (zero-demand) junctions")
    px, py = point
    d2 = np.array([(j.x - px) ** 2 + (j.y - py) ** 2 for j in candidates])
    best = d2.min()
    return min(candidates[i].id for i in np.flatnonzero(d2 == best))


class NetworkIndex:
    """Array-oriented view of a network shared by the solver and simulators.

    Node ordering: junctions, then reservoirs, then tanks.  Link ordering:
    pipes, then pumps.  All arrays are in SI units (flows m^3/s).
    """

    def __init__(self, net: Network):
        self.net = net
        self.junction_ids = [j.id for j in net.junctions]
        self.reservoir_ids = [r.id for r in net.reservoirs]
        self.tank_ids = [t.id for t in net.tanks]
        self.node_ids = self.junction_ids + self.reservoir_ids + self.tank_ids
        self.node_index = {nid: i for i, nid in enumerate(self.node_ids)}
        self.n_junctions = len(self.junction_ids)
        self.n_nodes = len(self.node_ids)
        self.n_tanks = len(self.tank_ids)
        self.tank_offset = self.n_junctions + len(self.reservoir_ids)

        self.link_ids = [p.id for p in net.pipes] + [p.id for p in net.pumps]
        self.link_index = {lid: i for i, lid in enumerate(self.link_ids)}
        self.n_pipes = len(net.pipes)
        self.n_links = len(self.link_ids)
        links = net.links()
        self.link_start = np.array([self.node_index[l.start] for l in links], dtype=np.intp)
        self.link_end = np.array([self.node_index[l.end] for l in links], dtype=np.intp)

        xs, ys = [], []
        for j in net.junctions:
            xs.append(j.x)
            ys.append(j.y)
        for r in net.reservoirs:
            xs.append(r.x)
            ys.append(r.y)
        for t in net.tanks:
            xs.append(t.x)
            ys.append(t.y)
        self.coords = np.column_stack([np.array(xs), np.array(ys)])

        self.elevation = np.array(
            [j.elevation for j in net.junctions]
            + [r.head for r in net.reservoirs]
            + [t.elevation for t in net.tanks]
        )
        self.base_demand = np.array([j.base_demand for j in net.junctions]) * units.LPS_TO_M3S
        self.population = np.array([j.population for j in net.junctions])

        # Hourly multiplier table, junction-by-hour; flat 1.0 when unpatterned.
        self.pattern_table = np.ones((self.n_junctions, PATTERN_SLOTS))
        for i, j in enumerate(net.junctions):
            if j.pattern is not None:
                self.pattern_table[i, :] = net.patterns[j.pattern]

        self.class_fraction = np.ones(self.n_junctions)
        for i, j in enumerate(net.junctions):
            if j.consumer_class is not None:
                self.class_fraction[i] = net.classes[j.consumer_class]

        self.intermediate_mask = np.array([j.base_demand == 0.0 for j in net.junctions])

        # Pipe geometry for transport: cross-section m^2, volume m^3.
        diam_m = np.array([p.diameter for p in net.pipes]) / 1000.0
        self.pipe_area = math.pi * diam_m**2 / 4.0
        self.pipe_length = np.array([p.length for p in net.pipes])
        self.pipe_volume = self.pipe_area * self.pipe_length

        self.tank_area = np.array([t.area for t in net.tanks])
        self.tank_level_min = np.array([t.level_min for t in net.tanks])
        self.tank_level_max = np.array([t.level_max for t in net.tanks])
        self.tank_level_init = np.array([t.level_init for t in net.tanks])
        self.reservoir_head = np.array([r.head for r in net.reservoirs])

    def demands_at_hour(self, hour: int, multiplier: float = 1.0) -> np.ndarray:
        """Junction consumer demand in m^3/s for the given clock hour."""
        return self.base_demand * self.pattern_table[:, hour % PATTERN_SLOTS] * multiplier
