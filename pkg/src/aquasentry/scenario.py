"""Contamination scenarios and the operators' evolving perception of them.

During an emergency the true injection is unknown; field teams revise their
estimate of where, how much and for how long contaminant entered the grid.
A :class:`PerceivedTimeline` is that sequence of revisions: each entry says
"from clock time T onwards, the best estimate is scenario S".  The response
engine always optimizes against the currently perceived scenario, never the
ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .netmodel import Network, NetworkSemanticError, NetworkSyntaxError
from .units import format_clock, parse_clock


@dataclass(frozen=True)
class ContaminationScenario:
    node: str  # injection node id
    mass_kg: float  # total injected mass
    start_s: float  # injection start, seconds from day start
    duration_s: float  # injection duration
    demand_multiplier: float = 1.0  # global scaling of consumer demand

    def mass_rate_kg_s(self) -> float:
        return self.mass_kg / self.duration_s

    def key(self) -> tuple:
        return (self.node, self.mass_kg, self.start_s, self.duration_s, self.demand_multiplier)


@dataclass(frozen=True)
class TimelineEntry:
    effective_s: float  # clock time the estimate becomes current
    scenario: ContaminationScenario


@dataclass(frozen=True)
class PerceivedTimeline:
    entries: tuple[TimelineEntry, ...]

    def update_times(self) -> list[float]:
        return [e.effective_s for e in self.entries]


def perceived_at(timeline: PerceivedTimeline, t: float) -> ContaminationScenario:
    """The scenario estimate current at time ``t`` (latest entry with
    effective time <= t)."""
    current = None
    for entry in timeline.entries:
        if entry.effective_s <= t:
            current = entry.scenario
        else:
            break
    if current is None:
        raise ValueError(f"no scenario estimate is effective at t={format_clock(t)}")
    return current


def parse_timeline(text: str) -> PerceivedTimeline:
    """Parse the columnar timeline format:

        # effective  node  mass_kg  demand_mult  start  duration_h
        06:00  R-WTP-E  300.0  1.00  00:00  5.0
    """
    entries: list[TimelineEntry] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 6:
            raise NetworkSyntaxError(f"timeline row needs 6 fields, got {len(tokens)}", lineno)
        try:
            effective = parse_clock(tokens[0])
            mass = float(tokens[2])
            mult = float(tokens[3])
            start = parse_clock(tokens[4])
            duration = float(tokens[5]) * 3600.0
        except ValueError as exc:
            raise NetworkSyntaxError(str(exc), lineno) from None
        entries.append(
            TimelineEntry(
                effective_s=effective,
                scenario=ContaminationScenario(
                    node=tokens[1],
                    mass_kg=mass,
                    start_s=start,
                    duration_s=duration,
                    demand_multiplier=mult,
                ),
            )
        )
    timeline = PerceivedTimeline(tuple(entries))
    validate_timeline(timeline)
    return timeline


def serialize_timeline(timeline: PerceivedTimeline) -> str:
    out = ["# effective node mass_kg demand_mult start duration_h"]
    for e in timeline.entries:
        s = e.scenario
        out.append(
            f"{format_clock(e.effective_s)} {s.node} {s.mass_kg!r} {s.demand_multiplier!r} "
            f"{format_clock(s.start_s)} {s.duration_s / 3600.0!r}"
        )
    out.append("")
    return "\n".join(out)


def validate_timeline(timeline: PerceivedTimeline, net: Network | None = None) -> None:
    if not timeline.entries:
        raise NetworkSemanticError("timeline has no entries")
    previous = -1.0
    for entry in timeline.entries:
        if entry.effective_s <= previous:
            raise NetworkSemanticError("timeline effective times must be strictly increasing")
        previous = entry.effective_s
        s = entry.scenario
        if s.mass_kg <= 0:
            raise NetworkSemanticError("injected mass must be positive", s.node)
        if s.duration_s <= 0:
            raise NetworkSemanticError("injection duration must be positive", s.node)
        if s.demand_multiplier <= 0:
            raise NetworkSemanticError("demand multiplier must be positive", s.node)
        if net is not None and s.node not in {nid for nid in net.node_ids()}:
            raise NetworkSemanticError("scenario injects at a node absent from the network", s.node)


def with_demand_multiplier(scenario: ContaminationScenario, multiplier: float) -> ContaminationScenario:
    return replace(scenario, demand_multiplier=multiplier)
