"""Integrated emergency simulation.

:class:`EmergencySimulator` couples the hydraulic solver, the two-species
tracer transport and the consumer-exposure state machine into a single
clock-driven simulation:

* hydraulics are re-solved at hour marks and at response-action boundaries,
  with demands scaled by each cohort's current consumption state;
* tracer transport advances in quality-step pieces between those solves;
* ingestion events fire at the fixed drinking schedule using the tracer
  concentrations of the moment;
* flushing opens hydrant emitters (which also discharge tracer mass out of
  the network) and dye injection adds a second, visible species that makes
  consumers stop drinking at the alert threshold.

Simulators are cheap to clone, which is what makes protocol evaluation
affordable: a shared prefix state is advanced once per decision epoch and
every candidate protocol is scored on its own clone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import units
from .exposure import CohortSet, ExposureParams, build_cohorts, demand_factors
from .exposure import impact_by_junction as _impact_by_junction
from .exposure import process_ingestion_event, utim_g as _utim_g
from .hydraulics import HydraulicModel, advance_tank_levels
from .netmodel import Network, NetworkIndex
from .quality import CONTAMINANT, DYE, SourceSpec, TransportState
from .scenario import ContaminationScenario

# Hydrant flushing: one opened hydrant behaves as an orifice with this
# discharge coefficient, and stays open for five hours.
FLUSH_COEFFICIENT = 166.5  # gpm/psi^0.5
FLUSH_DURATION_S = 5.0 * units.SECONDS_PER_HOUR
# Dye injection: mass released evenly over one hour per injector.
DYE_MASS_KG = 100.0
DYE_DURATION_S = 1.0 * units.SECONDS_PER_HOUR

_EMITTER_SI = units.GPM_TO_M3S / math.sqrt(units.PSI_TO_M)
_T_EPS = 1e-6  # s; tolerance when comparing simulation times


@dataclass(frozen=True)
class FlushAction:
    node: str
    start_s: float
    duration_s: float = FLUSH_DURATION_S
    coefficient: float = FLUSH_COEFFICIENT

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class DyeAction:
    node: str
    start_s: float
    duration_s: float = DYE_DURATION_S
    mass_kg: float = DYE_MASS_KG

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class ResponseProtocol:
    """A snapped response plan: which hydrants to flush, where to inject dye."""

    flush_nodes: tuple[str, ...]
    dye_nodes: tuple[str, ...]

    def is_empty(self) -> bool:
        return not self.flush_nodes and not self.dye_nodes

    def actions_at(
        self,
        start_s: float,
        flush_duration_s: float = FLUSH_DURATION_S,
        dye_mass_kg: float = DYE_MASS_KG,
        dye_duration_s: float = DYE_DURATION_S,
        flush_coefficient: float = FLUSH_COEFFICIENT,
    ) -> tuple[tuple[FlushAction, ...], tuple[DyeAction, ...]]:
        flushes = tuple(
            FlushAction(n, start_s, flush_duration_s, flush_coefficient)
            for n in self.flush_nodes
        )
        dyes = tuple(
            DyeAction(n, start_s, dye_duration_s, dye_mass_kg) for n in self.dye_nodes
        )
        return flushes, dyes


EMPTY_PROTOCOL = ResponseProtocol((), ())


class SimulationRecorder:
    """Collects a concentration/impact time series while a sim advances."""

    def __init__(self) -> None:
        self.times: list[float] = []
        self.conc: list[np.ndarray] = []
        self.utim_g: list[float] = []

    def sample(self, sim: "EmergencySimulator") -> None:
        self.times.append(sim.time_s)
        self.conc.append(sim.transport.node_conc.copy())
        self.utim_g.append(sim.utim_g())

    def concentration_array(self) -> np.ndarray:
        return np.array(self.conc) if self.conc else np.zeros((0, 2, 0))


class EmergencySimulator:
    """Clock-driven network simulation with consumer feedback."""

    def __init__(
        self,
        net: Network,
        *,
        quality_step_s: float = 300.0,
        exposure: ExposureParams | None = None,
        index: NetworkIndex | None = None,
        model: HydraulicModel | None = None,
    ):
        self.index = index if index is not None else NetworkIndex(net)
        self.model = model if model is not None else HydraulicModel(self.index)
        self.exposure = exposure if exposure is not None else ExposureParams()
        self.quality_step_s = float(quality_step_s)

        self.time_s = 0.0
        self.scenario: ContaminationScenario | None = None
        self.flushes: list[FlushAction] = []
        self.dyes: list[DyeAction] = []
        self.transport = TransportState(self.index, quality_step_s)
        self.cohorts: CohortSet = build_cohorts(self.index)
        self.tank_level = self.index.tank_level_init.copy()
        self.warnings: list[str] = []

        self._events = tuple(sorted(self.exposure.ingestion_times_s))
        self._event_idx = 0
        self._stale = True
        self._q_warm: np.ndarray | None = None
        self._flow: np.ndarray | None = None
        self._draw_demand: np.ndarray | None = None
        self._draw_emitter: np.ndarray | None = None
        self._sources: list[SourceSpec] = []

    # -- state management ---------------------------------------------------

    def clone(self) -> "EmergencySimulator":
        other = EmergencySimulator.__new__(EmergencySimulator)
        other.index = self.index
        other.model = self.model
        other.exposure = self.exposure
        other.quality_step_s = self.quality_step_s
        other.time_s = self.time_s
        other.scenario = self.scenario
        other.flushes = list(self.flushes)
        other.dyes = list(self.dyes)
        other.transport = self.transport.clone()
        other.cohorts = self.cohorts.clone()
        other.tank_level = self.tank_level.copy()
        other.warnings = list(self.warnings)
        other._events = self._events
        other._event_idx = self._event_idx
        other._stale = self._stale
        other._q_warm = self._q_warm
        other._flow = self._flow
        other._draw_demand = self._draw_demand
        other._draw_emitter = self._draw_emitter
        other._sources = list(self._sources)
        return other

    def set_scenario(self, scenario: ContaminationScenario | None) -> None:
        """Install the contamination being simulated (replaces any previous)."""
        self.scenario = scenario
        self._sources = [s for s in self._sources if s.species != CONTAMINANT]
        if scenario is not None:
            if scenario.node not in self.index.node_index:
                raise ValueError(f"scenario node {scenario.node!r} is not in the network")
            self._sources.insert(
                0,
                SourceSpec(
                    node=scenario.node,
                    species=CONTAMINANT,
                    mass_kg=scenario.mass_kg,
                    start_s=scenario.start_s,
                    duration_s=scenario.duration_s,
                ),
            )
        self._stale = True

    def add_flush(self, action: FlushAction) -> None:
        if action.node not in self.index.node_index:
            raise ValueError(f"flush node {action.node!r} is not in the network")
        if self.index.node_index[action.node] >= self.index.n_junctions:
            raise ValueError(f"flush node {action.node!r} is not a junction")
        self.flushes.append(action)
        if action.start_s <= self.time_s + _T_EPS:
            self._stale = True

    def add_dye(self, action: DyeAction) -> None:
        if action.node not in self.index.node_index:
            raise ValueError(f"dye node {action.node!r} is not in the network")
        self.dyes.append(action)
        self._sources.append(
            SourceSpec(
                node=action.node,
                species=DYE,
                mass_kg=action.mass_kg,
                start_s=action.start_s,
                duration_s=action.duration_s,
            )
        )

    def apply_protocol(self, protocol: ResponseProtocol, start_s: float, **action_kwargs) -> None:
        flushes, dyes = protocol.actions_at(start_s, **action_kwargs)
        for f in flushes:
            self.add_flush(f)
        for d in dyes:
            self.add_dye(d)

    # -- results ------------------------------------------------------------

    def utim_g(self) -> float:
        return _utim_g(self.cohorts)

    def impact_by_junction(self) -> np.ndarray:
        return _impact_by_junction(self.cohorts, self.index.n_junctions)

    # -- stepping -----------------------------------------------------------

    def _next_breakpoint(self, t: float) -> float:
        nxt = (math.floor(t / units.SECONDS_PER_HOUR) + 1) * units.SECONDS_PER_HOUR
        for action in self.flushes:
            for edge in (action.start_s, action.end_s):
                if t + _T_EPS < edge < nxt:
                    nxt = edge
        if self._event_idx < len(self._events):
            nxt = min(nxt, self._events[self._event_idx])
        return nxt

    def _is_action_edge(self, t: float) -> bool:
        return any(
            abs(t - edge) <= _T_EPS
            for action in self.flushes
            for edge in (action.start_s, action.end_s)
        )

    def _resolve_hydraulics(self) -> None:
        index = self.index
        hour = int(self.time_s // units.SECONDS_PER_HOUR)
        multiplier = self.scenario.demand_multiplier if self.scenario else 1.0
        demand = index.demands_at_hour(hour, multiplier)
        demand *= demand_factors(self.cohorts, index.n_junctions, self.time_s)

        k_si = np.zeros(index.n_junctions)
        for action in self.flushes:
            if action.start_s - _T_EPS <= self.time_s < action.end_s - _T_EPS:
                k_si[index.node_index[action.node]] += action.coefficient * _EMITTER_SI

        snap = self.model.solve(
            demand, k_si, self.tank_level, q_init=self._q_warm, time_s=self.time_s
        )
        self._q_warm = snap.flow
        self._flow = snap.flow
        self._draw_demand = snap.demand
        self._draw_emitter = snap.emitter_flow
        self.warnings.extend(snap.warnings)
        self.transport.set_tank_levels(self.tank_level)
        self._stale = False

    def _source_mass(self, t0: float, t1: float) -> np.ndarray | None:
        if not self._sources:
            return None
        src = np.zeros((2, self.index.n_nodes))
        total = 0.0
        for spec in self._sources:
            mass = spec.mass_in_window_g(t0, t1)
            if mass > 0.0:
                src[spec.species, self.index.node_index[spec.node]] += mass
                total += mass
        return src if total > 0.0 else None

    def advance_to(self, t_end: float, recorder: SimulationRecorder | None = None) -> None:
        """Advance the simulation clock to ``t_end`` (seconds since 00:00)."""
        if t_end < self.time_s - _T_EPS:
            raise ValueError("cannot advance backwards")
        while self.time_s < t_end - _T_EPS:
            t1 = min(self._next_breakpoint(self.time_s), t_end)
            if self._stale:
                self._resolve_hydraulics()

            t = self.time_s
            while t < t1 - _T_EPS:
                tp = min(t + self.quality_step_s, t1)
                dt = tp - t
                self.transport.advance(
                    self._flow,
                    self._draw_demand,
                    self._draw_emitter,
                    dt,
                    self._source_mass(t, tp),
                )
                if self.index.n_tanks:
                    inflow = self.model.tank_net_inflow_from_flow(self._flow)
                    self.tank_level, notes = advance_tank_levels(
                        self.index, self.tank_level, inflow, dt
                    )
                    self.warnings.extend(notes)
                t = tp
                self.time_s = t
                if recorder is not None:
                    recorder.sample(self)
            self.time_s = t1

            while (
                self._event_idx < len(self._events)
                and self._events[self._event_idx] <= self.time_s + _T_EPS
            ):
                process_ingestion_event(
                    self.cohorts,
                    self.transport.node_conc[CONTAMINANT, : self.index.n_junctions],
                    self.transport.node_conc[DYE, : self.index.n_junctions],
                    self._events[self._event_idx],
                    self.exposure,
                )
                self._event_idx += 1

            on_hour = abs(t1 % units.SECONDS_PER_HOUR) <= _T_EPS or (
                units.SECONDS_PER_HOUR - (t1 % units.SECONDS_PER_HOUR) <= _T_EPS
            )
            if on_hour or self._is_action_edge(t1):
                self._stale = True


def evaluate_protocol(
    base: EmergencySimulator,
    protocol: ResponseProtocol,
    start_s: float,
    horizon_s: float | None = None,
    **action_kwargs,
) -> EmergencySimulator:
    """Score a candidate protocol executed at ``start_s`` on a clone of ``base``.

    Returns the finished clone; its ``utim_g()`` is the predicted ultimate
    ingested mass.  The horizon defaults to the last ingestion event, after
    which the total cannot change.
    """
    sim = base.clone()
    if start_s > sim.time_s + _T_EPS:
        sim.advance_to(start_s)
    sim.apply_protocol(protocol, max(start_s, sim.time_s), **action_kwargs)
    end = horizon_s if horizon_s is not None else sim.exposure.last_event_s()
    if end > sim.time_s:
        sim.advance_to(end)
    return sim
