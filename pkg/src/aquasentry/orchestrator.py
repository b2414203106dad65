"""The emergency loop: clock, epochs, events, and the UTIM time series.

A run starts optimizing one response delay after the (perceived) injection
began and keeps going to the simulation horizon.  Time is carved into
*epochs* — maximal intervals in which the optimization environment is
frozen.  Epoch boundaries occur only at hour marks, perceived-scenario
updates, and protocol executions; on every boundary the whole population is
re-evaluated against the new environment and the search continues from
where it was (it is never restarted).

Within an epoch the optimizer runs a fixed generation budget (``budget``
clock mode: G generations per simulated hour, deterministic) or free-runs
against scaled wall time (``wall`` mode, for the live console).  One UTIM
sample is recorded per generation: the incumbent (minimum-UTIM member) and
the no-response baseline, which is the predicted impact of doing nothing
under the current perceived scenario.

Factor flags isolate the three dynamic contributions — scenario updates,
protocol executions, and consumer reactions — so each can be studied alone
or in combination.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import units
from .engine import (
    DYE_DURATION_S,
    DYE_MASS_KG,
    FLUSH_COEFFICIENT,
    FLUSH_DURATION_S,
    EmergencySimulator,
    ResponseProtocol,
    evaluate_protocol,
)
from .exposure import TD_PRESETS, ExposureParams
from .hydraulics import HydraulicModel
from .netmodel import Network, NetworkIndex
from .optimizer import GASettings, ProtocolOptimizer
from .scenario import (
    ContaminationScenario,
    PerceivedTimeline,
    perceived_at,
    validate_timeline,
)
from .units import format_clock, parse_clock

_T_EPS = 1e-6


class OrchestratorError(Exception):
    pass


@dataclass(frozen=True)
class FactorFlags:
    """Which dynamic contributions are simulated (all on = full realism)."""

    scenario_updates: bool = True
    executions: bool = True
    reactions: bool = True


@dataclass(frozen=True)
class EmergencyConfig:
    response_delay_h: float = 6.0
    horizon_h: float = 24.0
    execution_times_s: tuple[float, ...] = (
        parse_clock("09:00"),
        parse_clock("12:00"),
    )
    clock_mode: str = "budget"  # "budget" | "wall"
    generations_per_hour: int = 25
    wall_seconds_per_sim_hour: float = 60.0  # wall mode pacing
    quality_step_s: float = 300.0
    flush_duration_s: float = FLUSH_DURATION_S
    flush_coefficient: float = FLUSH_COEFFICIENT
    dye_mass_kg: float = DYE_MASS_KG
    dye_duration_s: float = DYE_DURATION_S
    ga: GASettings = field(default_factory=GASettings)
    exposure: ExposureParams = field(default_factory=ExposureParams)
    flags: FactorFlags = field(default_factory=FactorFlags)

    def __post_init__(self):
        if self.response_delay_h < 0 or self.response_delay_h >= self.horizon_h:
            raise OrchestratorError("response delay must lie within the horizon")
        if self.generations_per_hour < 1:
            raise OrchestratorError("generations_per_hour must be at least 1")
        if self.clock_mode not in ("budget", "wall"):
            raise OrchestratorError(f"unknown clock mode {self.clock_mode!r}")
        if tuple(sorted(self.execution_times_s)) != self.execution_times_s:
            raise OrchestratorError("execution times must be sorted")

    def action_kwargs(self) -> dict:
        return {
            "flush_duration_s": self.flush_duration_s,
            "flush_coefficient": self.flush_coefficient,
            "dye_mass_kg": self.dye_mass_kg,
            "dye_duration_s": self.dye_duration_s,
        }


@dataclass(frozen=True)
class UtimSample:
    time_s: float
    incumbent_utim_g: float
    no_response_utim_g: float
    generation: int
    epoch: int


@dataclass(frozen=True)
class EpochProtocol:
    epoch: int
    end_time_s: float
    utim_g: float
    protocol: ResponseProtocol
    genome: np.ndarray  # (slots, 2)


@dataclass
class EmergencyResult:
    samples: list[UtimSample]
    events: list[tuple[float, str, str]]
    epoch_protocols: list[EpochProtocol]
    impact_g: np.ndarray  # per junction, final-epoch incumbent projection
    junction_ids: tuple[str, ...]
    response_start_s: float
    horizon_s: float

    def confined_area_gram_hours(self, until_s: float | None = None) -> float:
        """Trapezoidal integral of (no-response − incumbent) in gram-hours."""
        t1 = until_s if until_s is not None else parse_clock("18:00")
        pts = [
            (s.time_s, s.no_response_utim_g - s.incumbent_utim_g)
            for s in self.samples
            if s.time_s <= t1 + _T_EPS
        ]
        if not pts:
            return 0.0
        if pts[-1][0] < t1 - _T_EPS:
            pts.append((t1, pts[-1][1]))
        ts = np.array([p[0] for p in pts])
        gap = np.array([p[1] for p in pts])
        return float(np.trapezoid(gap, ts) / units.SECONDS_PER_HOUR)

    def write_outputs(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []

        path = out / "utim_timeseries.csv"
        rows = ["sim_time_s,incumbent_utim_g,no_response_utim_g,generation,epoch"]
        for s in self.samples:
            rows.append(
                f"{s.time_s!r},{s.incumbent_utim_g!r},{s.no_response_utim_g!r},"
                f"{s.generation},{s.epoch}"
            )
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

        path = out / "events.csv"
        rows = ["time,kind,payload"]
        for t, kind, payload in self.events:
            rows.append(f"{t!r},{kind},{payload}")
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

        path = out / "protocols.csv"
        rows = ["epoch,slot,kind,node_id,x_m,y_m"]
        for ep in self.epoch_protocols:
            n_flush = len(ep.protocol.flush_nodes)
            for slot, node in enumerate(ep.protocol.flush_nodes + ep.protocol.dye_nodes):
                kind = "flush" if slot < n_flush else "dye"
                x, y = ep.genome[slot]
                rows.append(f"{ep.epoch},{slot},{kind},{node},{float(x)!r},{float(y)!r}")
        path.write_text("\n".join(rows) + "\n")
        written.append(path)

        path = out / "impact_map.csv"
        rows = ["node_id,ultimate_ingested_g"]
        for nid, grams in zip(self.junction_ids, self.impact_g):
            rows.append(f"{nid},{float(grams)!r}")
        path.write_text("\n".join(rows) + "\n")
        written.append(path)
        return written


class EmergencyRun:
    """Single-writer event loop owning all run state.

    Driving styles:

    * ``run()`` — batch: advance straight to the horizon (budget mode).
    * ``advance_to_time(t)`` — incremental deterministic advance; used by
      the service.  Calling it in any increments produces byte-identical
      results to one big call.
    * ``step_wall(t)`` — wall-clock mode: process due boundaries, then run
      a single generation stamped at the given sim time.
    """

    def __init__(self, net: Network, timeline: PerceivedTimeline, config: EmergencyConfig):
        validate_timeline(timeline, net)
        self.net = net
        self.config = config
        self.index = NetworkIndex(net)
        self.model = HydraulicModel(self.index)
        self.exposure = config.exposure
        if not config.flags.reactions:
            # Consumers never notice anything: no dye alerts, no toxic-dose
            # stops, hence no demand feedback either.
            self.exposure = dataclasses.replace(
                config.exposure, dye_alert_mg_l=math.inf, toxic_dose_mg=math.inf
            )
        self.timeline = timeline
        self.optimizer = ProtocolOptimizer(net, config.ga)

        first = timeline.entries[0]
        self.response_start_s = first.scenario.start_s + config.response_delay_h * units.SECONDS_PER_HOUR
        self.horizon_s = config.horizon_h * units.SECONDS_PER_HOUR
        if not first.effective_s <= self.response_start_s:
            raise OrchestratorError(
                "first perceived estimate must exist by the response start "
                f"({format_clock(self.response_start_s)})"
            )
        if self.response_start_s >= self.horizon_s:
            raise OrchestratorError("response would start after the horizon")
        for t in config.execution_times_s:
            if config.flags.executions and not self.response_start_s < t < self.horizon_s:
                raise OrchestratorError(
                    f"execution time {format_clock(t)} outside the response window"
                )

        self.perceived: ContaminationScenario = perceived_at(timeline, self.response_start_s)
        self._pending = [e for e in timeline.entries if e.effective_s > self.response_start_s + _T_EPS]
        self.executed: list[tuple[float, ResponseProtocol]] = []

        self.samples: list[UtimSample] = []
        self.events: list[tuple[float, str, str]] = []
        self.epoch_protocols: list[EpochProtocol] = []
        self.epoch_idx = -1
        self.time_s = 0.0

        self._generation_count = 0
        self._gen_slot = 0
        self._gen_budget = 0
        self._slot_dt = 0.0
        self._epoch_t0 = 0.0
        self._epoch_t1 = 0.0
        self._fitness = None
        self._fitness_cache: dict = {}
        self._noresp_cache: dict[tuple, float] = {}
        self._prefix: EmergencySimulator | None = None
        self._prefix_dirty = True
        self._started = False
        self._finished = False

    # -- events ---------------------------------------------------------------

    def _log(self, t: float, kind: str, payload: str) -> None:
        self.events.append((t, kind, payload))

    @staticmethod
    def _describe(s: ContaminationScenario) -> str:
        return (
            f"node={s.node} mass_kg={s.mass_kg!r} start={format_clock(s.start_s)} "
            f"duration_h={s.duration_s / 3600.0!r} demand_mult={s.demand_multiplier!r}"
        )

    @staticmethod
    def _describe_protocol(p: ResponseProtocol) -> str:
        flush = "+".join(p.flush_nodes) or "-"
        dye = "+".join(p.dye_nodes) or "-"
        return f"flush={flush} dye={dye}"

    # -- simulation state -------------------------------------------------------

    def _fresh_sim(self) -> EmergencySimulator:
        return EmergencySimulator(
            self.net,
            quality_step_s=self.config.quality_step_s,
            exposure=self.exposure,
            index=self.index,
            model=self.model,
        )

    def _build_prefix(self, t: float) -> EmergencySimulator:
        sim = self._fresh_sim()
        sim.set_scenario(self.perceived)
        for t_exec, protocol in self.executed:
            sim.apply_protocol(protocol, t_exec, **self.config.action_kwargs())
        if t > 0.0:
            sim.advance_to(t)
        return sim

    def _ensure_prefix(self, t: float) -> None:
        if self._prefix is None or self._prefix_dirty:
            self._prefix = self._build_prefix(t)
            self._prefix_dirty = False
        elif self._prefix.time_s < t - _T_EPS:
            self._prefix.advance_to(t)

    def _no_response_utim(self) -> float:
        key = self.perceived.key()
        if key not in self._noresp_cache:
            sim = self._fresh_sim()
            sim.set_scenario(self.perceived)
            sim.advance_to(self.exposure.last_event_s())
            self._noresp_cache[key] = sim.utim_g()
        return self._noresp_cache[key]

    def _make_fitness(self):
        prefix = self._prefix
        t_now = self._epoch_t0
        cache = self._fitness_cache
        kwargs = self.config.action_kwargs()

        def fitness(protocol: ResponseProtocol) -> float:
            key = (protocol.flush_nodes, protocol.dye_nodes)
            if key not in cache:
                sim = evaluate_protocol(prefix, protocol, t_now, **kwargs)
                cache[key] = sim.utim_g()
            return cache[key]

        return fitness

    # -- epoch machinery ---------------------------------------------------------

    def _next_boundary(self, t: float) -> float:
        nxt = min(
            self.horizon_s,
            (math.floor(t / units.SECONDS_PER_HOUR + _T_EPS) + 1) * units.SECONDS_PER_HOUR,
        )
        if self.config.flags.scenario_updates and self._pending:
            first = self._pending[0].effective_s
            if t + _T_EPS < first < nxt:
                nxt = first
        if self.config.flags.executions:
            for te in self.config.execution_times_s:
                if t + _T_EPS < te < nxt:
                    nxt = te
        return nxt

    def _open_epoch(self, t0: float) -> None:
        self.epoch_idx += 1
        self._epoch_t0 = t0
        self._epoch_t1 = self._next_boundary(t0)
        self._fitness_cache = {}
        self._ensure_prefix(t0)
        self._fitness = self._make_fitness()
        hours = (self._epoch_t1 - t0) / units.SECONDS_PER_HOUR
        self._gen_budget = max(1, round(self.config.generations_per_hour * hours))
        self._slot_dt = (self._epoch_t1 - t0) / self._gen_budget
        if self.epoch_idx == 0:
            self.optimizer.initialize(self._fitness)
            self._sample(t0)
            self._gen_slot = 1
        else:
            self.optimizer.re_evaluate(self._fitness)
            self._gen_slot = 0

    def _slot_time(self, k: int) -> float:
        return self._epoch_t0 + k * self._slot_dt

    def _sample(self, t: float) -> None:
        inc = self.optimizer.incumbent()
        self.samples.append(
            UtimSample(
                time_s=t,
                incumbent_utim_g=inc.utim_g,
                no_response_utim_g=self._no_response_utim(),
                generation=self._generation_count,
                epoch=self.epoch_idx,
            )
        )

    def _record_epoch_protocol(self, end_t: float) -> None:
        inc = self.optimizer.incumbent()
        self.epoch_protocols.append(
            EpochProtocol(
                epoch=self.epoch_idx,
                end_time_s=end_t,
                utim_g=inc.utim_g,
                protocol=inc.protocol,
                genome=inc.genome.copy(),
            )
        )

    def _apply_boundary_events(self, t: float) -> None:
        if self.config.flags.scenario_updates:
            while self._pending and self._pending[0].effective_s <= t + _T_EPS:
                entry = self._pending.pop(0)
                self.perceived = entry.scenario
                self._prefix_dirty = True
                self._log(t, "scenario-update", self._describe(entry.scenario))
        if self.config.flags.executions:
            for te in self.config.execution_times_s:
                if abs(te - t) <= _T_EPS:
                    protocol = self.optimizer.incumbent().protocol
                    self.executed.append((te, protocol))
                    if self._prefix is not None and not self._prefix_dirty:
                        self._prefix.apply_protocol(
                            protocol, te, **self.config.action_kwargs()
                        )
                    label = self._describe_protocol(protocol)
                    if te >= self.exposure.last_event_s():
                        label += " note=after-last-ingestion-no-utim-effect"
                    self._log(t, "execution", label)

    # -- driving -------------------------------------------------------------

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        self.time_s = self.response_start_s
        self._log(
            self.response_start_s,
            "response-start",
            f"perceived {self._describe(self.perceived)}",
        )
        self._open_epoch(self.response_start_s)

    def advance_to_time(self, t: float) -> None:
        """Deterministic (budget-clock) advance to simulation time ``t``."""
        t = min(float(t), self.horizon_s)
        if not self._started:
            if t < self.response_start_s - _T_EPS:
                self.time_s = t
                return
            self.start()
        while True:
            while (
                self._gen_slot < self._gen_budget
                and self._slot_time(self._gen_slot) <= t + _T_EPS
            ):
                t_gen = self._slot_time(self._gen_slot)
                self.optimizer.step_generation(self._fitness)
                self._generation_count += 1
                self._sample(t_gen)
                self._gen_slot += 1
            if t >= self._epoch_t1 - _T_EPS and self._epoch_t1 < self.horizon_s - _T_EPS:
                boundary = self._epoch_t1
                self.time_s = boundary
                self._record_epoch_protocol(boundary)
                self._apply_boundary_events(boundary)
                self._open_epoch(boundary)
                continue
            break
        self.time_s = max(self.time_s, t)
        if t >= self.horizon_s - _T_EPS and not self._finished:
            self._finish()

    def step_wall(self, sim_now: float) -> bool:
        """Wall-mode driver: handle due boundaries, then one generation.

        Returns False once the horizon is reached.
        """
        sim_now = min(float(sim_now), self.horizon_s)
        if not self._started:
            if sim_now < self.response_start_s - _T_EPS:
                self.time_s = sim_now
                return True
            self.start()
        while sim_now >= self._epoch_t1 - _T_EPS and self._epoch_t1 < self.horizon_s - _T_EPS:
            boundary = self._epoch_t1
            self.time_s = boundary
            self._record_epoch_protocol(boundary)
            self._apply_boundary_events(boundary)
            self._open_epoch(boundary)
        self.time_s = max(self.time_s, sim_now)
        if sim_now >= self.horizon_s - _T_EPS:
            if not self._finished:
                self._finish()
            return False
        self.optimizer.step_generation(self._fitness)
        self._generation_count += 1
        self._sample(sim_now)
        return True

    def inject_update(self, effective_s: float, scenario: ContaminationScenario) -> None:
        """Queue a live perceived-scenario update (service endpoint)."""
        if scenario.node not in self.index.node_index:
            raise OrchestratorError(f"scenario node {scenario.node!r} is not in the network")
        if effective_s <= self.time_s + _T_EPS:
            raise OrchestratorError("update must take effect in the future")
        from .scenario import TimelineEntry

        self._pending.append(TimelineEntry(effective_s=effective_s, scenario=scenario))
        self._pending.sort(key=lambda e: e.effective_s)
        # A new boundary may now fall inside the open epoch; cut it short.
        # The slot spacing stays frozen so samples already recorded keep
        # their times; only the not-yet-run tail of the budget is dropped.
        if self._started and self.config.flags.scenario_updates:
            first = self._pending[0].effective_s
            if self._epoch_t0 + _T_EPS < first < self._epoch_t1 - _T_EPS:
                self._epoch_t1 = first
                fitting = math.floor((first - self._epoch_t0 - _T_EPS) / self._slot_dt) + 1
                self._gen_budget = max(self._gen_slot, min(self._gen_budget, fitting))

    def execute_now(self, protocol: ResponseProtocol | None = None) -> ResponseProtocol:
        """Execute a protocol at the current time (service endpoint).

        Defaults to the current incumbent.  The open epoch is closed — the
        environment just changed — and a fresh one starts here.
        """
        if not self._started:
            raise OrchestratorError("run has not started yet")
        if self._finished:
            raise OrchestratorError("run is already finished")
        chosen = protocol if protocol is not None else self.optimizer.incumbent().protocol
        for node in chosen.flush_nodes:
            if node not in self.index.node_index:
                raise OrchestratorError(f"flush node {node!r} is not in the network")
            if self.index.node_index[node] >= self.index.n_junctions:
                raise OrchestratorError(f"flush node {node!r} is not a junction")
        for node in chosen.dye_nodes:
            if node not in self.index.node_index:
                raise OrchestratorError(f"dye node {node!r} is not in the network")
        t = self.time_s
        self.executed.append((t, chosen))
        if self._prefix is not None and not self._prefix_dirty:
            self._prefix.apply_protocol(chosen, t, **self.config.action_kwargs())
        self._log(t, "execution", self._describe_protocol(chosen) + " note=operator-initiated")
        self._record_epoch_protocol(t)
        self._open_epoch(t)
        return chosen

    def _finish(self) -> None:
        self._finished = True
        self.time_s = self.horizon_s
        self._record_epoch_protocol(self.horizon_s)
        self._log(self.horizon_s, "horizon", "simulation horizon reached")

    @property
    def finished(self) -> bool:
        return self._finished

    def run(self) -> EmergencyResult:
        self.advance_to_time(self.horizon_s)
        return self.result()

    # -- results ------------------------------------------------------------

    def impact_map_g(self) -> np.ndarray:
        """Projected per-junction ingestion under the current incumbent."""
        self._ensure_prefix(self._epoch_t0)
        sim = evaluate_protocol(
            self._prefix,
            self.optimizer.incumbent().protocol,
            self._epoch_t0,
            **self.config.action_kwargs(),
        )
        return sim.impact_by_junction()

    def result(self) -> EmergencyResult:
        if not self._finished:
            raise OrchestratorError("run has not reached the horizon yet")
        return EmergencyResult(
            samples=list(self.samples),
            events=list(self.events),
            epoch_protocols=list(self.epoch_protocols),
            impact_g=self.impact_map_g(),
            junction_ids=tuple(self.index.node_ids[: self.index.n_junctions]),
            response_start_s=self.response_start_s,
            horizon_s=self.horizon_s,
        )


# ---------------------------------------------------------------------------
# Config file I/O (INI)
# ---------------------------------------------------------------------------


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise OrchestratorError(f"not a boolean: {raw!r}")


def load_config(path: str | Path) -> EmergencyConfig:
    parser = configparser.ConfigParser()
    text = Path(path).read_text()
    parser.read_string(text)

    run = parser["run"] if parser.has_section("run") else {}
    flags_s = parser["flags"] if parser.has_section("flags") else {}
    ga_s = parser["ga"] if parser.has_section("ga") else {}
    exp_s = parser["exposure"] if parser.has_section("exposure") else {}
    act_s = parser["actions"] if parser.has_section("actions") else {}

    exec_raw = run.get("execution_times", "09:00, 12:00")
    execution_times = tuple(
        parse_clock(tok.strip()) for tok in exec_raw.split(",") if tok.strip()
    )

    td_raw = exp_s.get("toxic_dose", "avg").strip()
    toxic_dose = TD_PRESETS[td_raw] if td_raw in TD_PRESETS else float(td_raw)

    defaults = EmergencyConfig()
    ga_defaults = GASettings()
    exp_defaults = ExposureParams()
    return EmergencyConfig(
        response_delay_h=float(run.get("response_delay_h", defaults.response_delay_h)),
        horizon_h=float(run.get("horizon_h", defaults.horizon_h)),
        execution_times_s=execution_times,
        clock_mode=run.get("clock_mode", defaults.clock_mode).strip(),
        generations_per_hour=int(run.get("generations_per_hour", defaults.generations_per_hour)),
        wall_seconds_per_sim_hour=float(
            run.get("wall_seconds_per_sim_hour", defaults.wall_seconds_per_sim_hour)
        ),
        quality_step_s=float(run.get("quality_step_s", defaults.quality_step_s)),
        flush_duration_s=float(act_s.get("flush_duration_h", defaults.flush_duration_s / 3600.0))
        * 3600.0,
        flush_coefficient=float(act_s.get("flush_coefficient", defaults.flush_coefficient)),
        dye_mass_kg=float(act_s.get("dye_mass_kg", defaults.dye_mass_kg)),
        dye_duration_s=float(act_s.get("dye_duration_h", defaults.dye_duration_s / 3600.0))
        * 3600.0,
        ga=GASettings(
            population_size=int(ga_s.get("population_size", ga_defaults.population_size)),
            crossover_rate=float(ga_s.get("crossover_rate", ga_defaults.crossover_rate)),
            mutation_rate=float(ga_s.get("mutation_rate", ga_defaults.mutation_rate)),
            sbx_index=float(ga_s.get("sbx_index", ga_defaults.sbx_index)),
            mutation_index=float(ga_s.get("mutation_index", ga_defaults.mutation_index)),
            diversity_metric=ga_s.get("diversity_metric", ga_defaults.diversity_metric).strip(),
            n_flush=int(ga_s.get("n_flush", ga_defaults.n_flush)),
            n_dye=int(ga_s.get("n_dye", ga_defaults.n_dye)),
            seed=int(ga_s.get("seed", ga_defaults.seed)),
        ),
        exposure=ExposureParams(
            daily_volume_l=float(exp_s.get("daily_volume_l", exp_defaults.daily_volume_l)),
            dye_alert_mg_l=float(exp_s.get("dye_alert_mg_l", exp_defaults.dye_alert_mg_l)),
            stop_delay_s=float(exp_s.get("stop_delay_s", exp_defaults.stop_delay_s)),
            toxic_dose_mg=toxic_dose,
        ),
        flags=FactorFlags(
            scenario_updates=_parse_bool(str(flags_s.get("scenario_updates", "true"))),
            executions=_parse_bool(str(flags_s.get("executions", "true"))),
            reactions=_parse_bool(str(flags_s.get("reactions", "true"))),
        ),
    )


def dump_config(config: EmergencyConfig) -> str:
    """Render a config back to the sectioned text format."""
    lines = [
        "[run]",
        f"response_delay_h = {config.response_delay_h!r}",
        f"horizon_h = {config.horizon_h!r}",
        "execution_times = " + ", ".join(format_clock(t) for t in config.execution_times_s),
        f"clock_mode = {config.clock_mode}",
        f"generations_per_hour = {config.generations_per_hour}",
        f"wall_seconds_per_sim_hour = {config.wall_seconds_per_sim_hour!r}",
        f"quality_step_s = {config.quality_step_s!r}",
        "",
        "[flags]",
        f"scenario_updates = {str(config.flags.scenario_updates).lower()}",
        f"executions = {str(config.flags.executions).lower()}",
        f"reactions = {str(config.flags.reactions).lower()}",
        "",
        "[ga]",
        f"population_size = {config.ga.population_size}",
        f"crossover_rate = {config.ga.crossover_rate!r}",
        f"mutation_rate = {config.ga.mutation_rate!r}",
        f"sbx_index = {config.ga.sbx_index!r}",
        f"mutation_index = {config.ga.mutation_index!r}",
        f"diversity_metric = {config.ga.diversity_metric}",
        f"n_flush = {config.ga.n_flush}",
        f"n_dye = {config.ga.n_dye}",
        f"seed = {config.ga.seed}",
        "",
        "[exposure]",
        f"daily_volume_l = {config.exposure.daily_volume_l!r}",
        f"dye_alert_mg_l = {config.exposure.dye_alert_mg_l!r}",
        f"stop_delay_s = {config.exposure.stop_delay_s!r}",
        f"toxic_dose = {config.exposure.toxic_dose_mg!r}",
        "",
        "[actions]",
        f"flush_duration_h = {config.flush_duration_s / 3600.0!r}",
        f"flush_coefficient = {config.flush_coefficient!r}",
        f"dye_mass_kg = {config.dye_mass_kg!r}",
        f"dye_duration_h = {config.dye_duration_s / 3600.0!r}",
    ]
    return "\n".join(lines) + "\n"
