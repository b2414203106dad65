"""Consumer exposure: ingestion schedule, dose bookkeeping, demand feedback.

Population is grouped into cohorts, one per populated junction; everyone in
a cohort drinks the same water on the same schedule, so doses are tracked
per person and scaled by cohort size.

Daily drinking water (0.93 L) is taken in five equal portions at 07:00,
09:30, 12:00, 15:00 and 18:00.  A cohort that has cumulatively ingested the
toxic dose becomes sick-pending and stops all consumption one stop-delay
later; a cohort that *sees* warning dye at or above the alert threshold at
an ingestion event stops immediately and skips that ingestion.  Stopped
cohorts keep only the non-consumptive fraction of their demand (their class
fraction); transitions feed back into hydraulics at the next hydraulic step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .netmodel import NetworkIndex

NORMAL = 0
SICK_PENDING = 1
STOPPED = 2

# Toxic dose presets (mg per person): susceptible, average, resilient.
TD_PRESETS = {"min": 2.45, "avg": 3.5, "max": 4.97}


@dataclass(frozen=True)
class ExposureParams:
    ingestion_times_s: tuple[float, ...] = (
        7 * 3600.0,
        9 * 3600.0 + 1800.0,
        12 * 3600.0,
        15 * 3600.0,
        18 * 3600.0,
    )
    daily_volume_l: float = 0.93
    dye_alert_mg_l: float = 25.0
    stop_delay_s: float = 3600.0
    toxic_dose_mg: float = TD_PRESETS["avg"]

    @property
    def volume_per_event_l(self) -> float:
        return self.daily_volume_l / len(self.ingestion_times_s)

    def last_event_s(self) -> float:
        return max(self.ingestion_times_s)


@dataclass
class CohortSet:
    """Vectorized cohort state; one row per populated junction."""

    junction_idx: np.ndarray  # index into the junction arrays
    size: np.ndarray  # persons
    class_fraction: np.ndarray  # demand retained once stopped
    ingested_mg: np.ndarray  # per person, cumulative
    state: np.ndarray  # NORMAL / SICK_PENDING / STOPPED
    stop_time_s: np.ndarray  # scheduled or actual stop; +inf until known

    def clone(self) -> "CohortSet":
        return CohortSet(
            self.junction_idx,  # static
            self.size,  # static
            self.class_fraction,  # static
            self.ingested_mg.copy(),
            self.state.copy(),
            self.stop_time_s.copy(),
        )


def build_cohorts(index: NetworkIndex) -> CohortSet:
    idx = np.flatnonzero(index.population > 0.0)
    return CohortSet(
        junction_idx=idx,
        size=index.population[idx].copy(),
        class_fraction=index.class_fraction[idx].copy(),
        ingested_mg=np.zeros(len(idx)),
        state=np.zeros(len(idx), dtype=np.int8),
        stop_time_s=np.full(len(idx), np.inf),
    )


def process_ingestion_event(
    cohorts: CohortSet,
    conc_contaminant: np.ndarray,  # mg/L per junction
    conc_dye: np.ndarray,
    t_s: float,
    params: ExposureParams,
) -> np.ndarray:
    """Apply one ingestion event in place; returns mg ingested per person.

    Order matters and is part of the contract: scheduled stops first, then
    dye alerts (which pre-empt that event's ingestion), then ingestion, then
    toxic-dose crossings (which schedule a stop one delay later).
    """
    state = cohorts.state
    stop = cohorts.stop_time_s

    due = (state == SICK_PENDING) & (stop <= t_s)
    state[due] = STOPPED

    c_dye = conc_dye[cohorts.junction_idx]
    alerted = (state != STOPPED) & (c_dye >= params.dye_alert_mg_l)
    state[alerted] = STOPPED
    stop[alerted] = np.minimum(stop[alerted], t_s)

    drinking = state != STOPPED
    dose = np.zeros(len(state))
    dose[drinking] = (
        conc_contaminant[cohorts.junction_idx[drinking]] * params.volume_per_event_l
    )
    cohorts.ingested_mg += dose

    crossed = (state == NORMAL) & (cohorts.ingested_mg >= params.toxic_dose_mg)
    state[crossed] = SICK_PENDING
    stop[crossed] = t_s + params.stop_delay_s
    return dose


def effective_stopped(cohorts: CohortSet, t_s: float) -> np.ndarray:
    """Cohorts whose consumption has ceased by time ``t_s``.

    A sick-pending cohort counts as stopped once its scheduled stop time has
    passed, even before the next ingestion event makes the state transition.
    """
    return (cohorts.state == STOPPED) | (
        (cohorts.state == SICK_PENDING) & (cohorts.stop_time_s <= t_s)
    )


def demand_factors(cohorts: CohortSet, n_junctions: int, t_s: float) -> np.ndarray:
    """Per-junction demand multiplier at time ``t_s`` (1.0 or class fraction)."""
    factors = np.ones(n_junctions)
    stopped = effective_stopped(cohorts, t_s)
    factors[cohorts.junction_idx[stopped]] = cohorts.class_fraction[stopped]
    return factors


def utim_g(cohorts: CohortSet) -> float:
    """Total ingested mass, grams, over all cohorts."""
    return float(np.dot(cohorts.size, cohorts.ingested_mg) / 1000.0)


def impact_by_junction(cohorts: CohortSet, n_junctions: int) -> np.ndarray:
    """Grams ingested per junction (for the impact map)."""
    out = np.zeros(n_junctions)
    out[cohorts.junction_idx] = cohorts.size * cohorts.ingested_mg / 1000.0
    return out
