"""Demand-driven hydraulic solver (global gradient algorithm).

Solves steady network flow for one demand condition at a time: junction
heads and link flows such that Hazen-Williams energy losses and node
continuity hold simultaneously.  Hydrant emitters (pressure-dependent
orifice outflow used for flushing) enter the Newton iteration through the
node diagonal, so converged solutions satisfy continuity *including* the
emitter term to solver precision.

The engine drives :class:`HydraulicModel` directly with arrays; the
dict-based :func:`solve_snapshot` / :func:`run_extended_period` wrappers are
the stable public surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import units
from .netmodel import Network, NetworkIndex

FLOW_TOLERANCE = 1e-4  # relative flow change between iterations
NODE_TOLERANCE = 1e-9  # m^3/s absolute continuity residual (1e-6 L/s)
Q_TINY = 1e-6  # m^3/s gradient floor flow
MAX_ITERATIONS = 200


class HydraulicError(Exception):
    pass


class ConvergenceError(HydraulicError):
    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"solver did not converge in {iterations} iterations (residual {residual:.3e} m^3/s)"
        )
        self.iterations = iterations
        self.residual = residual


def emitter_flow_m3s(coefficient: float, pressure_head_m: float) -> float:
    """Orifice outflow for a hydrant emitter.

    ``coefficient`` is in gpm/psi^0.5 (hydrant datasheets quote this unit);
    the result is m^3/s for a pressure head in metres.  Zero at or below
    zero pressure.
    """
    if pressure_head_m <= 0.0:
        return 0.0
    return coefficient * units.GPM_TO_M3S * math.sqrt(pressure_head_m / units.PSI_TO_M)


def fit_pump_curve(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Fit H = h0 - r*Q^w through curve points ((L/s, m), first at Q=0).

    Returns (h0 [m], r, w) with Q in m^3/s.  One point beyond shutoff gives
    the classic w=2 shape; two give an exact three-point fit.
    """
    if points[0][0] != 0.0:
        raise HydraulicError("pump curve must start at zero flow")
    h0 = points[0][1]
    rest = [(q * units.LPS_TO_M3S, h) for q, h in points[1:]]
    if not rest:
        raise HydraulicError("pump curve needs a point beyond shutoff head")
    if len(rest) == 1:
        q1, h1 = rest[0]
        return h0, (h0 - h1) / q1**2, 2.0
    (q1, h1), (q2, h2) = rest[0], rest[-1]
    w = math.log((h0 - h2) / (h0 - h1)) / math.log(q2 / q1)
    r = (h0 - h1) / q1**w
    return h0, r, w


@dataclass
class HydraulicSnapshot:
    """Converged network state for one demand condition (SI units)."""

    time_s: float
    head: np.ndarray  # total head per node, m (node order: junctions, reservoirs, tanks)
    flow: np.ndarray  # signed link flow start->end, m^3/s
    demand: np.ndarray  # consumer draw per junction, m^3/s
    emitter_flow: np.ndarray  # hydrant outflow per junction, m^3/s
    tank_level: np.ndarray  # m above tank bottom
    iterations: int = 0
    residual: float = 0.0
    warnings: tuple[str, ...] = ()


@dataclass
class TimeSlice:
    """A span of constant hydraulics inside an extended-period run."""

    t0: float
    dt: float
    snapshot: HydraulicSnapshot


class HydraulicModel:
    """Compiled solver for one network; reusable across demand conditions."""

    def __init__(self, index: NetworkIndex):
        self.index = index
        net = index.net
        nj = index.n_junctions
        self.nj = nj
        self.n_fixed = index.n_nodes - nj

        # Pipe Hazen-Williams resistance (SI, Q in m^3/s).
        diam_m = np.array([p.diameter for p in net.pipes]) / 1000.0
        rough = np.array([p.roughness for p in net.pipes])
        self.pipe_r = (
            units.HW_K
            * index.pipe_length
            / (rough**units.HW_EXP * diam_m**units.HW_DEXP)
        )

        self.pump_h0 = np.zeros(len(net.pumps))
        self.pump_r = np.zeros(len(net.pumps))
        self.pump_w = np.zeros(len(net.pumps))
        for k, pump in enumerate(net.pumps):
            self.pump_h0[k], self.pump_r[k], self.pump_w[k] = fit_pump_curve(pump.curve)

        start, end = index.link_start, index.link_end
        self.start, self.end = start, end
        self.start_is_junction = start < nj
        self.end_is_junction = end < nj
        both = self.start_is_junction & self.end_is_junction
        self._off_rows = np.concatenate([start[both], end[both]])
        self._off_cols = np.concatenate([end[both], start[both]])
        self._both = both
        self._sf_mask = ~self.start_is_junction & self.end_is_junction  # fixed -> junction
        self._ef_mask = self.start_is_junction & ~self.end_is_junction  # junction -> fixed

        # Flow initial guess: 0.3 m/s in pipes, mid-curve for pumps.
        q0 = np.empty(index.n_links)
        q0[: index.n_pipes] = 0.3 * index.pipe_area
        for k, pump in enumerate(net.pumps):
            q_bep = pump.curve[len(pump.curve) // 2][0] * units.LPS_TO_M3S
            q0[index.n_pipes + k] = max(q_bep, Q_TINY)
        self._q_default = q0

    # -- per-iteration link linearization ---------------------------------

    def _linearize(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Headloss h(q) and gradient dh/dq per link, gradient floored."""
        npipes = self.index.n_pipes
        h = np.empty_like(q)
        g = np.empty_like(q)

        qp = q[:npipes]
        aq = np.abs(qp)
        r = self.pipe_r
        h[:npipes] = r * np.sign(qp) * aq**units.HW_EXP
        g[:npipes] = np.maximum(
            units.HW_EXP * r * aq ** (units.HW_EXP - 1.0),
            units.HW_EXP * r * Q_TINY ** (units.HW_EXP - 1.0),
        )

        if npipes < len(q):
            qm = q[npipes:]
            h0, r_p, w = self.pump_h0, self.pump_r, self.pump_w
            qc = np.maximum(qm, Q_TINY)
            gain_loss = r_p * qc**w - h0  # headloss equivalent of the pump gain
            grad = w * r_p * qc ** (w - 1.0)
            # Linear extension below Q_TINY keeps the Jacobian non-singular.
            h[npipes:] = np.where(qm >= Q_TINY, gain_loss, gain_loss + grad * (qm - qc))
            g[npipes:] = grad
        return h, g

    def _emitter(self, k_si: np.ndarray, pressure: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Emitter outflow and d(flow)/d(head), smoothed near zero pressure."""
        p0 = 1e-6  # m; linear segment below this keeps the derivative bounded
        flow = np.zeros_like(pressure)
        grad = np.zeros_like(pressure)
        active = k_si > 0.0
        if not active.any():
            return flow, grad
        p = pressure[active]
        k = k_si[active]
        f = np.where(p >= p0, k * np.sqrt(np.maximum(p, p0)), np.where(p > 0, k * p / math.sqrt(p0), 0.0))
        d = np.where(p >= p0, k / (2.0 * np.sqrt(np.maximum(p, p0))), np.where(p > 0, k / math.sqrt(p0), 0.0))
        flow[active] = f
        grad[active] = d
        return flow, grad

    # -- main solve --------------------------------------------------------

    def solve(
        self,
        demand_m3s: np.ndarray,
        emitter_k_si: np.ndarray | None = None,
        tank_level: np.ndarray | None = None,
        q_init: np.ndarray | None = None,
        time_s: float = 0.0,
    ) -> HydraulicSnapshot:
        index = self.index
        nj = self.nj
        if emitter_k_si is None:
            emitter_k_si = np.zeros(nj)
        if tank_level is None:
            tank_level = index.tank_level_init.copy()

        fixed_head = np.concatenate([index.reservoir_head, index.elevation[index.tank_offset :] + tank_level])
        head = np.empty(index.n_nodes)
        head[nj:] = fixed_head
        head[:nj] = fixed_head.mean()  # rough start; refined on first iteration

        q = self._q_default.copy() if q_init is None else q_init.copy()
        start, end = self.start, self.end
        sj, ej = self.start_is_junction, self.end_is_junction
        has_emitters = bool((emitter_k_si > 0).any())

        iterations = 0
        residual = math.inf
        emitter_out = np.zeros(nj)
        for iterations in range(1, MAX_ITERATIONS + 1):
            h, g = self._linearize(q)
            p = 1.0 / g
            y = h * p  # h(q)/g

            A = np.zeros((nj, nj))
            diag = np.zeros(nj)
            np.add.at(diag, start[sj], p[sj])
            np.add.at(diag, end[ej], p[ej])

            F = -demand_m3s.copy()
            qy = q - y
            np.add.at(F, start[sj], -qy[sj])
            np.add.at(F, end[ej], qy[ej])
            sf, ef = self._sf_mask, self._ef_mask
            np.add.at(F, end[sf], p[sf] * head[start[sf]])
            np.add.at(F, start[ef], p[ef] * head[end[ef]])

            if has_emitters:
                pressure = head[:nj] - index.elevation[:nj]
                e_flow, e_grad = self._emitter(emitter_k_si, pressure)
                diag += e_grad
                F += e_grad * head[:nj] - e_flow  # linearized E(H): F_i += gE*H0 - E0

            np.add.at(A, (self._off_rows, self._off_cols), -np.concatenate([p[self._both], p[self._both]]))
            A[np.arange(nj), np.arange(nj)] += diag

            head_new = np.linalg.solve(A, F)
            head[:nj] = head_new

            q_new = qy + p * (head[start] - head[end])
            if index.n_pipes < len(q):  # pumps cannot sustain reverse flow
                q_new[index.n_pipes :] = np.maximum(q_new[index.n_pipes :], 0.0)
            dq = np.abs(q_new - q).max() if len(q) else 0.0
            scale = max(np.abs(q_new).max() if len(q) else 0.0, Q_TINY)
            q = q_new

            if has_emitters:
                pressure = head[:nj] - index.elevation[:nj]
                emitter_out, _ = self._emitter(emitter_k_si, pressure)
            node_balance = -demand_m3s - emitter_out
            np.add.at(node_balance, start[sj], -q[sj])
            np.add.at(node_balance, end[ej], q[ej])
            residual = np.abs(node_balance).max() if nj else 0.0

            if dq / scale <= FLOW_TOLERANCE and residual <= NODE_TOLERANCE:
                break
        else:
            raise ConvergenceError(MAX_ITERATIONS, residual)

        warnings_list = []
        if index.n_pipes < len(q) and (q[index.n_pipes :] <= 0.0).any():
            warnings_list.append("pump driven to zero flow (operating point outside curve)")
        neg = np.flatnonzero((head[:nj] - index.elevation[:nj]) < -1e-9)
        for i in neg[:5]:
            warnings_list.append(f"negative pressure at junction {index.junction_ids[i]}")

        return HydraulicSnapshot(
            time_s=time_s,
            head=head,
            flow=q,
            demand=demand_m3s.copy(),
            emitter_flow=emitter_out,
            tank_level=tank_level.copy(),
            iterations=iterations,
            residual=residual,
            warnings=tuple(warnings_list),
        )

    def tank_net_inflow(self, snapshot: HydraulicSnapshot) -> np.ndarray:
        """Net inflow per tank (m^3/s) implied by the link flows."""
        return self.tank_net_inflow_from_flow(snapshot.flow)

    def tank_net_inflow_from_flow(self, flow: np.ndarray) -> np.ndarray:
        """Net inflow per tank (m^3/s) for a signed link-flow vector."""
        index = self.index
        net_in = np.zeros(index.n_tanks)
        off = index.tank_offset
        s_at_tank = index.link_start >= off
        e_at_tank = index.link_end >= off
        np.add.at(net_in, index.link_start[s_at_tank] - off, -flow[s_at_tank])
        np.add.at(net_in, index.link_end[e_at_tank] - off, flow[e_at_tank])
        return net_in


def advance_tank_levels(
    index: NetworkIndex, level: np.ndarray, net_inflow: np.ndarray, dt: float
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Forward-Euler tank level update with hard clamping at min/max."""
    new = level + net_inflow * dt / index.tank_area
    notes = []
    for i in range(index.n_tanks):
        if new[i] < index.tank_level_min[i] - 1e-12:
            notes.append(f"tank {index.tank_ids[i]} clamped at minimum level")
            new[i] = index.tank_level_min[i]
        elif new[i] > index.tank_level_max[i] + 1e-12:
            notes.append(f"tank {index.tank_ids[i]} clamped at maximum level")
            new[i] = index.tank_level_max[i]
    return new, tuple(notes)


# ---------------------------------------------------------------------------
# Dict-based public wrappers
# ---------------------------------------------------------------------------


def solve_snapshot(
    net: Network,
    hour: int = 0,
    demand_multiplier: float = 1.0,
    emitters: Mapping[str, float] | None = None,
    tank_levels: Mapping[str, float] | None = None,
) -> HydraulicSnapshot:
    """Solve one steady state using pattern demands for the given clock hour.

    ``emitters`` maps junction id -> coefficient in gpm/psi^0.5.
    """
    index = NetworkIndex(net)
    model = HydraulicModel(index)
    demand = index.demands_at_hour(hour, demand_multiplier)
    k_si = np.zeros(index.n_junctions)
    for nid, coeff in (emitters or {}).items():
        if nid not in index.node_index or index.node_index[nid] >= index.n_junctions:
            raise HydraulicError(f"emitter node {nid!r} is not a junction")
        k_si[index.node_index[nid]] = coeff * units.GPM_TO_M3S / math.sqrt(units.PSI_TO_M)
    levels = index.tank_level_init.copy()
    for tid, lvl in (tank_levels or {}).items():
        levels[index.tank_ids.index(tid)] = lvl
    return model.solve(demand, k_si, levels, time_s=hour * units.SECONDS_PER_HOUR)


def run_extended_period(
    net: Network,
    hours: int = 24,
    start_hour: int = 0,
    demand_multiplier: float = 1.0,
    emitters: Mapping[str, float] | None = None,
) -> list[TimeSlice]:
    """Hour-by-hour extended-period simulation with tank integration.

    Demands follow each junction's diurnal pattern; emitters (if any) stay
    open for the whole run.  Returns one :class:`TimeSlice` per hour.
    """
    index = NetworkIndex(net)
    model = HydraulicModel(index)
    k_si = np.zeros(index.n_junctions)
    for nid, coeff in (emitters or {}).items():
        k_si[index.node_index[nid]] = coeff * units.GPM_TO_M3S / math.sqrt(units.PSI_TO_M)

    slices: list[TimeSlice] = []
    level = index.tank_level_init.copy()
    q_warm = None
    for step in range(hours):
        hour = start_hour + step
        demand = index.demands_at_hour(hour, demand_multiplier)
        snap = model.solve(demand, k_si, level, q_init=q_warm, time_s=hour * units.SECONDS_PER_HOUR)
        q_warm = snap.flow
        slices.append(TimeSlice(t0=hour * units.SECONDS_PER_HOUR, dt=units.SECONDS_PER_HOUR, snapshot=snap))
        level, _ = advance_tank_levels(index, level, model.tank_net_inflow(snap), units.SECONDS_PER_HOUR)
    return slices
