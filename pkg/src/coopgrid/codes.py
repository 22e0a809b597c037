"""Distributed day-ahead scheduling over the communication graph.

Every bus runs the same loop against nothing but its own data and its
neighbors' messages:

1. gradient step on its own decision variables, projected onto their boxes,
   priced by its current estimates of the shadow price and the system
   imbalance;
2. multiplier step for its own stored-energy box;
3. one consensus exchange that mixes the neighbors' estimates and feeds in
   the change of its own local imbalance (dynamic average tracking), plus an
   integral term that walks the price estimate until imbalance dies out.

The imbalance estimates track the system imbalance divided by the number of
buses; their sum over buses always equals the true total, so driving the
estimates to zero is the same as balancing the system.

Sign conventions: a bus's local imbalance is the power it asks from the rest
of the system (demand minus own supply); the grid interface contributes the
negative of its net injection.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .centralized import PowerSchedule, net_exchange, schedule_cost
from .scenario import ROLE_ACTIVE, ROLE_GRID, AgentSpec, Scenario


@dataclass
class CodesConfig:
    rho: float = 0.5            # quadratic penalty weight
    xi1_grid: float = 5e-3      # primal step, grid exchange block
    xi1_desd: float = 5e-3      # primal step, storage blocks
    xi2: float = 5e-2           # multiplier step for the energy box
    xi3: float = 0.1            # integral gain on the price estimate
    max_iters: int = 20000
    tol_balance_kw: float = 1e-3
    tol_step: float = 1e-6

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "CodesConfig":
        """Defaults overridden by the scenario's own solver settings, if any."""
        cfg = cls()
        for key, value in scenario.codes:
            if not hasattr(cfg, key):
                raise ValueError(f"unknown solver setting {key!r} in scenario")
            setattr(cfg, key, int(value) if key == "max_iters" else float(value))
        return cfg


@dataclass
class Message:
    """Everything a bus is allowed to tell a neighbor."""

    lam_hat: np.ndarray
    dp_hat: np.ndarray


@dataclass
class BusState:
    agent: AgentSpec
    lam_hat: np.ndarray                  # price estimate, one entry per step
    dp_hat: np.ndarray                   # imbalance-per-bus estimate
    dp_local: np.ndarray                 # own imbalance at the last update
    p_buy: np.ndarray | None = None      # grid bus only
    p_sell: np.ndarray | None = None
    p_desd: np.ndarray | None = None     # active bus only
    mu1: np.ndarray | None = None        # stored energy above emax
    mu2: np.ndarray | None = None        # stored energy below emin

    @property
    def role(self) -> str:
        return self.agent.role


def local_imbalance(bus: BusState, t: int | None = None):
    """The bus's own imbalance: what it asks from the rest of the system.

    Passive buses ask for their demand, active buses for demand net of
    renewables and dispatch, and the grid bus supplies its net injection.
    Returns the full series when t is None.
    """
    if bus.role == ROLE_GRID:
        series = -(bus.p_buy - bus.p_sell)
    elif bus.role == ROLE_ACTIVE:
        series = np.array(bus.agent.demand_kw) - np.array(bus.agent.renewable_kw) - bus.p_desd
    else:
        series = np.array(bus.agent.demand_kw)
    return series if t is None else float(series[t])


def _energy_slacks(bus: BusState, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Signed overshoot of the stored-energy box per step, in kWh.

    Positive means violated; negative is headroom.  Keeping the sign lets the
    multipliers relax again once the box stops binding, which kills the
    boundary chatter a clamped version produces.
    """
    drained = np.cumsum(bus.p_desd) * dt
    desd = bus.agent.desd
    over_full = desd.e0_kwh - drained - desd.emax_kwh
    over_empty = desd.emin_kwh - desd.e0_kwh + drained
    return over_full, over_empty


def primal_step(bus: BusState, scenario: Scenario, config: CodesConfig) -> float:
    """Projected gradient step on the bus's own variables; returns the largest move."""
    price = bus.lam_hat + config.rho * bus.dp_hat
    dt = scenario.dt_hours
    if bus.role == ROLE_GRID:
        buy = np.array(scenario.tariff.buy) * dt
        sell = np.array(scenario.tariff.sell) * dt
        new_buy = np.clip(bus.p_buy - config.xi1_grid * (buy - price),
                          0.0, scenario.p_grid_max_kw)
        new_sell = np.clip(bus.p_sell - config.xi1_grid * (-sell + price),
                           0.0, scenario.p_grid_max_kw)
        moved = max(np.abs(new_buy - bus.p_buy).max(),
                    np.abs(new_sell - bus.p_sell).max())
        bus.p_buy, bus.p_sell = new_buy, new_sell
        return float(moved)
    if bus.role == ROLE_ACTIVE:
        over_full, over_empty = _energy_slacks(bus, dt)
        # each step's dispatch shifts every later stored-energy level, so the
        # box pressure accumulates from the end of the horizon backwards
        pressure = (-np.maximum(bus.mu1 + config.rho * over_full, 0.0)
                    + np.maximum(bus.mu2 + config.rho * over_empty, 0.0))
        tail = np.cumsum(pressure[::-1])[::-1]
        grad = -price + dt * tail
        desd = bus.agent.desd
        new_p = np.clip(bus.p_desd - config.xi1_desd * grad,
                        -desd.p_charge_max_kw, desd.p_discharge_max_kw)
        moved = float(np.abs(new_p - bus.p_desd).max())
        bus.p_desd = new_p
        return moved
    return 0.0


def dual_step(bus: BusState, scenario: Scenario, config: CodesConfig) -> None:
    """Walk the energy-box multipliers along the fresh signed overshoot."""
    if bus.role != ROLE_ACTIVE:
        return
    over_full, over_empty = _energy_slacks(bus, scenario.dt_hours)
    bus.mu1 = np.maximum(bus.mu1 + config.xi2 * over_full, 0.0)
    bus.mu2 = np.maximum(bus.mu2 + config.xi2 * over_empty, 0.0)


def consensus_update(buses: list[BusState], scenario: Scenario, config: CodesConfig) -> None:
    """One synchronous exchange of estimates between neighbors.

    All messages are snapshotted first, so the result does not depend on the
    order the buses are visited in.
    """
    graph = scenario.graph
    messages = {bus.agent.id: Message(bus.lam_hat, bus.dp_hat) for bus in buses}
    updates = []
    for bus in buses:
        own = messages[bus.agent.id]
        i = graph.index_of(bus.agent.id)
        lam = own.lam_hat.copy()
        dp = own.dp_hat.copy()
        for nid in graph.neighbors(bus.agent.id):
            w = graph.weights[i, graph.index_of(nid)]
            lam += w * (messages[nid].lam_hat - own.lam_hat)
            dp += w * (messages[nid].dp_hat - own.dp_hat)
        lam += config.xi3 * own.dp_hat
        fresh = local_imbalance(bus)
        dp += fresh - bus.dp_local
        updates.append((lam, dp, fresh))
    for bus, (lam, dp, fresh) in zip(buses, updates):
        bus.lam_hat, bus.dp_hat, bus.dp_local = lam, dp, fresh


@dataclass
class ConvergenceTrace:
    j_est: list[float] = field(default_factory=list)
    max_imbalance_kw: list[float] = field(default_factory=list)
    consensus_disagreement: list[float] = field(default_factory=list)
    primal_step_norm: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.j_est)

    def rows(self):
        for k in range(len(self)):
            yield (k, self.j_est[k], self.max_imbalance_kw[k],
                   self.consensus_disagreement[k], self.primal_step_norm[k])


@dataclass
class CodesResult:
    schedule: PowerSchedule
    j: float
    iterations: int
    converged: bool
    trace: ConvergenceTrace
    wall_time_s: float


def make_buses(scenario: Scenario) -> list[BusState]:
    """Initial bus states: zero primals, zero multipliers, honest estimates.

    Imbalance estimates start at each bus's own imbalance, which anchors
    their sum to the true total for the rest of the run.
    """
    t = scenario.horizon
    buses = []
    for node_id in scenario.graph.node_ids:
        agent = scenario.agent(node_id)
        bus = BusState(agent=agent, lam_hat=np.zeros(t),
                       dp_hat=np.zeros(t), dp_local=np.zeros(t))
        if agent.role == ROLE_GRID:
            bus.p_buy = np.zeros(t)
            bus.p_sell = np.zeros(t)
        elif agent.role == ROLE_ACTIVE:
            bus.p_desd = np.zeros(t)
            bus.mu1 = np.zeros(t)
            bus.mu2 = np.zeros(t)
        bus.dp_local = local_imbalance(bus)
        bus.dp_hat = bus.dp_local.copy()
        buses.append(bus)
    return buses


def run_codes(scenario: Scenario, config: CodesConfig | None = None) -> CodesResult:
    """Iterate the distributed scheme until balance and primal rest, or give up.

    Never raises on non-convergence: the partial schedule and the full trace
    come back with converged=False so the caller can diagnose.
    """
    if config is None:
        config = CodesConfig.from_scenario(scenario)
    started = time.perf_counter()
    buses = make_buses(scenario)
    grid_bus = next(b for b in buses if b.role == ROLE_GRID)
    buy_price = np.array(scenario.tariff.buy) * scenario.dt_hours
    sell_price = np.array(scenario.tariff.sell) * scenario.dt_hours
    trace = ConvergenceTrace()
    converged = False
    iterations = 0
    for k in range(config.max_iters):
        step_norm = max(primal_step(bus, scenario, config) for bus in buses)
        for bus in buses:
            dual_step(bus, scenario, config)
        consensus_update(buses, scenario, config)
        iterations = k + 1

        total = np.zeros(scenario.horizon)
        for bus in buses:
            total += bus.dp_local
        max_imbalance = float(np.abs(total).max())
        estimates = np.stack([bus.dp_hat for bus in buses])
        disagreement = float((estimates.max(axis=0) - estimates.min(axis=0)).max())
        j_est = float(buy_price @ grid_bus.p_buy - sell_price @ grid_bus.p_sell)
        trace.j_est.append(j_est)
        trace.max_imbalance_kw.append(max_imbalance)
        trace.consensus_disagreement.append(disagreement)
        trace.primal_step_norm.append(float(step_norm))
        if max_imbalance < config.tol_balance_kw and step_norm < config.tol_step:
            converged = True
            break

    buy, sell = net_exchange(grid_bus.p_buy, grid_bus.p_sell)
    schedule = PowerSchedule(
        grid_buy_kw=buy, grid_sell_kw=sell,
        desd_power_kw={b.agent.id: b.p_desd.copy() for b in buses if b.role == ROLE_ACTIVE},
        dt_hours=scenario.dt_hours,
    )
    return CodesResult(
        schedule=schedule,
        j=schedule_cost(schedule, scenario.tariff),
        iterations=iterations,
        converged=converged,
        trace=trace,
        wall_time_s=time.perf_counter() - started,
    )
