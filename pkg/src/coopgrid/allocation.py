"""Splitting the cooperative bill among users.

The split maximises the product of individual savings subject to nobody
paying more than stand-alone; with transferable cost that optimum is the
equal-savings point

    J_i = D_i - (sum(D) - J) / r

where D are the stand-alone costs, J the cooperative optimum and r the number
of users.  It exists exactly when cooperation helps at all (J <= sum(D)).

allocate_distributed reaches the same split without any central adder: every
user starts a consensus variable at its own D_i, the grid interface starts at
-J, and averaging consensus converges to (sum(D) - J) / (r + 1), from which
each node recovers its own share locally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centralized import PowerSchedule, schedule_cost
from .graph import run_consensus
from .scenario import ROLE_GRID, Scenario


class BargainingError(RuntimeError):
    """Cooperating is worth less than standing alone: no split helps everyone."""


@dataclass
class CostReport:
    agent_ids: tuple[int, ...]          # users in id order
    j_social: float
    selfish: np.ndarray                 # D_i
    allocated: np.ndarray               # J_i
    epsilon: float                      # per-user saving D_i - J_i
    method: str                         # 'centralized' | 'distributed'
    rounds: int = 0                     # consensus rounds when distributed
    consumption: np.ndarray | None = None
    netting_residual: float | None = None


def _check_bargaining(j_social: float, total_selfish: float) -> None:
    if total_selfish - j_social < -1e-9 * (1.0 + abs(j_social)):
        raise BargainingError(
            f"cooperative cost {j_social:.6f} exceeds the stand-alone total "
            f"{total_selfish:.6f}; there is no allocation everyone accepts")


def allocate_centralized(scenario: Scenario, j_social: float,
                         selfish_costs: np.ndarray,
                         schedule: PowerSchedule | None = None) -> CostReport:
    selfish_costs = np.asarray(selfish_costs, dtype=float)
    r = scenario.n_users
    if selfish_costs.size != r:
        raise ValueError(f"expected {r} stand-alone costs, got {selfish_costs.size}")
    _check_bargaining(j_social, float(selfish_costs.sum()))
    epsilon = (selfish_costs.sum() - j_social) / r
    report = CostReport(
        agent_ids=tuple(a.id for a in scenario.users),
        j_social=j_social,
        selfish=selfish_costs,
        allocated=selfish_costs - epsilon,
        epsilon=float(epsilon),
        method="centralized",
    )
    if schedule is not None:
        report.consumption, report.netting_residual = consumption_costs(scenario, schedule)
    return report


def allocate_distributed(scenario: Scenario, j_social: float,
                         selfish_costs: np.ndarray,
                         tol: float = 1e-6, max_rounds: int = 100_000,
                         schedule: PowerSchedule | None = None) -> CostReport:
    """Equal-savings split computed by averaging consensus on the scenario graph.

    Node values start at D_i (users) and -J (grid); their average is
    (sum(D) - J) / (r + 1) and each user reads its share off its own final
    estimate.  The per-node consensus target is tightened by r / (r + 1) so
    the recovered shares match the centralized split within tol.
    """
    selfish_costs = np.asarray(selfish_costs, dtype=float)
    r = scenario.n_users
    if selfish_costs.size != r:
        raise ValueError(f"expected {r} stand-alone costs, got {selfish_costs.size}")
    by_id = dict(zip((a.id for a in scenario.users), selfish_costs))
    grid_id = scenario.grid_agent.id
    initial = np.array([-j_social if i == grid_id else by_id[i]
                        for i in scenario.graph.node_ids])
    state = run_consensus(initial, scenario.graph,
                          tol=tol * r / (r + 1), max_iters=max_rounds)
    estimates = {i: state.values[k] for k, i in enumerate(scenario.graph.node_ids)}
    # the node average is conserved, so the mean estimate carries no consensus error
    epsilon = (r + 1) / r * float(state.values.mean())
    if epsilon < -1e-9 * (1.0 + abs(j_social)):
        raise BargainingError(
            f"consensus found negative savings ({epsilon:.6f} per user); "
            "cooperation does not pay here")
    allocated = np.array([by_id[a.id] - (r + 1) / r * estimates[a.id]
                          for a in scenario.users])
    report = CostReport(
        agent_ids=tuple(a.id for a in scenario.users),
        j_social=j_social,
        selfish=selfish_costs,
        allocated=allocated,
        epsilon=epsilon,
        method="distributed",
        rounds=state.iteration,
    )
    if schedule is not None:
        report.consumption, report.netting_residual = consumption_costs(scenario, schedule)
    return report


def consumption_costs(scenario: Scenario, schedule: PowerSchedule) -> tuple[np.ndarray, float]:
    """Bill each user for its own net draw at the tariff.

    A user's net draw is demand minus renewables minus storage dispatch;
    positive draw is billed at the buy price, negative at the sell price.
    Individual bills ignore that opposite draws cancel before touching the
    main grid, so their sum exceeds the cooperative cost by a nonnegative
    netting residual, which is returned alongside.
    """
    buy = np.array(scenario.tariff.buy)
    sell = np.array(scenario.tariff.sell)
    dt = scenario.dt_hours
    bills = []
    for a in scenario.users:
        g = np.array(a.demand_kw) - np.array(a.renewable_kw)
        if a.role != ROLE_GRID and a.id in schedule.desd_power_kw:
            g = g - schedule.desd_power_kw[a.id]
        bills.append(float(np.sum(dt * (buy * np.maximum(g, 0.0)
                                        - sell * np.maximum(-g, 0.0)))))
    bills = np.array(bills)
    residual = float(bills.sum() - schedule_cost(schedule, scenario.tariff))
    return bills, residual
