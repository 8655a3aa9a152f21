"""Day-ahead economic dispatch, locational prices, and ex-post repricing.

Price decomposition convention: LMP_i = lambda + sum_k GSF[k, i] * mu_k,
with mu_k the signed congestion multiplier of line k (negative when the
forward direction binds, so prices drop upstream of the constraint). The
loss component is out of scope and identically zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridNetwork, GsfMatrix
from .lp import LpProblem, solve_lp

CL_FLOW_TOL = 1e-6      # binding-flow tolerance, day-ahead
SHADOW_TOL = 1e-9


class DispatchError(RuntimeError):
    """The dispatch LP has no feasible solution."""


@dataclass(frozen=True)
class MarketOutcome:
    kind: str                    # "day_ahead" | "real_time"
    dispatch: np.ndarray         # G_i (day-ahead) or delta-G_i (real-time)
    load_delta: np.ndarray       # delta-D per load (real-time only)
    lam: float                   # energy price
    mu: np.ndarray               # signed congestion multiplier per line
    lmp: np.ndarray              # $/MWh per bus
    lmp_congestion: np.ndarray   # congestion component per bus
    congested: tuple             # (from, to) keys of binding lines
    flows: np.ndarray            # MW per line
    objective: float

    @property
    def lmp_energy(self):
        return self.lam

    def lmp_at(self, net: GridNetwork, bus):
        return float(self.lmp[net.bus_index(bus)])


def _prices(net, gsf, lam, mu):
    cong = gsf.matrix.T @ mu
    return lam + cong, cong


def solve_day_ahead(net: GridNetwork, gsf: GsfMatrix) -> MarketOutcome:
    """Minimum-cost dispatch under the shift-factor line limits.

    lambda comes from the balance dual; each line's signed mu from its
    directional limit duals.  Congested lines bind within 1e-6 MW and carry
    a positive shadow price.
    """
    gens = net.generators
    if not gens:
        raise DispatchError("network has no generators")
    ng, nl = len(gens), len(net.lines)
    cost = np.array([g.cost for g in gens])
    d = net.demand_vector()
    gsf_d = gsf.matrix @ d
    # per-generator columns of the line constraints
    gcols = np.array([[gsf.matrix[k, net.bus_index(g.bus)] for g in gens]
                      for k in range(nl)]).reshape(nl, ng)
    limits = np.array([ln.limit for ln in net.lines])
    a_ub = np.vstack([gcols, -gcols]) if nl else None
    b_ub = np.concatenate([limits + gsf_d, limits - gsf_d]) if nl else None
    sol = solve_lp(LpProblem(
        "min", c=cost,
        a_ub=a_ub, b_ub=b_ub,
        a_eq=np.ones((1, ng)), b_eq=np.array([net.total_demand()]),
        lower=np.array([g.g_min for g in gens]),
        upper=np.array([g.g_max for g in gens])))
    if not sol.is_optimal:
        raise DispatchError(f"day-ahead dispatch is {sol.status}")
    lam = float(sol.dual_eq[0])
    fwd, rev = sol.dual_ub[:nl], sol.dual_ub[nl:]
    mu = rev - fwd
    inj = -d
    for gi, g in enumerate(gens):
        inj[net.bus_index(g.bus)] += sol.x[gi]
    flows = gsf.matrix @ inj
    congested = tuple(net.lines[k].key() for k in range(nl)
                      if limits[k] - abs(flows[k]) <= CL_FLOW_TOL
                      and fwd[k] + rev[k] > SHADOW_TOL)
    lmp, cong = _prices(net, gsf, lam, mu)
    return MarketOutcome(kind="day_ahead", dispatch=sol.x,
                         load_delta=np.zeros(len(net.loads)), lam=lam, mu=mu,
                         lmp=lmp, lmp_congestion=cong, congested=congested,
                         flows=flows, objective=float(sol.objective))


def congested_from_estimates(net: GridNetwork, estimated_flows, tol_cl=0.5):
    """Lines the operator believes are at their limit, from estimated flows."""
    out = []
    for k, ln in enumerate(net.lines):
        if abs(estimated_flows[k]) >= ln.limit - tol_cl:
            out.append((k, 1.0 if estimated_flows[k] >= 0 else -1.0))
    return out


def solve_real_time(net: GridNetwork, gsf: GsfMatrix, estimated_flows,
                    day_ahead: MarketOutcome, tol_cl=0.5) -> MarketOutcome:
    """Ex-post incremental dispatch priced off the estimated system state.

    Variables are generation increments of qualified units (and increments
    of dispatchable loads); lines the estimates show congested may not load
    any further.  Real-time prices follow from the duals exactly as in the
    day-ahead decomposition.
    """
    gens, loads = net.generators, net.loads
    ng, nd, nl = len(gens), len(loads), len(net.lines)
    cl = congested_from_estimates(net, estimated_flows, tol_cl)

    nvar = ng + nd
    cost = np.concatenate([[g.cost_rt for g in gens], np.zeros(nd)])
    lo = np.concatenate([
        [g.delta_min if g.qualified else 0.0 for g in gens],
        [ld.delta_min if ld.dispatchable else 0.0 for ld in loads]])
    hi = np.concatenate([
        [g.delta_max if g.qualified else 0.0 for g in gens],
        [ld.delta_max if ld.dispatchable else 0.0 for ld in loads]])
    balance = np.concatenate([np.ones(ng), -np.ones(nd)])

    rows, senses = [], []
    for k, direction in cl:
        row = np.zeros(nvar)
        for gi, g in enumerate(gens):
            row[gi] = direction * gsf.matrix[k, net.bus_index(g.bus)]
        for li, ld in enumerate(loads):
            row[ng + li] = -direction * gsf.matrix[k, net.bus_index(ld.bus)]
        rows.append(row)
        senses.append("<=")
    a_ub = np.array(rows) if rows else None
    b_ub = np.zeros(len(rows)) if rows else None
    sol = solve_lp(LpProblem(
        "min", c=cost, a_ub=a_ub, b_ub=b_ub,
        ub_senses=tuple(senses),
        a_eq=balance.reshape(1, -1), b_eq=np.array([0.0]),
        lower=lo, upper=hi))
    if not sol.is_optimal:
        raise DispatchError(f"real-time dispatch is {sol.status}")
    lam = float(sol.dual_eq[0])
    mu = np.zeros(nl)
    for ci, (k, direction) in enumerate(cl):
        mu[k] += -direction * sol.dual_ub[ci]
    inj_delta = np.zeros(net.n_buses)
    for gi, g in enumerate(gens):
        inj_delta[net.bus_index(g.bus)] += sol.x[gi]
    for li, ld in enumerate(loads):
        inj_delta[net.bus_index(ld.bus)] -= sol.x[ng + li]
    flows = np.asarray(estimated_flows, dtype=float) + gsf.matrix @ inj_delta
    lmp, cong = _prices(net, gsf, lam, mu)
    return MarketOutcome(kind="real_time", dispatch=sol.x[:ng],
                         load_delta=sol.x[ng:], lam=lam, mu=mu, lmp=lmp,
                         lmp_congestion=cong,
                         congested=tuple(net.lines[k].key() for k, _ in cl),
                         flows=flows, objective=float(sol.objective))


def congestion_price(outcome: MarketOutcome, net: GridNetwork, from_bus, to_bus):
    """Price of moving power from ``from_bus`` to ``to_bus``: LMP_to - LMP_from."""
    return outcome.lmp_at(net, to_bus) - outcome.lmp_at(net, from_bus)


def virtual_trade_profit(day_ahead: MarketOutcome, real_time: MarketOutcome,
                         net: GridNetwork, buy_bus, sell_bus, quantity):
    """$/h profit of a day-ahead virtual trade settled at real-time prices."""
    da = congestion_price(day_ahead, net, buy_bus, sell_bus)
    rt = congestion_price(real_time, net, buy_bus, sell_bus)
    return (da - rt) * float(quantity)
