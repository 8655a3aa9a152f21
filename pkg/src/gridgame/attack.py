"""Stealth attack construction against the estimated flow of a target line.

The attacker picks measurement perturbations z_a that move the estimated
flow while the induced residual change stays inside a per-channel budget,
so the threshold detector cannot tell the attacked snapshot from the clean
one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import flow_sensitivity_vector
from .grid import GridNetwork
from .lp import LpProblem, solve_lp

ZERO_Q = 1e-9


@dataclass(frozen=True)
class FlowSensitivity:
    """Per-measurement influence on one line's estimated flow.

    ``group_up`` holds indices whose increase raises the estimated flow
    (positive coefficients), ``group_down`` the flow-lowering ones; entries
    with |q| < 1e-9 belong to neither.
    """

    from_bus: int
    to_bus: int
    q: np.ndarray
    group_up: tuple
    group_down: tuple


def compute_sensitivity(m_padded, net: GridNetwork, from_bus, to_bus) -> FlowSensitivity:
    q = flow_sensitivity_vector(m_padded, net, from_bus, to_bus)
    up = tuple(int(k) for k in np.where(q > ZERO_Q)[0])
    down = tuple(int(k) for k in np.where(q < -ZERO_Q)[0])
    return FlowSensitivity(from_bus=from_bus, to_bus=to_bus, q=q,
                           group_up=up, group_down=down)


@dataclass(frozen=True)
class AttackVector:
    z_a: np.ndarray            # MW per measurement
    xi: np.ndarray             # stealth budget per measurement
    attacked: tuple            # indices allowed to carry nonzero injections
    objective: float           # achieved LP objective
    flow_change: float         # resulting estimated-flow change, MW


class AttackSynthesisError(RuntimeError):
    pass


def synthesize_attack(sens: FlowSensitivity, h, m_matrix, xi, secure,
                      attackable, sigmas=None, direction="increase",
                      z_max=50.0) -> AttackVector:
    """Solve the stealth-attack LP over the attackable measurement set.

    Maximizes the flow-aligned sum of injected values (raising group_up
    entries and lowering group_down ones for ``direction="increase"``,
    the reverse for ``"decrease"``) subject to the per-channel residual
    budget |((I - HM) z_a)_k| <= xi_k * sigma_k and |z_a| <= z_max.
    Measurements in ``secure`` or outside ``attackable`` stay untouched.
    """
    m = h.shape[0]
    xi = np.broadcast_to(np.asarray(xi, dtype=float), (m,)).copy()
    sig = np.ones(m) if sigmas is None else np.asarray(sigmas, dtype=float)
    secure = frozenset(secure)
    attacked = tuple(sorted(set(int(a) for a in attackable)))
    if secure & set(attacked):
        raise ValueError(f"attackable set overlaps secure measurements: "
                         f"{sorted(secure & set(attacked))}")
    if direction not in ("increase", "decrease"):
        raise ValueError(f"direction must be increase|decrease, got {direction!r}")

    if not attacked:
        return AttackVector(z_a=np.zeros(m), xi=xi, attacked=(),
                            objective=0.0, flow_change=0.0)

    sign = 1.0 if direction == "increase" else -1.0
    cost = np.zeros(len(attacked))
    for col, k in enumerate(attacked):
        if k in sens.group_up:
            cost[col] = sign
        elif k in sens.group_down:
            cost[col] = -sign

    # residual sensitivity restricted to attacked columns, noise-normalized
    residual_map = np.eye(m) - h @ m_matrix
    rn = residual_map[:, attacked] / sig[:, None]
    a_ub = np.vstack([rn, -rn])
    b_ub = np.concatenate([xi, xi])
    sol = solve_lp(LpProblem(
        "max", c=cost, a_ub=a_ub, b_ub=b_ub,
        lower=np.full(len(attacked), -float(z_max)),
        upper=np.full(len(attacked), float(z_max))))
    if not sol.is_optimal:
        raise AttackSynthesisError(
            f"attack LP ended {sol.status} for attacked set "
            f"{tuple(k + 1 for k in attacked)}")
    z_a = np.zeros(m)
    z_a[list(attacked)] = sol.x
    return AttackVector(z_a=z_a, xi=xi, attacked=attacked,
                        objective=float(sol.objective),
                        flow_change=flow_change(sens, z_a))


def flow_change(sens: FlowSensitivity, z_a) -> float:
    """Estimated-flow change on the target line; positive = flow increases."""
    return float(sens.q @ np.asarray(z_a, dtype=float))
