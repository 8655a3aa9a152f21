"""Attacker-defender measurement game: payoff matrix, saddle points, and the
mixed-strategy solution via the standard LP reduction.

Rows are defender strategies (minimizing), columns attacker strategies
(maximizing); entries are the magnitude of the estimated-flow manipulation
the attacker achieves after the defended channels are taken away.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .attack import AttackSynthesisError, synthesize_attack
from .lp import LpProblem, solve_lp

VALUE_TOL = 1e-6
SADDLE_TOL = 1e-12


@dataclass(frozen=True)
class GameSpec:
    """Strategy spaces: all N_a-subsets (attacker) and N_d-subsets (defender)
    of the insecure measurement set, enumerated lexicographically."""

    insecure: tuple            # 0-based measurement indices, ascending
    n_attack: int
    n_defend: int

    def attacker_strategies(self):
        return tuple(combinations(sorted(self.insecure), self.n_attack))

    def defender_strategies(self):
        return tuple(combinations(sorted(self.insecure), self.n_defend))

    @staticmethod
    def label(subset):
        return "".join(f"z{k + 1}" for k in subset)


@dataclass(frozen=True)
class PayoffMatrix:
    a: np.ndarray              # (defender strategies) x (attacker strategies)
    row_labels: tuple
    col_labels: tuple
    row_sets: tuple
    col_sets: tuple


@dataclass(frozen=True)
class MixedSolution:
    defender: np.ndarray       # y over rows
    attacker: np.ndarray       # w over columns
    value: float
    defender_value: float      # defender-LP game value (cross-check)
    attacker_value: float
    pure_saddle: tuple         # (row, col) or None
    min_row_max: float
    max_col_min: float


def build_payoff_matrix(spec: GameSpec, sens, h, m_matrix, xi, secure,
                        sigmas=None, direction="increase", z_max=50.0) -> PayoffMatrix:
    """Entry (s, t): attacker compromises t \\ s (defended channels become
    secure for that solve); value is |flow change| of the synthesized attack."""
    rows = spec.defender_strategies()
    cols = spec.attacker_strategies()
    a = np.zeros((len(rows), len(cols)))
    base_secure = frozenset(secure)
    for si, s in enumerate(rows):
        for ti, t in enumerate(cols):
            effective = tuple(k for k in t if k not in s)
            try:
                att = synthesize_attack(
                    sens, h, m_matrix, xi,
                    secure=base_secure | set(s),
                    attackable=effective, sigmas=sigmas,
                    direction=direction, z_max=z_max)
            except AttackSynthesisError as exc:
                raise AttackSynthesisError(
                    f"payoff cell defend={spec.label(s)} "
                    f"attack={spec.label(t)}: {exc}") from exc
            a[si, ti] = abs(att.flow_change)
    return PayoffMatrix(a=a,
                        row_labels=tuple(spec.label(s) for s in rows),
                        col_labels=tuple(spec.label(t) for t in cols),
                        row_sets=rows, col_sets=cols)


def find_pure_saddle(a):
    """Pure saddle (row, col) with a[r, j] <= a[r, c] <= a[i, c] for all i, j,
    or None.  Equivalently: min of row maxima equals max of column minima."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("empty payoff matrix")
    row_max = a.max(axis=1)
    col_min = a.min(axis=0)
    if abs(row_max.min() - col_min.max()) > SADDLE_TOL:
        return None
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] >= row_max[i] - SADDLE_TOL and a[i, j] <= col_min[j] + SADDLE_TOL:
                return (i, j)
    return None


def solve_mixed(a) -> MixedSolution:
    """Mixed saddle point by the reciprocal-value LP reduction.

    Entries are shifted positive first (value shifts back); the defender's
    and attacker's LPs are both solved and must agree on the game value.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("empty payoff matrix")
    m, n = a.shape
    shift = 0.0
    if a.min() <= 0:
        shift = 1.0 - float(a.min())
    b = a + shift

    # defender: max 1'y~  s.t.  B' y~ <= 1, y~ >= 0; value = 1 / sum(y~)
    dsol = solve_lp(LpProblem("max", c=np.ones(m), a_ub=b.T, b_ub=np.ones(n)))
    # attacker: min 1'w~  s.t.  B w~ >= 1, w~ >= 0
    asol = solve_lp(LpProblem("min", c=np.ones(n), a_ub=b, b_ub=np.ones(m),
                              ub_senses=(">=",) * m))
    if not (dsol.is_optimal and asol.is_optimal):
        raise RuntimeError(f"game LPs ended {dsol.status}/{asol.status}")
    v_def = 1.0 / float(np.sum(dsol.x))
    v_att = 1.0 / float(np.sum(asol.x))
    if abs(v_def - v_att) > VALUE_TOL * (1.0 + abs(v_def)):
        raise RuntimeError(
            f"defender/attacker game values disagree: {v_def} vs {v_att}")
    y = dsol.x * v_def
    w = asol.x * v_att
    row_max = a.max(axis=1)
    col_min = a.min(axis=0)
    return MixedSolution(defender=y, attacker=w,
                         value=v_def - shift,
                         defender_value=v_def - shift,
                         attacker_value=v_att - shift,
                         pure_saddle=find_pure_saddle(a),
                         min_row_max=float(row_max.min()),
                         max_col_min=float(col_min.max()))


def strategy_marginals(spec: GameSpec, solution: MixedSolution):
    """Per-measurement attack/defend probabilities under the mixed strategies."""
    attack = {}
    defend = {}
    for k in sorted(spec.insecure):
        lbl = f"z{k + 1}"
        attack[lbl] = float(sum(
            w for w, t in zip(solution.attacker, spec.attacker_strategies())
            if k in t))
        defend[lbl] = float(sum(
            y for y, s in zip(solution.defender, spec.defender_strategies())
            if k in s))
    return attack, defend
