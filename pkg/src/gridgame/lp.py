"""Dense two-phase simplex solver with primal and dual solutions.

Sized for the small, well-scaled problems this package produces (economic
dispatch, stealth-attack synthesis, matrix-game reductions): a few dozen
variables and rows. Pivoting rules are fixed, so identical inputs yield
bitwise-identical solutions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-10
BLAND_AFTER = 200       # steepest-coefficient iterations before Bland's rule
MAX_ITER = 5000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """min/max c.x subject to a_ub x (<=|>=) b_ub, a_eq x = b_eq, lo <= x <= up.

    ``ub_senses`` tags each inequality row with "<=" or ">=".  Bounds may be
    -inf/+inf; defaults are x >= 0.  Arrays are dense.
    """

    sense: str
    c: np.ndarray
    a_ub: np.ndarray = None
    b_ub: np.ndarray = None
    ub_senses: tuple = ()
    a_eq: np.ndarray = None
    b_eq: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def normalized(self):
        c = np.asarray(self.c, dtype=float)
        n = c.size
        a_ub = np.zeros((0, n)) if self.a_ub is None else np.atleast_2d(np.asarray(self.a_ub, float))
        b_ub = np.zeros(0) if self.b_ub is None else np.atleast_1d(np.asarray(self.b_ub, float))
        a_eq = np.zeros((0, n)) if self.a_eq is None else np.atleast_2d(np.asarray(self.a_eq, float))
        b_eq = np.zeros(0) if self.b_eq is None else np.atleast_1d(np.asarray(self.b_eq, float))
        senses = tuple(self.ub_senses) if self.ub_senses else ("<=",) * a_ub.shape[0]
        lo = np.zeros(n) if self.lower is None else np.asarray(self.lower, float)
        up = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for name, mat in (("a_ub", a_ub), ("a_eq", a_eq)):
            if mat.shape[1] != n:
                raise ValueError(f"{name} has {mat.shape[1]} columns, expected {n}")
        if a_ub.shape[0] != b_ub.size or len(senses) != a_ub.shape[0]:
            raise ValueError("inequality rows, rhs and senses disagree")
        if a_eq.shape[0] != b_eq.size:
            raise ValueError("equality rows and rhs disagree")
        if lo.size != n or up.size != n:
            raise ValueError("bound vectors must match the variable count")
        if not (np.all(np.isfinite(b_ub)) and np.all(np.isfinite(b_eq))):
            raise ValueError("constraint right-hand sides must be finite")
        if any(s not in ("<=", ">=") for s in senses):
            raise ValueError("inequality senses must be '<=' or '>='")
        return c, a_ub, b_ub, senses, a_eq, b_eq, lo, up


@dataclass
class LpSolution:
    """Result of ``solve_lp``.

    Dual conventions: inequality duals are the nonnegative multipliers
    (objective improvement per unit of constraint relaxation, whichever the
    sense); equality duals are d(optimum)/d(rhs) in the problem's own sense.
    """

    status: str
    x: np.ndarray = None
    objective: float = None
    dual_ub: np.ndarray = None
    dual_eq: np.ndarray = None
    reduced_costs: np.ndarray = field(default=None, repr=False)

    @property
    def is_optimal(self):
        return self.status == OPTIMAL


def _simplex_core(T, basis, costs, allow_enter):
    """Primal simplex on tableau T (m x (cols+1), rhs in the last column).

    Entering: most negative reduced cost with smallest-index tie-breaking,
    switching to Bland's rule after BLAND_AFTER iterations.  Leaving:
    minimum ratio, ties broken by smallest basic-variable index.
    """
    m = T.shape[0]
    ncols = T.shape[1] - 1
    if m == 0:
        if np.any(allow_enter & (costs[:ncols] < -PIVOT_TOL)):
            return UNBOUNDED
        return OPTIMAL
    for it in range(MAX_ITER):
        cb = costs[basis]
        r = costs[:ncols] - cb @ T[:, :ncols]
        cand = np.where(allow_enter & (r < -PIVOT_TOL))[0]
        if cand.size == 0:
            return OPTIMAL
        j = cand[np.argmin(r[cand])] if it < BLAND_AFTER else cand[0]
        col = T[:, j]
        pos = col > PIVOT_TOL
        if not np.any(pos):
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = T[pos, -1] / col[pos]
        rmin = ratios.min()
        rows = np.where(ratios <= rmin + PIVOT_TOL)[0]
        i = rows[np.argmin(basis[rows])]
        T[i, :] /= T[i, j]
        for k in range(m):
            if k != i and abs(T[k, j]) > PIVOT_TOL:
                T[k, :] -= T[k, j] * T[i, :]
        basis[i] = j
    raise RuntimeError("simplex iteration limit exceeded")


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve an LP with the two-phase simplex method.

    Infeasible/unbounded results come back as statuses, not exceptions;
    malformed input (dimension mismatch, non-finite rhs) raises ValueError.
    """
    c0, a_ub, b_ub, senses, a_eq, b_eq, lo, up = problem.normalized()
    n = c0.size
    maximize = problem.sense == "max"
    c = -c0 if maximize else c0.copy()

    # substitutions to nonnegative variables:
    #   ("shift", p, l): x = l + x'_p      ("neg", p, u): x = u - x'_p
    #   ("split", p, q): x = x'_p - x'_q
    var_map = []
    col_cost = []
    extra_rows = []            # finite upper bounds: x'_p <= u - l
    obj_const = 0.0

    def new_col(coef):
        col_cost.append(coef)
        return len(col_cost) - 1

    for jx in range(n):
        l, u = lo[jx], up[jx]
        if l == -np.inf and u == np.inf:
            var_map.append(("split", new_col(c[jx]), new_col(-c[jx])))
        elif l == -np.inf:
            var_map.append(("neg", new_col(-c[jx]), u))
            obj_const += c[jx] * u
        else:
            p = new_col(c[jx])
            var_map.append(("shift", p, l))
            obj_const += c[jx] * l
            if u != np.inf:
                extra_rows.append((p, u - l))
    ncol = len(col_cost)

    def expand(row):
        out = np.zeros(ncol)
        for jx in range(n):
            kind = var_map[jx]
            if kind[0] == "split":
                out[kind[1]] = row[jx]
                out[kind[2]] = -row[jx]
            elif kind[0] == "neg":
                out[kind[1]] = -row[jx]
            else:
                out[kind[1]] = row[jx]
        return out

    def row_offset(row):
        off = 0.0
        for jx in range(n):
            kind = var_map[jx]
            if kind[0] in ("neg", "shift"):
                off += row[jx] * kind[2]
        return off

    rows, rhs, row_tags = [], [], []
    for i in range(a_ub.shape[0]):
        r, b = expand(a_ub[i]), b_ub[i] - row_offset(a_ub[i])
        if senses[i] == ">=":
            r, b = -r, -b
        rows.append(r)
        rhs.append(b)
        row_tags.append(("ub", i, senses[i]))
    for i in range(a_eq.shape[0]):
        rows.append(expand(a_eq[i]))
        rhs.append(b_eq[i] - row_offset(a_eq[i]))
        row_tags.append(("eq", i, "="))
    for p, ub_val in extra_rows:
        r = np.zeros(ncol)
        r[p] = 1.0
        rows.append(r)
        rhs.append(ub_val)
        row_tags.append(("bound", -1, "<="))

    m = len(rows)
    A = np.array(rows) if m else np.zeros((0, ncol))
    b = np.array(rhs, dtype=float)

    slack_cols = [i for i, t in enumerate(row_tags) if t[0] != "eq"]
    S = np.zeros((m, len(slack_cols)))
    for si, i in enumerate(slack_cols):
        S[i, si] = 1.0
    full = np.hstack([A, S]) if slack_cols else A

    row_sign = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            full[i] *= -1.0
            b[i] *= -1.0
            row_sign[i] = -1.0

    art0 = full.shape[1]
    tableau = np.hstack([full, np.eye(m), b.reshape(-1, 1)])
    total = art0 + m
    basis = np.arange(art0, total)

    costs1 = np.zeros(total)
    costs1[art0:] = 1.0
    _simplex_core(tableau, basis, costs1, np.ones(total, dtype=bool))
    if costs1[basis] @ tableau[:, -1] > FEAS_TOL:
        return LpSolution(status=INFEASIBLE)

    # pivot still-basic artificials out where the row has a real column
    for i in range(m):
        if basis[i] >= art0:
            row = tableau[i, :art0]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > PIVOT_TOL:
                tableau[i, :] /= tableau[i, j]
                for k in range(m):
                    if k != i and abs(tableau[k, j]) > PIVOT_TOL:
                        tableau[k, :] -= tableau[k, j] * tableau[i, :]
                basis[i] = j

    costs2 = np.zeros(total)
    costs2[:ncol] = col_cost
    allow2 = np.ones(total, dtype=bool)
    allow2[art0:] = False
    status = _simplex_core(tableau, basis, costs2, allow2)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED)

    xstd = np.zeros(total)
    xstd[basis] = tableau[:, -1]
    x = np.zeros(n)
    for jx in range(n):
        kind = var_map[jx]
        if kind[0] == "split":
            x[jx] = xstd[kind[1]] - xstd[kind[2]]
        elif kind[0] == "neg":
            x[jx] = kind[2] - xstd[kind[1]]
        else:
            x[jx] = kind[2] + xstd[kind[1]]

    obj_min = costs2[basis] @ tableau[:, -1] + obj_const
    objective = -obj_min if maximize else obj_min

    # duals of the internal minimization, read off the artificial columns
    # (y_i = cB . B^-1 e_i), undoing the rhs-sign normalization
    cb = costs2[basis]
    y = (cb @ tableau[:, art0:art0 + m]) * row_sign
    dual_ub = np.zeros(a_ub.shape[0])
    dual_eq = np.zeros(a_eq.shape[0])
    for i, (kind, idx, sense) in enumerate(row_tags):
        if kind == "ub":
            # ">=" rows were negated into "<=" form, so -y is the KKT
            # multiplier for both senses
            mult = -y[i]
            dual_ub[idx] = 0.0 if abs(mult) <= PIVOT_TOL else mult
        elif kind == "eq":
            dual_eq[idx] = 0.0 if abs(y[i]) <= PIVOT_TOL else y[i]
    if maximize:
        dual_eq = -dual_eq
    red = costs2[:ncol] - cb @ tableau[:, :ncol]
    return LpSolution(status=OPTIMAL, x=x, objective=float(objective),
                      dual_ub=dual_ub, dual_eq=dual_eq, reduced_costs=red)
