"""Dense linear programming with a two-phase simplex method.

Problems are stated as

    min  f @ x
    s.t. a_ub @ x <= b_ub
         a_eq @ x == b_eq
         lower <= x <= upper

All matrices are dense numpy arrays; sizes here are small (a few hundred
variables), so tableau simplex is fast enough and has no dependencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-10   # entries smaller than this are treated as zero pivots
FEAS_TOL = 1e-8     # feasibility tolerance on row-scaled residuals


class LpError(Exception):
    """Base class for solver faults (not a status: statuses are returned)."""


class LpCycleError(LpError):
    """Raised when the pivot-count guard trips; indicates an internal fault."""


@dataclass
class LinearProgram:
    """Container for one LP instance.

    Missing constraint blocks may be passed as None.  Bounds default to
    [0, +inf) per variable, matching the usual standard-form convention.
    """

    f: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.f = np.atleast_1d(np.asarray(self.f, dtype=float))
        n = self.f.size
        if self.a_ub is None:
            self.a_ub = np.zeros((0, n))
            self.b_ub = np.zeros(0)
        else:
            self.a_ub = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
            self.b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        if self.a_eq is None:
            self.a_eq = np.zeros((0, n))
            self.b_eq = np.zeros(0)
        else:
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
            self.b_eq = np.atleast_1d(np.asarray(self.b_eq, dtype=float))
        self.lower = (np.zeros(n) if self.lower is None
                      else np.atleast_1d(np.asarray(self.lower, dtype=float)))
        self.upper = (np.full(n, np.inf) if self.upper is None
                      else np.atleast_1d(np.asarray(self.upper, dtype=float)))
        if self.a_ub.shape != (self.b_ub.size, n):
            raise ValueError(f"a_ub has shape {self.a_ub.shape}, expected ({self.b_ub.size}, {n})")
        if self.a_eq.shape != (self.b_eq.size, n):
            raise ValueError(f"a_eq has shape {self.a_eq.shape}, expected ({self.b_eq.size}, {n})")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bound vectors must have one entry per variable")

    @property
    def n_vars(self) -> int:
        return self.f.size


@dataclass
class LpSolution:
    status: str                 # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray | None
    objective_value: float | None
    iterations: int = 0


@dataclass
class ConstraintViolation:
    kind: str      # 'ub' | 'eq' | 'lower' | 'upper'
    index: int
    residual: float

    def __str__(self):
        return f"{self.kind}[{self.index}]: residual {self.residual:.3e}"


def check_feasible(lp: LinearProgram, x: np.ndarray, tol: float = FEAS_TOL) -> list[ConstraintViolation]:
    """Return all constraint violations of x beyond tol (empty list = feasible).

    Residuals are scaled per row by max(1, max|coefficient|) so the tolerance
    means the same thing across badly scaled rows.
    """
    x = np.asarray(x, dtype=float)
    out = []
    if lp.a_ub.shape[0]:
        scale = np.maximum(1.0, np.abs(lp.a_ub).max(axis=1))
        res = (lp.a_ub @ x - lp.b_ub) / scale
        for i in np.flatnonzero(res > tol):
            out.append(ConstraintViolation("ub", int(i), float(res[i])))
    if lp.a_eq.shape[0]:
        scale = np.maximum(1.0, np.abs(lp.a_eq).max(axis=1))
        res = np.abs(lp.a_eq @ x - lp.b_eq) / scale
        for i in np.flatnonzero(res > tol):
            out.append(ConstraintViolation("eq", int(i), float(res[i])))
    for i in np.flatnonzero(lp.lower - x > tol):
        out.append(ConstraintViolation("lower", int(i), float(lp.lower[i] - x[i])))
    for i in np.flatnonzero(x - lp.upper > tol):
        out.append(ConstraintViolation("upper", int(i), float(x[i] - lp.upper[i])))
    return out


# --- standard-form conversion -------------------------------------------------
#
# Every variable is mapped onto nonnegative columns:
#   finite lower       -> shift   x = l + y           (one column, sign +1)
#   only finite upper  -> flip    x = u - y           (one column, sign -1)
#   free               -> split   x = y+ - y-         (two columns)
# Two-sided boxes additionally get an explicit row  y <= u - l.


@dataclass
class _StandardForm:
    a: np.ndarray             # rows of the standard system A y = b, y >= 0
    b: np.ndarray
    cost: np.ndarray          # objective over the y columns
    col_var: list[int]        # originating variable of each y column
    col_sign: list[float]
    offsets: np.ndarray       # per original variable
    n_slack: int


def _to_standard_form(lp: LinearProgram) -> _StandardForm | None:
    """Build equality standard form; None when a bound pair is contradictory."""
    n = lp.n_vars
    col_var: list[int] = []
    col_sign: list[float] = []
    offsets = np.zeros(n)
    widths: list[tuple[int, float]] = []   # (column index, finite box width)
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo > hi + FEAS_TOL:
            return None
        if np.isfinite(lo):
            offsets[j] = lo
            if np.isfinite(hi):
                widths.append((len(col_var), max(hi - lo, 0.0)))
            col_var.append(j)
            col_sign.append(1.0)
        elif np.isfinite(hi):
            offsets[j] = hi
            col_var.append(j)
            col_sign.append(-1.0)
        else:
            col_var.append(j)
            col_sign.append(1.0)
            col_var.append(j)
            col_sign.append(-1.0)
    n_cols = len(col_var)

    sign = np.array(col_sign)
    var = np.array(col_var)

    def project(mat: np.ndarray) -> np.ndarray:
        return mat[:, var] * sign

    m_eq, m_ub, m_bd = lp.a_eq.shape[0], lp.a_ub.shape[0], len(widths)
    m = m_eq + m_ub + m_bd
    n_slack = m_ub + m_bd
    a = np.zeros((m, n_cols + n_slack))
    b = np.zeros(m)
    a[:m_eq, :n_cols] = project(lp.a_eq)
    b[:m_eq] = lp.b_eq - lp.a_eq @ offsets
    a[m_eq:m_eq + m_ub, :n_cols] = project(lp.a_ub)
    b[m_eq:m_eq + m_ub] = lp.b_ub - lp.a_ub @ offsets
    a[m_eq:m_eq + m_ub, n_cols:n_cols + m_ub] = np.eye(m_ub)
    for k, (c, w) in enumerate(widths):
        r = m_eq + m_ub + k
        a[r, c] = 1.0
        a[r, n_cols + m_ub + k] = 1.0
        b[r] = w

    # row equilibration keeps pivot/feasibility tolerances meaningful
    row_scale = np.maximum(1.0, np.abs(a).max(axis=1, initial=0.0))
    a /= row_scale[:, None]
    b /= row_scale

    # flip rows so b >= 0 (phase 1 needs nonnegative rhs)
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    cost = np.zeros(n_cols + n_slack)
    cost[:n_cols] = lp.f[var] * sign
    return _StandardForm(a, b, cost, col_var, col_sign, offsets, n_slack)


# --- tableau simplex ----------------------------------------------------------


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    piv = tab[:, col].copy()
    piv[row] = 0.0
    tab -= np.outer(piv, tab[row])
    basis[row] = col

def _simplex_iterate(tab: np.ndarray, basis: np.ndarray, n_real: int,
                     start_pivots: int = 0) -> tuple[str, int]:
    """Run pivots until optimal or unbounded.  Last tableau row is the cost row.

    Dantzig's rule is used at first for speed; after a pivot budget it switches
    permanently to Bland's rule, which cannot cycle.  Columns >= n_real (the
    artificials in phase 1) are never allowed to re-enter.
    """
    m = tab.shape[0] - 1
    dantzig_limit = 3 * tab.shape[1] + 100
    max_pivots = 100 * (m + tab.shape[1]) + 100_000
    pivots = start_pivots
    while True:
        cost = tab[-1, :n_real]
        if pivots < dantzig_limit:
            col = int(np.argmin(cost))
            if cost[col] >= -PIVOT_TOL:
                return "optimal", pivots
        else:
            neg = np.flatnonzero(cost < -PIVOT_TOL)
            if neg.size == 0:
                return "optimal", pivots
            col = int(neg[0])   # Bland: smallest eligible index
        column = tab[:m, col]
        pos = column > PIVOT_TOL
        if not pos.any():
            return "unbounded", pivots
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL)
        row = int(ties[np.argmin(basis[ties])])   # smallest basis index on ties
        _pivot(tab, basis, row, col)
        pivots += 1
        if pivots > max_pivots:
            raise LpCycleError(f"pivot guard exceeded after {pivots} pivots")


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Two-phase simplex.  Returns status 'optimal', 'infeasible' or 'unbounded'.

    On 'optimal' the returned point satisfies every constraint within
    FEAS_TOL on row-scaled residuals; anything worse raises LpError.
    """
    sf = _to_standard_form(lp)
    if sf is None:
        return LpSolution("infeasible", None, None)
    a, b = sf.a, sf.b
    m, n_real = a.shape
    n_cols = n_real - sf.n_slack

    # slacks with +1 coefficient and b >= 0 can seed the basis; other rows
    # get an artificial variable
    basis = np.full(m, -1)
    for k in range(sf.n_slack):
        r_candidates = np.flatnonzero(a[:, n_cols + k] == 1.0)
        for r in r_candidates:
            if basis[r] == -1:
                basis[r] = n_cols + k
    need_art = np.flatnonzero(basis == -1)
    n_art = need_art.size
    tab = np.zeros((m + 1, n_real + n_art + 1))
    tab[:m, :n_real] = a
    tab[:m, -1] = b
    for k, r in enumerate(need_art):
        tab[r, n_real + k] = 1.0
        basis[r] = n_real + k

    # phase 1: minimise the artificial sum
    if n_art:
        tab[-1, n_real:n_real + n_art] = 1.0
        for r in need_art:
            tab[-1] -= tab[r]
        status, pivots = _simplex_iterate(tab, basis, n_real + n_art)
        if status != "optimal":
            raise LpError("phase 1 cannot be unbounded")   # cost bounded below by 0
        if -tab[-1, -1] > FEAS_TOL:
            return LpSolution("infeasible", None, None, iterations=pivots)
        # drive leftover artificials out of the basis (degenerate at zero)
        drop_rows = []
        for r in range(m):
            if basis[r] >= n_real:
                candidates = np.flatnonzero(np.abs(tab[r, :n_real]) > PIVOT_TOL)
                if candidates.size:
                    _pivot(tab, basis, r, int(candidates[0]))
                else:
                    drop_rows.append(r)   # redundant row
        if drop_rows:
            keep = [r for r in range(m) if r not in drop_rows]
            tab = tab[keep + [m]]
            basis = basis[keep]
            m = len(keep)
    else:
        pivots = 0

    # phase 2: real objective over the original columns
    tab = np.hstack([tab[:, :n_real], tab[:, -1:]])
    tab[-1, :] = 0.0
    tab[-1, :n_real] = sf.cost
    for r in range(m):
        if sf.cost[basis[r]] != 0.0:
            tab[-1] -= sf.cost[basis[r]] * tab[r]
    status, pivots = _simplex_iterate(tab, basis, n_real, start_pivots=pivots)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, iterations=pivots)

    y = np.zeros(n_real)
    y[basis] = tab[:m, -1]
    x = sf.offsets.copy()
    for c in range(n_cols):
        x[sf.col_var[c]] += sf.col_sign[c] * y[c]
    bad = check_feasible(lp, x, tol=FEAS_TOL)
    if bad:
        raise LpError("optimal vertex fails feasibility check: " + "; ".join(map(str, bad)))
    return LpSolution("optimal", x, float(lp.f @ x), iterations=pivots)
