"""Linear-programming kernel: revised simplex with Bland's rule in exact or double arithmetic.

Problems are always ``maximize c·x`` subject to row constraints
(``==``, ``<=``, ``>=``) and ``x ≥ 0``.  Exact mode works on rationals
end to end; double mode uses numpy with periodic refactorization.

Large problems can be crash-started from a HiGHS basis (via scipy).  The
HiGHS answer is only used to pick starting columns: the Bland iterations
that follow decide optimality and produce the reported basis and duals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .scalars import DOUBLE_TOL, all_exact, is_finite

try:  # gmpy2 rationals are roughly ten times faster than Fraction
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_KIND_ALIASES = {"==": "==", "=": "==", "eq": "==", "<=": "<=", "le": "<=", ">=": ">=", "ge": ">="}

AUTO_CRASH_COLUMNS = 100
# pivots between re-inversions; grows with the row count so that O(m^3) inversions
# stay comparable to the O(m^2) rank-one updates they replace
REFACTOR_EVERY = 64
# double mode prices by largest reduced cost and falls back to Bland's rule
# after this many consecutive degenerate pivots
BLAND_AFTER = 50


class LpError(ValueError):
    """Malformed linear program."""


class TooManyVariables(LpError):
    """Vertex enumeration refused: the problem is too large."""


class SolverError(RuntimeError):
    """Iteration limit hit or internal inconsistency."""


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    return Fraction(int(v.numerator), int(v.denominator))


@dataclass(frozen=True)
class LinearProgram:
    """``max objective·x`` s.t. ``A x (kind) rhs`` row by row, ``x ≥ 0``.

    The constraint matrix is stored by columns: ``columns[j]`` is a tuple of
    ``(row, value)`` pairs with nonzero values.
    """

    objective: tuple
    columns: tuple
    rhs: tuple
    row_kinds: tuple

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(self.objective))
        object.__setattr__(self, "rhs", tuple(self.rhs))
        object.__setattr__(self, "columns", tuple(tuple(c) for c in self.columns))
        kinds = []
        for k in self.row_kinds:
            if k not in _KIND_ALIASES:
                raise LpError(f"unknown row kind {k!r}")
            kinds.append(_KIND_ALIASES[k])
        object.__setattr__(self, "row_kinds", tuple(kinds))
        m, n = len(self.rhs), len(self.objective)
        if len(self.row_kinds) != m:
            raise LpError(f"{len(self.row_kinds)} row kinds for {m} rows")
        if len(self.columns) != n:
            raise LpError(f"{len(self.columns)} columns for {n} objective entries")
        for j, col in enumerate(self.columns):
            for i, v in col:
                if not 0 <= i < m:
                    raise LpError(f"column {j} references row {i} outside 0..{m - 1}")
                if not is_finite(v):
                    raise LpError(f"non-finite matrix entry in column {j}")
        if not all(map(is_finite, self.objective)) or not all(map(is_finite, self.rhs)):
            raise LpError("objective and rhs entries must be finite")

    @classmethod
    def dense(cls, objective: Sequence, matrix: Sequence[Sequence], rhs: Sequence,
              row_kinds: Sequence[str]) -> "LinearProgram":
        n = len(objective)
        for i, row in enumerate(matrix):
            if len(row) != n:
                raise LpError(f"matrix row {i} has {len(row)} entries, expected {n}")
        if len(matrix) != len(rhs):
            raise LpError(f"matrix has {len(matrix)} rows but rhs has {len(rhs)}")
        cols = [tuple((i, row[j]) for i, row in enumerate(matrix) if row[j] != 0) for j in range(n)]
        return cls(tuple(objective), tuple(cols), tuple(rhs), tuple(row_kinds))

    @property
    def n_rows(self) -> int:
        return len(self.rhs)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def exact(self) -> bool:
        return (all_exact(self.objective) and all_exact(self.rhs)
                and all(all_exact(v for _, v in c) for c in self.columns))

    def dense_matrix(self) -> list:
        out = [[0] * self.n_vars for _ in range(self.n_rows)]
        for j, col in enumerate(self.columns):
            for i, v in col:
                out[i][j] = v
        return out

    def row_activity(self, x: Sequence) -> list:
        act = [0] * self.n_rows
        for j, col in enumerate(self.columns):
            if x[j]:
                for i, v in col:
                    act[i] += v * x[j]
        return act

    def with_objective(self, objective: Sequence) -> "LinearProgram":
        return LinearProgram(tuple(objective), self.columns, self.rhs, self.row_kinds)


@dataclass(frozen=True)
class LpSolution:
    status: str
    value: object = None
    primal: tuple = ()
    dual: tuple = ()
    basis: tuple = ()
    iterations: int = 0
    # lexicographic solves: primary optimum and the primary problem's duals
    primary_value: object = None
    primary_dual: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def check(self, lp: LinearProgram, tol: Optional[float] = None) -> list:
        """Return a list of violated optimality conditions (empty when certified)."""
        if not self.optimal:
            return [f"status {self.status}"]
        exact = lp.exact and tol is None and all_exact(self.primal) and all_exact(self.dual)
        if tol is None:
            tol = 0 if exact else DOUBLE_TOL
        scale = 1 + abs(self.value)
        problems = []
        x, y = self.primal, self.dual
        if any(v < -tol for v in x):
            problems.append("negative primal entry")
        act = lp.row_activity(x)
        for i, (a, b, k) in enumerate(zip(act, lp.rhs, lp.row_kinds)):
            bad = (k == "==" and abs(a - b) > tol * (1 + abs(b))) or (k == "<=" and a > b + tol * (1 + abs(b))) or (
                k == ">=" and a < b - tol * (1 + abs(b)))
            if bad:
                problems.append(f"row {i} infeasible: {a} {k} {b}")
            if k == "<=" and y[i] < -tol * scale or k == ">=" and y[i] > tol * scale:
                problems.append(f"dual sign wrong on row {i}")
            if k != "==" and abs(y[i] * (a - b)) > tol * scale:
                problems.append(f"complementary slackness fails on row {i}")
        for j, col in enumerate(lp.columns):
            d = lp.objective[j] - sum(y[i] * v for i, v in col)
            if d > tol * scale:
                problems.append(f"dual infeasible on column {j} (reduced cost {d})")
            elif x[j] and abs(d * x[j]) > tol * scale:
                problems.append(f"complementary slackness fails on column {j}")
        primal_value = sum(c * v for c, v in zip(lp.objective, x))
        dual_value = sum(b * v for b, v in zip(lp.rhs, y))
        if abs(primal_value - dual_value) > tol * scale:
            problems.append(f"duality gap {primal_value - dual_value}")
        if abs(primal_value - self.value) > tol * scale:
            problems.append("reported value disagrees with primal")
        return problems


# --------------------------------------------------------------------------
# standard form


@dataclass
class _StandardForm:
    n: int  # structural columns
    m: int
    cols: list  # per column: list of (row, value) in working scalars
    cost: list
    b: list
    flipped: list
    slack_of_row: dict  # row -> slack column
    art_start: int
    exact: bool
    csc: Optional[sp.csc_matrix] = None
    csc_t: Optional[sp.csr_matrix] = None

    @property
    def n_cols(self) -> int:
        return len(self.cols)


def _standard_form(lp: LinearProgram, exact: bool) -> _StandardForm:
    conv = (lambda v: _Q(v.numerator, v.denominator) if isinstance(v, Fraction) else _Q(v)) if exact else float
    m, n = lp.n_rows, lp.n_vars
    flipped = [lp.rhs[i] < 0 for i in range(m)]
    sign = [-1 if f else 1 for f in flipped]
    cols = [[(i, conv(v) * sign[i]) for i, v in col] for col in lp.columns]
    cost = [conv(c) for c in lp.objective]
    b = [conv(lp.rhs[i]) * sign[i] for i in range(m)]
    kinds = []
    for i, k in enumerate(lp.row_kinds):
        if flipped[i] and k != "==":
            k = ">=" if k == "<=" else "<="
        kinds.append(k)
    one = conv(1)
    slack_of_row = {}
    for i, k in enumerate(kinds):
        if k == "<=":
            slack_of_row[i] = len(cols)
            cols.append([(i, one)])
            cost.append(conv(0))
        elif k == ">=":
            slack_of_row[i] = len(cols)
            cols.append([(i, -one)])
            cost.append(conv(0))
    art_start = len(cols)
    for i in range(m):
        cols.append([(i, one)])
        cost.append(conv(0))
    std = _StandardForm(n, m, cols, cost, b, flipped, slack_of_row, art_start, exact)
    if not exact:
        rows, cidx, vals = [], [], []
        for j, col in enumerate(cols):
            for i, v in col:
                rows.append(i)
                cidx.append(j)
                vals.append(v)
        std.csc = sp.csc_matrix((vals, (rows, cidx)), shape=(m, len(cols)))
        std.csc.sum_duplicates()
        std.csc_t = std.csc.T.tocsr()
    return std


# --------------------------------------------------------------------------
# revised simplex workspace


class _Simplex:
    """Owns the basis inverse; one solve at a time."""

    def __init__(self, std: _StandardForm, tol: float, max_iter: Optional[int] = None):
        self.std = std
        self.exact = std.exact
        self.tol = 0 if self.exact else tol
        self.m = std.m
        self.iterations = 0
        self.max_iter = max_iter or 200 * (std.m + std.n_cols) + 10_000
        self.reset()

    # basis bookkeeping ------------------------------------------------

    def reset(self):
        std = self.std
        basis = []
        for i in range(std.m):
            s = std.slack_of_row.get(i)
            if s is not None and std.cols[s][0][1] > 0:
                basis.append(s)
            else:
                basis.append(std.art_start + i)
        self.basis = basis
        if self.exact:
            # B^-1 stored by columns as sparse dicts; the initial basis is I
            self.binv = [{k: _Q(1)} for k in range(std.m)]
            self.xb = list(std.b)
        else:
            self.binv = np.eye(std.m)
            self.xb = np.asarray(std.b, dtype=float).copy()
            self._since_refactor = 0

    def column(self, j: int):
        if self.exact:
            alpha = {}
            for k, v in self.std.cols[j]:
                for i, bv in self.binv[k].items():
                    alpha[i] = alpha.get(i, 0) + bv * v
            return {i: v for i, v in alpha.items() if v != 0}
        a = self.std.csc
        lo, hi = a.indptr[j], a.indptr[j + 1]
        return self.binv[:, a.indices[lo:hi]] @ a.data[lo:hi]

    def duals(self, cost):
        cb = [cost[j] for j in self.basis]
        if self.exact:
            y = []
            for k in range(self.m):
                s = 0
                for i, v in self.binv[k].items():
                    if cb[i]:
                        s += cb[i] * v
                y.append(s)
            return y
        return np.asarray(cb, dtype=float) @ self.binv

    def pivot(self, r: int, j: int, alpha, update_x: bool = True):
        if self.exact:
            piv = alpha[r]
            for col in self.binv:
                br = col.get(r)
                if not br:
                    continue
                br = br / piv
                for i, a in alpha.items():
                    if i == r:
                        continue
                    nv = col.get(i, 0) - a * br
                    if nv:
                        col[i] = nv
                    else:
                        col.pop(i, None)
                col[r] = br
            if update_x:
                theta = self.xb[r] / piv
                if theta:
                    for i, a in alpha.items():
                        if i != r:
                            self.xb[i] -= a * theta
                self.xb[r] = theta
        else:
            piv = alpha[r]
            row = self.binv[r] / piv
            self.binv -= np.outer(alpha, row)
            self.binv[r] = row
            if update_x:
                theta = self.xb[r] / piv
                self.xb -= theta * alpha
                self.xb[r] = theta
        self.basis[r] = j
        self.iterations += 1
        if not self.exact:
            self._since_refactor += 1
            if self._since_refactor >= max(REFACTOR_EVERY, self.m // 8):
                self.refactor()

    def refactor(self):
        if self.exact:
            return
        bmat = self.std.csc[:, self.basis].toarray()
        self.binv = np.linalg.inv(bmat)
        self.xb = self.binv @ np.asarray(self.std.b, dtype=float)
        self._since_refactor = 0

    def recompute_x(self):
        if self.exact:
            xb = [0] * self.m
            for k, bk in enumerate(self.std.b):
                if bk:
                    for i, v in self.binv[k].items():
                        xb[i] += v * bk
            self.xb = xb
        else:
            self.refactor()

    # crash start ------------------------------------------------------

    def crash(self, candidates: Iterable[int], fillers: Sequence[int] = ()) -> bool:
        """Pivot ``candidates`` into the basis; fall back to the cold basis if infeasible.

        ``fillers`` (double mode only) may replace artificials left over at
        zero; they must be zero at the crash point.
        """
        cand = sorted(set(candidates))
        cset = set(cand)
        if not self.exact:
            return self._crash_dense(cand, cset, fillers)
        for j in cand:
            if j in self.basis:
                continue
            alpha = self.column(j)
            best, best_abs = None, 0
            items = alpha.items() if self.exact else enumerate(alpha)
            for i, a in items:
                if self.basis[i] in cset:
                    continue
                aa = abs(a)
                if aa > best_abs and (self.exact or aa > 1e-7):
                    best, best_abs = i, aa
            if best is not None:
                self.pivot(best, j, alpha, update_x=False)
        self.recompute_x()
        feas = -1e-9 if not self.exact else 0
        if any(v < feas for v in self.xb):
            self.reset()
            return False
        if not self.exact:
            self.xb = np.maximum(self.xb, 0.0)
        return True

    def _crash_dense(self, cand: list, cset: set, fillers: Sequence[int] = ()) -> bool:
        # pivot rows come from one LU of the candidate block instead of one
        # rank-one update per candidate
        from scipy.linalg import lu, qr

        free_rows = [i for i, b in enumerate(self.basis) if b not in cset]
        new = [j for j in cand if j not in set(self.basis)]
        if new and free_rows:
            block = self.std.csc[:, new].toarray()[free_rows]
            if block.shape[1] > block.shape[0]:
                block = block[:, : block.shape[0]]
                new = new[: block.shape[0]]
            perm, low, up = lu(block)
            rows = np.argmax(perm, axis=0)
            scale = max(1.0, float(np.max(np.abs(block), initial=0.0)))
            for k, j in enumerate(new):
                if abs(up[k, k]) > 1e-7 * scale:
                    self.basis[free_rows[rows[k]]] = j
        try:
            self.refactor()
        except np.linalg.LinAlgError:
            self.reset()
            return False
        art = self.std.art_start
        art_rows = [i for i, b in enumerate(self.basis) if b >= art]
        fill = [j for j in fillers if j not in set(self.basis)]
        if art_rows and fill:
            # the Schur block of the fillers on the artificial rows; any
            # column set of full rank there keeps B nonsingular
            block = self.binv[art_rows] @ self.std.csc[:, fill].toarray()
            _, rr, piv = qr(block, mode="economic", pivoting=True)
            diag = np.abs(np.diag(rr))
            rank = int(np.sum(diag > 1e-9 * max(1.0, diag[0] if diag.size else 0.0)))
            cols = list(piv[:rank])
            if cols:
                # the replaced rows must carry a nonsingular minor of the block
                perm, _, up = lu(block[:, cols])
                rows = np.argmax(perm, axis=0)
                old_basis = list(self.basis)
                for k, c in enumerate(cols):
                    if abs(up[k, k]) > 1e-9:
                        self.basis[art_rows[rows[k]]] = fill[c]
                try:
                    self.refactor()
                except np.linalg.LinAlgError:
                    self.basis = old_basis
                    self.refactor()
        if np.any(self.xb < -1e-9):
            self.reset()
            return False
        self.xb = np.maximum(self.xb, 0.0)
        return True

    # main loop ----------------------------------------------------------

    def optimize(self, cost, can_enter, drive_out_artificials: bool) -> str:
        tol = self.tol
        std = self.std
        exact = self.exact
        cost_arr = None if exact else np.asarray(cost, dtype=float)
        stalled = 0
        while True:
            if self.iterations > self.max_iter:
                raise SolverError("simplex iteration limit reached")
            y = self.duals(cost)
            entering = None
            in_basis = set(self.basis)
            if exact:
                nz = [(k, v) for k, v in enumerate(y) if v]
                for j in range(std.n_cols):
                    if not can_enter[j] or j in in_basis:
                        continue
                    d = cost[j]
                    col = std.cols[j]
                    if nz:
                        for i, v in col:
                            yi = y[i]
                            if yi:
                                d -= yi * v
                    if d > 0:
                        entering = j
                        break
            else:
                d = cost_arr - std.csc_t @ y
                d[~can_enter] = -np.inf
                d[self.basis] = -np.inf
                hits = np.flatnonzero(d > tol)
                if hits.size:
                    if stalled < BLAND_AFTER:
                        entering = int(hits[np.argmax(d[hits])])
                    else:
                        entering = int(hits[0])
            if entering is None:
                return OPTIMAL
            alpha = self.column(entering)
            r = self._leaving_row(alpha, drive_out_artificials)
            if r is None:
                return UNBOUNDED
            if not exact:
                stalled = stalled + 1 if abs(self.xb[r]) <= 1e-12 else 0
            self.pivot(r, entering, alpha)

    def _leaving_row(self, alpha, drive_out_artificials: bool):
        art = self.std.art_start
        if self.exact:
            items = list(alpha.items())
            ptol = 0
        else:
            # relative pivot tolerance keeps B well conditioned
            ptol = max(1e-9, 1e-7 * float(np.max(np.abs(alpha), initial=0.0)))
            idx = np.flatnonzero(np.abs(alpha) > ptol)
            items = [(int(i), alpha[i]) for i in idx]
        if drive_out_artificials:
            # a tiny pivot here would make the basis numerically singular
            arts = [i for i, a in items if self.basis[i] >= art and (self.exact or abs(a) > 1e-7)]
            if arts and not self.exact:
                return min(arts, key=lambda i: (-abs(alpha[i]), self.basis[i]))
            if arts:
                return min(arts, key=lambda i: self.basis[i])
        best, best_ratio = [], None
        for i, a in items:
            if a > ptol:
                ratio = self.xb[i] / a
                if best_ratio is None or ratio < best_ratio - (0 if self.exact else 1e-12):
                    best, best_ratio = [i], ratio
                elif (ratio == best_ratio) if self.exact else abs(ratio - best_ratio) <= 1e-12:
                    best.append(i)
        if not best:
            return None
        if self.exact:
            return min(best, key=lambda i: self.basis[i])
        # float ties (mostly degenerate rows): largest pivot, then Bland order
        return min(best, key=lambda i: (-abs(alpha[i]), self.basis[i]))


# --------------------------------------------------------------------------
# public solve


class CrashHint(NamedTuple):
    columns: list  # positive at the HiGHS vertex
    fillers: list  # zero-valued, zero reduced cost


def _highs_candidates(lp: LinearProgram, std: _StandardForm) -> Optional[list]:
    from scipy.optimize import linprog

    m, n = lp.n_rows, lp.n_vars
    a = sp.csc_matrix(
        ([float(v) for col in lp.columns for _, v in col],
         ([i for col in lp.columns for i, _ in col], [j for j, col in enumerate(lp.columns) for _ in col])),
        shape=(m, n)).tocsr()
    rhs = np.asarray([float(v) for v in lp.rhs])
    eq = [i for i, k in enumerate(lp.row_kinds) if k == "=="]
    le = [i for i, k in enumerate(lp.row_kinds) if k == "<="]
    ge = [i for i, k in enumerate(lp.row_kinds) if k == ">="]
    a_ub = sp.vstack([a[le], -a[ge]]) if (le or ge) else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if (le or ge) else None
    res = linprog(-np.asarray([float(c) for c in lp.objective]), A_ub=a_ub, b_ub=b_ub,
                  A_eq=a[eq] if eq else None, b_eq=rhs[eq] if eq else None,
                  bounds=(0, None), method="highs-ds")
    if res.status != 0:
        return None
    x = res.x
    cand = [j for j in range(n) if x[j] > 1e-9]
    act = a @ x
    for i, s in std.slack_of_row.items():
        if abs(act[i] - rhs[i]) > 1e-9:
            cand.append(s)
    # zero-valued columns with zero reduced cost under the HiGHS duals can
    # complete the basis without moving the point or losing dual feasibility
    ylin = np.zeros(m)
    if eq:
        ylin[eq] = res.eqlin.marginals
    ub_marg = res.ineqlin.marginals if (le or ge) else np.zeros(0)
    for k, i in enumerate(le):
        ylin[i] = ub_marg[k]
    for k, i in enumerate(ge):
        ylin[i] = -ub_marg[k]
    red = -np.asarray([float(c) for c in lp.objective]) - a.T @ ylin
    cset = set(cand)
    fillers = [j for j in range(n) if j not in cset and abs(red[j]) <= 1e-9]
    ub_rows = {i: k for k, i in enumerate(le)}
    ub_rows.update({i: len(le) + k for k, i in enumerate(ge)})
    for i, s in std.slack_of_row.items():
        if s not in cset and abs(ub_marg[ub_rows[i]]) <= 1e-9:
            fillers.append(s)
    return CrashHint(cand, fillers)


def solve(lp: LinearProgram, exact: Optional[bool] = None, tol: float = DOUBLE_TOL,
          crash="auto", max_iter: Optional[int] = None) -> LpSolution:
    """Solve ``lp`` to a basic optimal solution with row duals.

    ``exact`` defaults to whether every input is rational.  ``crash`` is
    ``"auto"`` (HiGHS crash above a size threshold), ``"highs"``, ``"off"``
    or an explicit list of column indices to start from.
    """
    if not isinstance(lp, LinearProgram):
        raise LpError("solve expects a LinearProgram")
    if exact is None:
        exact = lp.exact
    std = _standard_form(lp, exact)
    sx = _Simplex(std, tol, max_iter)
    candidates = None
    if isinstance(crash, str):
        if crash == "highs" or (crash == "auto" and lp.n_vars > AUTO_CRASH_COLUMNS):
            candidates = _highs_candidates(lp, std)
        elif crash not in ("auto", "off"):
            raise LpError(f"unknown crash option {crash!r}")
    elif crash is not None:
        candidates = list(crash)
    if isinstance(candidates, CrashHint):
        sx.crash(candidates.columns, candidates.fillers)
    elif candidates:
        sx.crash(candidates)
    return _run(lp, std, sx)


def _run(lp: LinearProgram, std: _StandardForm, sx: _Simplex) -> LpSolution:
    exact = std.exact
    art = std.art_start
    zero = _Q(0) if exact else 0.0
    if any(j >= art for j in sx.basis) and any(
            (sx.xb[i] != 0 if exact else sx.xb[i] > 1e-9) for i in range(std.m) if sx.basis[i] >= art):
        cost1 = [zero] * std.n_cols
        for j in range(art, std.n_cols):
            cost1[j] = -1 if exact else -1.0
        can = np.ones(std.n_cols, dtype=bool)
        can[art:] = False
        sx.optimize(cost1, can, drive_out_artificials=False)
        if not exact:
            sx.refactor()
        infeas = sum(sx.xb[i] for i in range(std.m) if sx.basis[i] >= art)
        if infeas > (0 if exact else 1e-9 * (1 + sum(abs(float(v)) for v in std.b))):
            return LpSolution(INFEASIBLE, iterations=sx.iterations)
    can = np.ones(std.n_cols, dtype=bool)
    can[art:] = False
    status = sx.optimize(std.cost, can, drive_out_artificials=True)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=sx.iterations)
    if not exact:
        sx.refactor()
    y = sx.duals(std.cost)
    xfull = [zero] * std.n_cols
    for i, j in enumerate(sx.basis):
        xfull[j] = sx.xb[i]
    if exact:
        primal = tuple(_to_fraction(v) for v in xfull[: std.n])
        dual = tuple(-_to_fraction(v) if f else _to_fraction(v) for v, f in zip(y, std.flipped))
        value = sum((c * x for c, x in zip(lp.objective, primal) if x), Fraction(0))
        value = Fraction(value)
    else:
        primal = tuple(max(float(v), 0.0) for v in xfull[: std.n])
        dual = tuple(-float(v) if f else float(v) for v, f in zip(y, std.flipped))
        value = float(sum(float(c) * x for c, x in zip(lp.objective, primal)))
    basis = tuple(sorted(j for j in sx.basis if j < art))
    return LpSolution(OPTIMAL, value, primal, dual, basis, sx.iterations)


# --------------------------------------------------------------------------
# lexicographic solve


def solve_lexicographic(lp: LinearProgram, secondary: Sequence, epsilon=None, exact: Optional[bool] = None,
                        tol: float = DOUBLE_TOL, crash="auto") -> LpSolution:
    """Maximize ``secondary`` over the (ε-)optimal set of the primary objective.

    The primary-value row ``c·x ≥ opt − ε`` is appended as stated; in
    addition columns with strictly negative primary reduced cost are fixed
    at zero (they vanish on every primary optimum), which keeps the double
    mode from drifting into ε-suboptimal vertices.
    """
    if len(secondary) != lp.n_vars:
        raise LpError("secondary objective has the wrong length")
    if exact is None:
        exact = lp.exact and all_exact(secondary)
    first = solve(lp, exact=exact, tol=tol, crash=crash)
    if not first.optimal:
        return first
    opt = first.value
    if epsilon is None:
        epsilon = 0 if exact else 1e-9 * (1 + abs(opt))
    y = first.dual
    scale = 1 + abs(opt)
    keep = []
    for j, col in enumerate(lp.columns):
        d = lp.objective[j] - sum(y[i] * v for i, v in col)
        if exact and d < 0 or not exact and d < -tol * scale:
            continue
        keep.append(j)
    kinds = list(lp.row_kinds)
    for i, k in enumerate(kinds):
        if k != "==" and (y[i] != 0 if exact else abs(y[i]) > tol * scale):
            kinds[i] = "=="
    m = lp.n_rows
    cols = []
    for j in keep:
        c = lp.objective[j]
        cols.append(lp.columns[j] + (((m, c),) if c != 0 else ()))
    reduced = LinearProgram(tuple(secondary[j] for j in keep), tuple(cols), lp.rhs + (opt - epsilon,),
                            tuple(kinds) + (">=",))
    pos = {j: p for p, j in enumerate(keep)}
    warm = [pos[j] for j in first.basis if j in pos]
    # slack columns of the original rows map by row; the new row's surplus is last
    std_probe = _standard_form(reduced, exact)
    if any(j >= lp.n_vars for j in first.basis):
        slack_back = {s: i for i, s in _standard_form(lp, exact).slack_of_row.items()}
        for j in first.basis:
            row = slack_back.get(j)
            if row is not None and row in std_probe.slack_of_row:
                warm.append(std_probe.slack_of_row[row])
    if m in std_probe.slack_of_row:
        warm.append(std_probe.slack_of_row[m])
    sx = _Simplex(std_probe, tol)
    if crash == "highs" or (crash == "auto" and reduced.n_vars > AUTO_CRASH_COLUMNS):
        warm = _highs_candidates(reduced, std_probe) or warm
    if isinstance(warm, CrashHint):
        sx.crash(warm.columns, warm.fillers)
    else:
        sx.crash(warm)
    second = _run(reduced, std_probe, sx)
    if not second.optimal:
        raise SolverError(f"secondary stage returned {second.status}")
    primal = [Fraction(0) if exact else 0.0] * lp.n_vars
    for p, j in enumerate(keep):
        primal[j] = second.primal[p]
    basis = tuple(sorted(keep[p] for p in second.basis if p < len(keep)))
    return LpSolution(OPTIMAL, second.value, tuple(primal), second.dual, basis,
                      first.iterations + second.iterations, primary_value=opt, primary_dual=first.dual)


# --------------------------------------------------------------------------
# vertex enumeration


def _exact_rank_reduce(rows: list, b: list):
    """Gauss-Jordan on ``[A | b]``; returns independent rows or None if inconsistent."""
    a = [list(r) + [bv] for r, bv in zip(rows, b)]
    n = len(rows[0]) if rows else 0
    piv_row = 0
    for c in range(n):
        p = next((r for r in range(piv_row, len(a)) if a[r][c] != 0), None)
        if p is None:
            continue
        a[piv_row], a[p] = a[p], a[piv_row]
        pv = a[piv_row][c]
        a[piv_row] = [v / pv for v in a[piv_row]]
        for r in range(len(a)):
            if r != piv_row and a[r][c] != 0:
                f = a[r][c]
                a[r] = [v - f * w for v, w in zip(a[r], a[piv_row])]
        piv_row += 1
    for r in range(piv_row, len(a)):
        if a[r][-1] != 0:
            return None
    return [row[:-1] for row in a[:piv_row]], [row[-1] for row in a[:piv_row]]


def _exact_solve(mat: list, rhs: list):
    """Solve a square system exactly; None if singular."""
    k = len(mat)
    a = [list(r) + [v] for r, v in zip(mat, rhs)]
    for c in range(k):
        p = next((r for r in range(c, k) if a[r][c] != 0), None)
        if p is None:
            return None
        a[c], a[p] = a[p], a[c]
        pv = a[c][c]
        a[c] = [v / pv for v in a[c]]
        for r in range(k):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [v - f * w for v, w in zip(a[r], a[c])]
    return [a[r][k] for r in range(k)]


def equality_form(lp: LinearProgram):
    """Dense rational ``A x = b`` with slack columns appended for inequality rows."""
    mat = [[Fraction(v) for v in row] for row in lp.dense_matrix()]
    b = [Fraction(v) for v in lp.rhs]
    n_slack = 0
    for i, k in enumerate(lp.row_kinds):
        if k == "==":
            continue
        for r, row in enumerate(mat):
            row.append(Fraction(1 if k == "<=" else -1) if r == i else Fraction(0))
        n_slack += 1
    return mat, b


def enumerate_vertices(lp: LinearProgram, max_vars: int = 24, max_bases: int = 2_000_000) -> list:
    """All vertices of ``{x ≥ 0 : A x (kinds) b}`` as tuples of Fractions.

    Every basis of the equality form is tried; a float batch solve filters
    the candidates and each survivor is confirmed in exact arithmetic.
    """
    if lp.n_vars > max_vars:
        raise TooManyVariables(f"{lp.n_vars} variables exceed the enumeration guard of {max_vars}")
    if lp.n_vars == 0:
        return []
    mat, b = equality_form(lp)
    if not mat:
        return [tuple(Fraction(0) for _ in range(lp.n_vars))]
    red = _exact_rank_reduce(mat, b)
    if red is None:
        return []
    rows, rb = red
    r = len(rows)
    total = len(mat[0])
    if r == 0:
        return [tuple(Fraction(0) for _ in range(lp.n_vars))]
    from math import comb

    if comb(total, r) > max_bases:
        raise TooManyVariables(f"{comb(total, r)} candidate bases exceed the guard of {max_bases}")
    af = np.asarray([[float(v) for v in row] for row in rows])
    bf = np.asarray([float(v) for v in rb])
    found = set()
    subsets = itertools.combinations(range(total), r)
    while True:
        chunk = list(itertools.islice(subsets, 20000))
        if not chunk:
            break
        idx = np.asarray(chunk)
        mats = af[:, idx].transpose(1, 0, 2)
        dets = np.linalg.det(mats)
        ok = np.abs(dets) > 1e-10
        if not ok.any():
            continue
        sols = np.linalg.solve(mats[ok], np.broadcast_to(bf, (int(ok.sum()), r))[..., None])[..., 0]
        good = (sols >= -1e-7).all(axis=1)
        for s in np.asarray(chunk)[ok][good]:
            cols = list(s)
            sub = [[row[c] for c in cols] for row in rows]
            x = _exact_solve(sub, rb)
            if x is None or any(v < 0 for v in x):
                continue
            full = [Fraction(0)] * total
            for c, v in zip(cols, x):
                full[c] = v
            found.add(tuple(full[: lp.n_vars]))
    return sorted(found)


def enumerate_vertices_bruteforce(lp: LinearProgram) -> list:
    """Pure-rational enumeration with no float filtering (slow; test oracle)."""
    mat, b = equality_form(lp)
    red = _exact_rank_reduce(mat, b)
    if red is None:
        return []
    rows, rb = red
    r = len(rows)
    total = len(mat[0]) if mat else lp.n_vars
    found = set()
    for cols in itertools.combinations(range(total), r):
        sub = [[row[c] for c in cols] for row in rows]
        x = _exact_solve(sub, rb)
        if x is None or any(v < 0 for v in x):
            continue
        full = [Fraction(0)] * total
        for c, v in zip(cols, x):
            full[c] = v
        found.add(tuple(full[: lp.n_vars]))
    return sorted(found)
