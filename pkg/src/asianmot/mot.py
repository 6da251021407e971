"""Martingale optimal transport: LP formulation, optimizers and hedging certificates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from . import lp_core
from .lp_core import LinearProgram, LpSolution
from .measures import DiscreteMeasure, convex_order
from .payoffs import CostSpec, PiecewiseLinear, PayoffError
from .scalars import DOUBLE_TOL, all_exact, format_scalar

MAX_PATHS = 200_000
MASS_FLOOR = 1e-12


class ConvexOrderError(ValueError):
    """Consecutive marginals are not in convex order; no martingale coupling exists."""

    def __init__(self, step: int, witness):
        self.step = step
        self.witness = witness
        super().__init__(f"marginals {step} and {step + 1} are not in convex order "
                         f"(call prices violate the order at strike {format_scalar(witness)})")


class ProblemTooLarge(ValueError):
    pass


class InternalConsistencyError(RuntimeError):
    """A certificate failed verification; indicates a solver bug."""


@dataclass(frozen=True)
class Coupling:
    """Finitely supported law of a path ``(x_1, ..., x_n)``.

    ``masses`` need not sum to one (sub-couplings from splitting keep their
    original mass); use :func:`coupling_violations` to check the marginal
    and martingale invariants.
    """

    points: tuple
    masses: tuple
    marginals: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))
        object.__setattr__(self, "masses", tuple(self.masses))
        if len(self.points) != len(self.masses):
            raise ValueError("points and masses differ in length")
        if any(not m > 0 for m in self.masses):
            raise ValueError("coupling masses must be positive")
        dims = {len(p) for p in self.points}
        if len(dims) > 1:
            raise ValueError("all support points need the same dimension")

    @property
    def dim(self) -> int:
        return len(self.points[0]) if self.points else 0

    @property
    def total_mass(self):
        return sum(self.masses)

    @property
    def support(self) -> list:
        """``(x_1, ..., x_n, mass)`` tuples."""
        return [(*p, m) for p, m in zip(self.points, self.masses)]

    def __len__(self) -> int:
        return len(self.points)

    def expect(self, f: Callable):
        return sum(f(*p) * m for p, m in zip(self.points, self.masses))

    def marginal(self, k: int) -> dict:
        out: dict = {}
        for p, m in zip(self.points, self.masses):
            out[p[k]] = out.get(p[k], 0) + m
        return out

    def marginal_measure(self, k: int) -> DiscreteMeasure:
        marg = self.marginal(k)
        return DiscreteMeasure.from_points(list(marg), list(marg.values()), normalize=True)

    def to_rows(self) -> list:
        return [[format_scalar(v) for v in p] + [format_scalar(m)] for p, m in zip(self.points, self.masses)]


def coupling_violations(coupling: Coupling, marginals: Optional[Sequence] = None, tol=None) -> list:
    """Check masses, marginals (where prescribed) and the martingale property."""
    exact = all_exact(coupling.masses) and all(all_exact(p) for p in coupling.points)
    if tol is None:
        tol = 0 if exact else DOUBLE_TOL
    problems = []
    if abs(coupling.total_mass - 1) > tol:
        problems.append(f"total mass {coupling.total_mass}")
    if marginals is not None:
        for k, mu in enumerate(marginals):
            if mu is None:
                continue
            got = coupling.marginal(k)
            for a, w in mu.items():
                if abs(got.get(a, 0) - w) > tol:
                    problems.append(f"marginal {k} mismatch at atom {a}")
            extra = set(got) - set(mu.atoms)
            if any(got[a] > tol for a in extra):
                problems.append(f"marginal {k} has mass off the prescribed atoms")
    for j in range(1, coupling.dim):
        drift: dict = {}
        for p, m in zip(coupling.points, coupling.masses):
            key = p[:j]
            drift[key] = drift.get(key, 0) + (p[j] - p[j - 1]) * m
        for key, d in drift.items():
            if abs(d) > tol:
                problems.append(f"martingale condition fails after prefix {key} (drift {d})")
    return problems


@dataclass(frozen=True)
class DualCertificate:
    """Static payoffs per period plus trading positions per prefix.

    ``phi[i]`` maps atoms of the ``i``-th prescribed marginal to payoff
    values (unprescribed coordinates carry an empty map).  ``h[j]`` maps a
    prefix ``(x_1..x_{j+1})`` to the position held over the next step.
    """

    phi: tuple
    h: tuple
    price: object
    direction: str  # "super" or "sub"

    def hedge_value(self, path: Sequence):
        total = 0
        for i, x in enumerate(path):
            if self.phi[i]:
                total += self.phi[i].get(x, 0)
        for j in range(len(path) - 1):
            total += self.h[j].get(tuple(path[: j + 1]), 0) * (path[j + 1] - path[j])
        return total


@dataclass
class MotProblem:
    """Product-grid LP encoding of an n-step martingale transport problem."""

    grids: tuple
    marginals: tuple  # DiscreteMeasure or None (free coordinate)
    payoff: Callable
    direction: str
    exact: bool
    paths: list
    costs: list
    lp: LinearProgram
    marginal_rows: list  # per coordinate: {atom: row}
    martingale_rows: list  # per step j: {prefix: row}

    @property
    def n_steps(self) -> int:
        return len(self.grids)


def build_problem(marginals: Sequence[Optional[DiscreteMeasure]], payoff: Callable, direction: str = "max",
                  grids: Optional[Sequence] = None, exact: Optional[bool] = None) -> MotProblem:
    """Encode the martingale transport LP on the product of atom grids.

    Coordinates with ``marginals[i] is None`` are free; their candidate
    positions come from ``grids[i]``.
    """
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    n = len(marginals)
    if n < 2:
        raise ValueError("need at least two time steps")
    if grids is None:
        grids = [None] * n
    grid_list = []
    for i, (mu, g) in enumerate(zip(marginals, grids)):
        if mu is not None:
            grid_list.append(tuple(mu.atoms))
        elif g is None:
            raise ValueError(f"coordinate {i} has neither a marginal nor a grid")
        else:
            grid_list.append(tuple(sorted(set(g))))
    constrained = [i for i, mu in enumerate(marginals) if mu is not None]
    if not constrained:
        raise ValueError("at least one coordinate needs a prescribed marginal")
    if exact is None:
        exact = all(mu.exact for mu in marginals if mu is not None) and all(all_exact(g) for g in grid_list)
    count = 1
    for g in grid_list:
        count *= len(g)
    if count > MAX_PATHS:
        raise ProblemTooLarge(f"{count} paths exceed the cap of {MAX_PATHS}; use coarser marginals")

    paths = list(itertools.product(*grid_list))
    costs = [payoff(*p) for p in paths]
    if not exact:
        costs = [float(c) for c in costs]
    sign = 1 if direction == "max" else -1

    row = 0
    marginal_rows: list = []
    rhs: list = []
    first = constrained[0]
    for i, mu in enumerate(marginals):
        rows = {}
        if mu is not None:
            atoms = mu.atoms if i == first else mu.atoms[:-1]
            for a, w in zip(atoms, mu.weights):
                rows[a] = row
                rhs.append(w)
                row += 1
        marginal_rows.append(rows)
    martingale_rows: list = []
    for j in range(n - 1):
        rows = {}
        for prefix in itertools.product(*grid_list[: j + 1]):
            if any(y != prefix[-1] for y in grid_list[j + 1]):
                rows[prefix] = row
                rhs.append(0)
                row += 1
        martingale_rows.append(rows)

    columns = []
    for p in paths:
        col = []
        for i in range(n):
            r = marginal_rows[i].get(p[i])
            if r is not None:
                col.append((r, 1))
        for j in range(n - 1):
            r = martingale_rows[j].get(p[: j + 1])
            if r is not None:
                d = p[j + 1] - p[j]
                if d:
                    col.append((r, d if exact else float(d)))
        columns.append(tuple(col))
    if not exact:
        rhs = [float(v) for v in rhs]
    objective = tuple(sign * c for c in costs)
    lp = LinearProgram(objective, tuple(columns), tuple(rhs), ("==",) * len(rhs))
    return MotProblem(tuple(grid_list), tuple(marginals), payoff, direction, exact, paths, costs, lp,
                      marginal_rows, martingale_rows)


@dataclass(frozen=True)
class MotSolution:
    coupling: Coupling
    value: object
    problem: MotProblem = field(repr=False, compare=False)
    lp_solution: LpSolution = field(repr=False, compare=False)

    def __iter__(self):
        # allows ``coupling, value = solve_mot(...)``
        yield self.coupling
        yield self.value


def _check_order(marginals: Sequence[Optional[DiscreteMeasure]], tol=None):
    prev = None
    for i, mu in enumerate(marginals):
        if mu is None:
            continue
        if prev is not None:
            res = convex_order(prev[1], mu, tol)
            if not res.ordered:
                raise ConvexOrderError(prev[0], res.witness)
        prev = (i, mu)


def _extract_coupling(problem: MotProblem, sol: LpSolution) -> Coupling:
    pts, ms = [], []
    for p, x in zip(problem.paths, sol.primal):
        if (x > 0) if problem.exact else (x > MASS_FLOOR):
            pts.append(p)
            ms.append(x)
    return Coupling(tuple(pts), tuple(ms), problem.marginals)


def solve_problem(problem: MotProblem, secondary: Optional[str] = None, secondary_weight: Optional[Callable] = None,
                  crash="auto") -> MotSolution:
    """Solve an encoded problem, optionally selecting a lexicographic optimizer.

    ``secondary`` is ``"max"`` or ``"min"`` of ``cost·y²`` where ``y`` is the
    last coordinate (``secondary_weight`` overrides the ``y²`` factor).
    """
    lp = problem.lp
    exact = problem.exact
    sign = 1 if problem.direction == "max" else -1
    if secondary is None or secondary == "off":
        sol = lp_core.solve(lp, exact=exact, crash=crash)
    else:
        if secondary not in ("max", "min"):
            raise ValueError(f"secondary must be 'max', 'min' or None, got {secondary!r}")
        weight = secondary_weight or (lambda *p: p[-1] * p[-1])
        s2 = 1 if secondary == "max" else -1
        sec = [s2 * c * (weight(*p) if exact else float(weight(*p))) for c, p in zip(problem.costs, problem.paths)]
        sol = lp_core.solve_lexicographic(lp, sec, exact=exact, crash=crash)
    if sol.status == lp_core.INFEASIBLE:
        raise ValueError("martingale transport problem is infeasible")
    if not sol.optimal:
        raise RuntimeError(f"martingale transport LP returned status {sol.status}")
    coupling = _extract_coupling(problem, sol)
    primal_value = sol.primary_value if sol.primary_value is not None else sol.value
    value = sign * primal_value
    return MotSolution(coupling, value, problem, sol)


def solve_mot(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: Callable, direction: str = "max",
              secondary: Optional[str] = None, exact: Optional[bool] = None, crash="auto") -> MotSolution:
    """Optimal martingale transport between ``μ`` and ``ν`` for a two-step cost.

    Returns a vertex optimizer; with ``secondary`` the lexicographic one.
    Unpacks as ``(coupling, value)``.
    """
    _check_order([mu, nu])
    problem = build_problem([mu, nu], cost, direction, exact=exact)
    return solve_problem(problem, secondary, crash=crash)


def solve_mot_multi(marginals: Sequence[Optional[DiscreteMeasure]], payoff: Callable, direction: str = "max",
                    grids: Optional[Sequence] = None, secondary: Optional[str] = None,
                    exact: Optional[bool] = None, crash="auto") -> MotSolution:
    _check_order(marginals)
    problem = build_problem(marginals, payoff, direction, grids, exact)
    return solve_problem(problem, secondary, crash=crash)


def dual_certificate(problem: MotProblem, solution: LpSolution | MotSolution, verify: bool = True,
                     tol: Optional[float] = None) -> DualCertificate:
    """Super- (max) or sub-hedge (min) read off the LP row duals, verified on the full grid."""
    if isinstance(solution, MotSolution):
        solution = solution.lp_solution
    y = solution.primary_dual if solution.primary_value is not None else solution.dual
    sign = 1 if problem.direction == "max" else -1
    zero = Fraction(0) if problem.exact else 0.0
    phi = []
    for i, mu in enumerate(problem.marginals):
        if mu is None:
            phi.append({})
            continue
        rows = problem.marginal_rows[i]
        phi.append({a: sign * y[rows[a]] if a in rows else zero for a in mu.atoms})
    h = []
    for j, rows in enumerate(problem.martingale_rows):
        h.append({prefix: sign * y[r] for prefix, r in rows.items()})
    price = zero
    for i, mu in enumerate(problem.marginals):
        if mu is not None:
            price += sum(phi[i][a] * w for a, w in mu.items())
    cert = DualCertificate(tuple(phi), tuple(h), price, "super" if sign == 1 else "sub")
    if verify:
        worst = verify_certificate(problem, cert)
        limit = 0 if problem.exact and tol is None else (tol or 1e-8) * (1 + max(abs(float(c)) for c in problem.costs))
        if worst < -limit:
            raise InternalConsistencyError(f"hedge inequality violated by {worst} on the product grid")
        value = sign * (solution.primary_value if solution.primary_value is not None else solution.value)
        gap_limit = 0 if problem.exact and tol is None else (tol or 1e-9) * (1 + abs(value))
        if abs(cert.price - value) > gap_limit:
            raise InternalConsistencyError(f"certificate price {cert.price} differs from primal value {value}")
    return cert


def verify_certificate(problem: MotProblem, cert: DualCertificate) -> object:
    """Minimum over the product grid of the hedge surplus (negative means violated)."""
    s = 1 if cert.direction == "super" else -1
    worst = None
    if problem.exact:
        for p, c in zip(problem.paths, problem.costs):
            surplus = s * (cert.hedge_value(p) - c)
            if worst is None or surplus < worst:
                worst = surplus
        return worst
    n = problem.n_steps
    paths = np.asarray(problem.paths, dtype=float)
    total = np.zeros(len(problem.paths))
    for i in range(n):
        if cert.phi[i]:
            total += np.asarray([float(cert.phi[i].get(p[i], 0.0)) for p in problem.paths])
    for j in range(n - 1):
        hv = np.asarray([float(cert.h[j].get(p[: j + 1], 0.0)) for p in problem.paths])
        total += hv * (paths[:, j + 1] - paths[:, j])
    return float((s * (total - np.asarray(problem.costs, dtype=float))).min())


@dataclass(frozen=True)
class BoundsReport:
    lower: object
    upper: object
    optimizers: tuple  # (minimizer, maximizer)
    certificates: tuple  # (sub-hedge, super-hedge)
    gap_lower: object
    gap_upper: object

    def to_json(self) -> dict:
        return {
            "lower": format_scalar(self.lower),
            "upper": format_scalar(self.upper),
            "gap_lower": format_scalar(self.gap_lower),
            "gap_upper": format_scalar(self.gap_upper),
            "subhedge_price": format_scalar(self.certificates[0].price),
            "superhedge_price": format_scalar(self.certificates[1].price),
            "minimizer": self.optimizers[0].to_rows(),
            "maximizer": self.optimizers[1].to_rows(),
        }


def bounds(marginals: Sequence[Optional[DiscreteMeasure]], payoff: Callable, grids: Optional[Sequence] = None,
           secondary: bool = False, exact: Optional[bool] = None) -> BoundsReport:
    """Both price bounds with optimizers and hedging certificates."""
    _check_order(marginals)
    sols, certs = [], []
    for direction in ("min", "max"):
        problem = build_problem(marginals, payoff, direction, grids, exact)
        sec = None
        if secondary and len(problem.grids) == 2:
            # among minimizers take the largest cost·y², among maximizers the smallest
            sec = "max" if direction == "min" else "min"
        sol = solve_problem(problem, sec)
        sols.append(sol)
        certs.append(dual_certificate(problem, sol))
    lower, upper = sols[0].value, sols[1].value
    return BoundsReport(lower, upper, (sols[0].coupling, sols[1].coupling), tuple(certs),
                        lower - certs[0].price, certs[1].price - upper)


def jensen_lower_bound(mu1: DiscreteMeasure, phi: PiecewiseLinear):
    """``∫ φ dμ₁``: a convex payoff of an average is never cheaper than the European at the first date."""
    if not isinstance(phi, PiecewiseLinear):
        raise PayoffError("jensen_lower_bound expects a piecewise-linear payoff")
    phi.require_convex()
    return mu1.expect(phi)


def abs_sum(x, y):
    return abs(x + y)
