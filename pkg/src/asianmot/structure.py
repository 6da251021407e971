"""Geometry of |x+y| optimizers: graph decomposition and forbidden-constellation scans."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from .mot import Coupling
from .scalars import all_exact

MAX_SUPPORT_POINTS = 10_000
MAX_TRIPLES = 10_000


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class XRecord:
    x: object
    mass: object
    upper_target: object = None
    upper_mass: object = 0
    lower_target: object = None
    lower_mass: object = 0
    diagonal_mass: object = 0
    residual_mass: object = 0


@dataclass(frozen=True)
class SupportStructure:
    """Per-atom split of an optimizer into upper graph, lower graph and anti-diagonal."""

    records: tuple
    residual: tuple  # (x, y, mass)
    diag_tol: object
    cluster_tol: object = 0
    # (x, y, mass, branch) rows, branch in {upper, lower, diagonal, residual}
    labelled: tuple = field(default=(), repr=False)

    @property
    def residual_mass(self):
        return sum(r[2] for r in self.residual)

    @property
    def total_mass(self):
        return sum(r.mass for r in self.records)

    def upper_graph(self) -> list:
        return [(r.x, r.upper_target) for r in self.records if r.upper_target is not None]

    def lower_graph(self) -> list:
        return [(r.x, r.lower_target) for r in self.records if r.lower_target is not None]

    def branch_mass(self, branch: str):
        return sum(row[2] for row in self.labelled if row[3] == branch)


def nu_spacing(coupling: Coupling):
    ys = sorted({p[-1] for p in coupling.points})
    if len(ys) < 2:
        return 0
    return min(b - a for a, b in zip(ys, ys[1:]))


def _clusters(points: list, tol) -> list:
    """Chain sorted ``(y, mass)`` pairs whose consecutive gaps are ``≤ tol``."""
    out: list = []
    for y, m in points:
        if out and y - out[-1][-1][0] <= tol:
            out[-1].append((y, m))
        else:
            out.append([(y, m)])
    return out


def extract_support(coupling: Coupling, diag_tol=None, cluster_tol=0) -> SupportStructure:
    """Classify each support point as upper, lower, diagonal or residual.

    Points with ``|x+y| ≤ diag_tol`` are diagonal.  The remaining targets
    split at the threshold ``y = x``: targets ``y ≥ x`` feed the upper graph,
    targets ``y < x`` the lower graph.  Within each side nearby targets
    (consecutive gap ``≤ cluster_tol``) are chained into one cluster, since
    a discretized continuous target typically straddles adjacent grid
    atoms; the outermost cluster on each side is the graph value (its mass
    barycenter) and any further clusters are residual.
    """
    if coupling.dim != 2:
        raise StructureError("structure extraction needs a two-step coupling")
    if diag_tol is None:
        diag_tol = 2 * nu_spacing(coupling)
    by_x: dict = defaultdict(list)
    for (x, y), m in zip(coupling.points, coupling.masses):
        by_x[x].append((y, m))
    records, residual, labelled = [], [], []
    for x in sorted(by_x):
        pts = sorted(by_x[x])
        diag = [(y, m) for y, m in pts if abs(x + y) <= diag_tol]
        rest = [(y, m) for y, m in pts if abs(x + y) > diag_tol]
        rec = dict(x=x, mass=sum(m for _, m in pts), diagonal_mass=sum(m for _, m in diag))
        for y, m in diag:
            labelled.append((x, y, m, "diagonal"))
        res_mass = 0
        above = _clusters([p for p in rest if p[0] >= x], cluster_tol)
        below = _clusters([p for p in rest if p[0] < x], cluster_tol)
        for side, clusters, keep in (("upper", above, len(above) - 1), ("lower", below, 0)):
            for idx, cl in enumerate(clusters):
                mass = sum(m for _, m in cl)
                if idx == keep:
                    target = sum(y * m for y, m in cl) / mass
                    rec.update({f"{side}_target": target, f"{side}_mass": mass})
                    branch = side
                else:
                    branch = "residual"
                    res_mass += mass
                    residual.extend((x, y, m) for y, m in cl)
                labelled.extend((x, y, m, branch) for y, m in cl)
        rec["residual_mass"] = res_mass
        records.append(XRecord(**rec))
    return SupportStructure(tuple(records), tuple(residual), diag_tol, cluster_tol, tuple(labelled))


class Breach(NamedTuple):
    x: object
    x_next: object
    target: object
    target_next: object


def check_structure(struct: SupportStructure, mode: str, tol=0) -> list:
    """Monotonicity breaches of the upper graph.

    ``min``: upper targets must be non-decreasing in ``x``; ``max``:
    non-increasing.  In ``max`` mode only mass sent above ``x + tol`` counts:
    targets within grid resolution of ``x`` are stay-put mass, which belongs
    to the maximizer's lower graph.
    """
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    graph = struct.upper_graph()
    if mode == "max":
        graph = [(x, u) for x, u in graph if u > x + tol]
    out = []
    for i, (x, u) in enumerate(graph):
        for x2, u2 in graph[i + 1:]:
            if mode == "min" and u > u2 + tol or mode == "max" and u2 > u + tol:
                out.append(Breach(x, x2, u, u2))
    return out


def decreasing_lower_flag(struct: SupportStructure, tol=0) -> bool:
    """Soft diagnostic: is the part of the lower graph below ``y = -x`` non-increasing?"""
    below = [(x, lo) for x, lo in struct.lower_graph() if lo < -x]
    return all(b[1] <= a[1] + tol for a, b in zip(below, below[1:]))


# --------------------------------------------------------------------------
# wedge functions and constellation scans


def wedge_functions(y_minus, y, y_plus):
    """Convexity gaps ``f`` (of ``|t+·|``) and ``g`` (of ``|t+·|·(·)²``) at the split ``y⁻ < y < y⁺``."""
    if not y_minus < y < y_plus:
        raise StructureError(f"need y- < y < y+, got {y_minus}, {y}, {y_plus}")
    lam = (y - y_minus) / (y_plus - y_minus)

    def f(t):
        return (1 - lam) * abs(t + y_minus) + lam * abs(t + y_plus) - abs(t + y)

    def g(t):
        return (1 - lam) * abs(t + y_minus) * y_minus ** 2 + lam * abs(t + y_plus) * y_plus ** 2 - abs(t + y) * y ** 2

    return f, g


class ConstellationViolation(NamedTuple):
    rule: str
    points: tuple  # ((x, y-), (x, y+), (x', y'))
    slack: object


def _lt(a, b, tol):
    return b - a if b - a > tol else None


def _le(a, b, eps):
    return b - a >= -eps


# each rule: strict pairs (a < b) and non-strict pairs (a <= b) in terms of (x, ym, yp, x2, y2)
_MIN_RULES = {
    "mincor_i": (lambda x, ym, yp, x2, y2: [(ym, -x), (-x, yp), (ym, y2), (y2, yp), (-x, y2), (x, x2)],
                 lambda x, ym, yp, x2, y2: []),
    "mincor_ii": (lambda x, ym, yp, x2, y2: [(ym, -x), (-x, yp), (ym, y2), (y2, yp), (y2, -x), (x2, x)],
                  lambda x, ym, yp, x2, y2: []),
    "mincorb": (lambda x, ym, yp, x2, y2: [(-x2, -x), (ym, yp), (ym, y2), (y2, yp)],
                lambda x, ym, yp, x2, y2: [(-x, ym)]),
}
_MAX_RULES = {
    "maxcor_i": (lambda x, ym, yp, x2, y2: [(ym, -x2), (-x2, yp), (ym, y2), (y2, yp), (x, x2)],
                 lambda x, ym, yp, x2, y2: [(y2, -x2)]),
    "maxcor_ii": (lambda x, ym, yp, x2, y2: [(ym, -x2), (-x2, yp), (ym, y2), (y2, yp), (x2, x)],
                  lambda x, ym, yp, x2, y2: [(-x2, y2)]),
    "maxcorb": (lambda x, ym, yp, x2, y2: [(x2, x), (ym, y2), (y2, yp)],
                lambda x, ym, yp, x2, y2: [(-x, ym)]),
    "I1": (lambda x, ym, yp, x2, y2: [(x2, x), (ym, -x2), (ym, y2), (y2, yp)],
           lambda x, ym, yp, x2, y2: [(-x2, y2)]),
    "I2": (lambda x, ym, yp, x2, y2: [(x, x2), (-x2, yp), (ym, y2), (y2, yp)],
           lambda x, ym, yp, x2, y2: [(y2, -x2)]),
    "I3": (lambda x, ym, yp, x2, y2: [(x2, x), (ym, -x2), (-x2, yp), (ym, y2), (y2, yp)],
           lambda x, ym, yp, x2, y2: [(-x, ym)]),
    "I4": (lambda x, ym, yp, x2, y2: [(x, x2), (ym, -x2), (-x2, yp), (ym, y2), (y2, yp)],
           lambda x, ym, yp, x2, y2: [(yp, -x)]),
}


def rules_for(mode: str) -> dict:
    if mode == "min":
        return _MIN_RULES
    if mode == "max":
        return _MAX_RULES
    raise ValueError("mode must be 'min' or 'max'")


def _triples(coupling: Coupling):
    if coupling.dim != 2:
        raise StructureError("constellation scans need a two-step coupling")
    if len(coupling) > MAX_SUPPORT_POINTS:
        raise StructureError(f"support has {len(coupling)} points (limit {MAX_SUPPORT_POINTS}); use a coarser grid")
    by_x: dict = defaultdict(list)
    for x, y in coupling.points:
        by_x[x].append(y)
    triples = []
    for x, ys in by_x.items():
        ys = sorted(ys)
        for i in range(len(ys)):
            for j in range(i + 1, len(ys)):
                triples.append((x, ys[i], ys[j]))
    if len(triples) > MAX_TRIPLES:
        raise StructureError(f"{len(triples)} split triples (limit {MAX_TRIPLES}); use a coarser grid")
    return triples


def forbidden_constellations(coupling: Coupling, mode: str, tol=0) -> list:
    """Scan every ``(x, y⁻, y⁺)`` split against every other support point.

    A strict inequality counts only when it holds with margin ``> tol``; a
    non-strict one must hold up to rounding.  ``slack`` is the smallest
    strict margin of the match.
    """
    rules = rules_for(mode)
    exact = all(all_exact(p) for p in coupling.points)
    eps = 0 if exact else 1e-12
    points = list(coupling.points)
    out = []
    for x, ym, yp in _triples(coupling):
        for x2, y2 in points:
            if x2 == x:
                continue
            for name, (strict, loose) in rules.items():
                margins = []
                for a, b in strict(x, ym, yp, x2, y2):
                    m = _lt(a, b, tol)
                    if m is None:
                        break
                    margins.append(m)
                else:
                    if all(_le(a, b, eps) for a, b in loose(x, ym, yp, x2, y2)):
                        out.append(ConstellationViolation(name, ((x, ym), (x, yp), (x2, y2)), min(margins)))
    return out


def lemma_violations(coupling: Coupling, mode: str, tol=0, secondary: bool = True) -> list:
    """Direct three-point rearrangement test (independent of the rule table).

    For a minimizer ``f(x) ≤ f(x')`` must hold for every split ``(x, y⁻,
    y⁺)`` and third point ``(x', y)`` with ``y⁻ < y < y⁺``, and on ties
    ``g(x) ≥ g(x')`` when the secondary objective was used.  Maximizers have
    both inequalities reversed.  Returns ``(kind, points, excess)`` tuples.
    """
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    s = 1 if mode == "min" else -1
    out = []
    for x, ym, yp in _triples(coupling):
        for x2, y in coupling.points:
            if x2 == x or not ym < y < yp:
                continue
            f, g = wedge_functions(ym, y, yp)
            df = s * (f(x) - f(x2))
            if df > tol:
                out.append(("f", ((x, ym), (x, yp), (x2, y)), df))
            elif secondary and abs(df) <= tol:
                dg = s * (g(x2) - g(x))
                if dg > tol:
                    out.append(("g", ((x, ym), (x, yp), (x2, y)), dg))
    return out


def halfplane_split(coupling: Coupling):
    """Split at ``x = 0``; the left part is rotated by 180° into the right half-plane."""
    rp, rm, lp, lm = [], [], [], []
    for (x, y), m in zip(coupling.points, coupling.masses):
        if x >= 0:
            rp.append((x, y))
            rm.append(m)
        else:
            lp.append((-x, -y))
            lm.append(m)
    return Coupling(tuple(rp), tuple(rm)), Coupling(tuple(lp), tuple(lm))


def recombine(right: Coupling, left: Coupling) -> Coupling:
    pts = list(right.points) + [(-x, -y) for x, y in left.points]
    ms = list(right.masses) + list(left.masses)
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    return Coupling(tuple(pts[i] for i in order), tuple(ms[i] for i in order))


def distance_to_lines(x, y, lines: list) -> float:
    """Smallest vertical distance from ``(x, y)`` to lines ``y = a x + b``."""
    return min(abs(y - (a * x + b)) for a, b in lines)
