"""Seven-node binomial transport plans and the right/left dominance dichotomy."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .mot import Coupling, abs_sum, solve_mot
from .scalars import DOUBLE_TOL, all_exact

NODE_NAMES = ("x", "x_minus", "x_plus", "y_mm", "y_mp", "y_pm", "y_pp")
CASES = tuple(f"L{i}" for i in range(1, 10))
# cases swapped by the mirror map; L1 and L9 are self-symmetric, L6-L8 have no partner
MIRROR_PAIRS = {"L1": "L1", "L2": "L3", "L3": "L2", "L4": "L5", "L5": "L4", "L9": "L9"}


class BtpError(ValueError):
    pass


class LemmaFalsification(RuntimeError):
    """Neither branch of the dominance dichotomy holds for ``btp``."""

    def __init__(self, btp: "BTP", cost_left, cost_right, best_competitor_value):
        self.btp = btp
        self.cost_left = cost_left
        self.cost_right = cost_right
        self.best_competitor_value = best_competitor_value
        super().__init__(
            f"dominance dichotomy fails for nodes {btp.nodes}: left {cost_left} > right {cost_right} "
            f"and the right part is optimal (best competitor {best_competitor_value})")


@dataclass(frozen=True)
class BTP:
    x: object
    x_minus: object
    x_plus: object
    y_mm: object
    y_mp: object
    y_pm: object
    y_pp: object

    def __post_init__(self):
        vals = self.nodes
        if all_exact(vals):
            for name, v in zip(NODE_NAMES, vals):
                object.__setattr__(self, name, Fraction(v))
        if not self.x_minus <= self.x <= self.x_plus:
            raise BtpError("need x- <= x <= x+")
        if not self.y_mm <= self.x_minus <= self.y_mp:
            raise BtpError("need y-- <= x- <= y-+")
        if not self.y_pm <= self.x_plus <= self.y_pp:
            raise BtpError("need y+- <= x+ <= y++")

    @property
    def nodes(self) -> tuple:
        return tuple(getattr(self, n) for n in NODE_NAMES)

    @property
    def exact(self) -> bool:
        return all_exact(self.nodes)

    def _one(self):
        return Fraction(1) if self.exact else 1.0

    @property
    def lam_plus(self):
        if self.x_plus > self.x_minus:
            return (self.x - self.x_minus) / (self.x_plus - self.x_minus)
        return self._one()

    @property
    def lam_minus(self):
        return 1 - self.lam_plus

    @property
    def lam_mp(self):
        if self.y_mp > self.y_mm:
            return (self.x_minus - self.y_mm) / (self.y_mp - self.y_mm)
        return self._one()

    @property
    def lam_mm(self):
        return 1 - self.lam_mp

    @property
    def lam_pp(self):
        if self.y_pp > self.y_pm:
            return (self.x_plus - self.y_pm) / (self.y_pp - self.y_pm)
        return self._one()

    @property
    def lam_pm(self):
        return 1 - self.lam_pp

    def branches(self) -> list:
        """``(middle node, final node, mass)`` for the four paths."""
        return [
            (self.x_minus, self.y_mm, self.lam_minus * self.lam_mm),
            (self.x_minus, self.y_mp, self.lam_minus * self.lam_mp),
            (self.x_plus, self.y_pm, self.lam_plus * self.lam_pm),
            (self.x_plus, self.y_pp, self.lam_plus * self.lam_pp),
        ]

    def plan(self) -> Coupling:
        """The full three-step plan started at ``x``."""
        return _merged([((self.x, a, b), m) for a, b, m in self.branches()])

    def to_json(self) -> dict:
        from .scalars import format_scalar

        return {n: format_scalar(v) for n, v in zip(NODE_NAMES, self.nodes)}


def make_btp(x, x_minus, x_plus, y_mm, y_mp, y_pm, y_pp) -> BTP:
    return BTP(x, x_minus, x_plus, y_mm, y_mp, y_pm, y_pp)


def _merged(items) -> Coupling:
    acc: dict = {}
    for p, m in items:
        if m:
            acc[p] = acc.get(p, 0) + m
    pts = sorted(acc)
    return Coupling(tuple(pts), tuple(acc[p] for p in pts))


def right_part(btp: BTP) -> Coupling:
    return _merged([((a, b), m) for a, b, m in btp.branches()])


def left_part(btp: BTP) -> Coupling:
    return _merged([((btp.x, b), m) for _, b, m in btp.branches()])


def branch_costs(btp: BTP) -> tuple:
    """``(cost_left, cost_right)`` under ``|x+y|``."""
    return left_part(btp).expect(abs_sum), right_part(btp).expect(abs_sum)


def mirror(btp: BTP) -> BTP:
    """Image under ``(x, y, z) -> (-x, -y, -z)``; the ± branches trade places.

    With ``x- = x+`` only the ``+`` branch carries mass, so it stays the
    ``+`` branch and the unused one is mirrored alongside it.
    """
    if btp.x_plus == btp.x_minus:
        return BTP(-btp.x, -btp.x_plus, -btp.x_minus, -btp.y_mp, -btp.y_mm, -btp.y_pp, -btp.y_pm)
    return BTP(-btp.x, -btp.x_plus, -btp.x_minus, -btp.y_pp, -btp.y_pm, -btp.y_mp, -btp.y_mm)


# ---------------------------------------------------------------------------
# case hypotheses


def classify_cases(btp: BTP, tol=None) -> frozenset:
    """Every (L) case whose full hypothesis set holds."""
    if tol is None:
        tol = 0 if btp.exact else DOUBLE_TOL
    x, xm, xp, ymm, ymp, ypm, ypp = btp.nodes

    def ge(a, b):
        return a >= b - tol

    def le(a, b):
        return a <= b + tol

    def eq(a, b):
        return abs(a - b) <= tol

    def chain(*vals):
        return all(le(a, b) for a, b in zip(vals, vals[1:]))

    width = xp - xm
    out = set()
    if le(ymp, ypm):
        out.add("L1")
    if ge(xm + ypm, 0) and ge(xm + ymm, 0):
        out.add("L2")
    if le(xp + ypp, 0) and le(xp + ymp, 0):
        out.add("L3")
    if le(xp + ymp, 0) and le(xp + ypm, 0) and ge(xp + ypp, 0):
        out.add("L4")
    if ge(xm + ypm, 0) and ge(xm + ymp, 0) and le(xm + ymm, 0):
        out.add("L5")
    if (ge(xm + ymp, 0) and le(xm + ymm, 0) and ge(xp + ypm, 0) and chain(ymm, ypm, ypp, ymp)
            and ymp != ymm):
        # λ± y-- + (1-λ±) y-+ = y+±
        lam_m = (ymp - ypm) / (ymp - ymm)
        lam_p = (ymp - ypp) / (ymp - ymm)
        if le((1 - lam_m) * width, xp + ypm) and le((1 - lam_p) * width, xp + ypp):
            out.add("L6")
    if (ge(xm + ymp, 0) and le(xm + ymm, 0) and ge(xm + ypp, 0) and le(xp + ypm, 0)
            and chain(ypm, ymm, ypp, ymp) and ypp != ypm):
        # λ y+- + (1-λ) y++ = y--
        lam = (ypp - ymm) / (ypp - ypm)
        if le(lam * width, -(xm + ymm)):
            out.add("L7")
    if (eq(ymm, ypm) and le(xp + ymm, 0) and ge(xm + ymp, 0) and ge(xp + ypp, 0) and le(ypp, ymp)
            and ymp != ymm):
        # λ y- + (1-λ) y-+ = y++
        lam = (ymp - ypp) / (ymp - ymm)
        if le((1 - lam) * width, xp + ypp):
            out.add("L8")
    if eq(ymp, ypp) and eq(ymm, ypm):
        out.add("L9")
    return frozenset(out)


# ---------------------------------------------------------------------------
# dominance


def right_part_suboptimal(btp: BTP, tol=None):
    """Is some martingale coupling with the right part's marginals strictly costlier?

    Returns ``(suboptimal, competitor, best_value)``; the competitor is the
    maximizing coupling when ``suboptimal`` holds, else ``None``.
    """
    if tol is None:
        tol = 0 if btp.exact else DOUBLE_TOL
    right = right_part(btp)
    cost = right.expect(abs_sum)
    if btp.x_plus == btp.x_minus:
        return False, None, cost
    mu, nu = right.marginal_measure(0), right.marginal_measure(1)
    best = solve_mot(mu, nu, abs_sum, "max", exact=btp.exact)
    if best.value > cost + tol:
        return True, best.coupling, best.value
    return False, None, best.value


@dataclass(frozen=True)
class DominanceResult:
    verdict: str  # right_suboptimal, left_dominated or both
    matched_cases: frozenset
    improving_competitor: Optional[Coupling]
    costs: tuple  # (cost_left, cost_right)

    def to_json(self) -> dict:
        from .scalars import format_scalar

        return {
            "verdict": self.verdict,
            "matched_cases": sorted(self.matched_cases, key=lambda c: int(c[1:])),
            "cost_left": format_scalar(self.costs[0]),
            "cost_right": format_scalar(self.costs[1]),
            "competitor": self.improving_competitor.to_rows() if self.improving_competitor else None,
        }


def dominance_check(btp: BTP, tol=None) -> DominanceResult:
    """Evaluate the dichotomy; raises :class:`LemmaFalsification` if neither side holds."""
    if tol is None:
        tol = 0 if btp.exact else DOUBLE_TOL
    cost_left, cost_right = branch_costs(btp)
    sub, competitor, best = right_part_suboptimal(btp, tol)
    dominated = cost_left <= cost_right + tol
    if not sub and not dominated:
        raise LemmaFalsification(btp, cost_left, cost_right, best)
    verdict = "both" if sub and dominated else ("right_suboptimal" if sub else "left_dominated")
    return DominanceResult(verdict, classify_cases(btp, tol), competitor, (cost_left, cost_right))


def random_btp(rng: np.random.Generator, radius=3, exact: bool = True, denom: int = 4,
               max_tries: int = 1000) -> BTP:
    """Uniform nodes in ``[-radius, radius]`` sorted into a valid plan.

    Exact mode draws from the grid of multiples of ``1/denom`` so that
    coincident nodes (the degenerate and equality cases) actually occur.
    """
    for _ in range(max_tries):
        if exact:
            raw = [Fraction(int(k), denom) for k in rng.integers(-radius * denom, radius * denom + 1, size=7)]
        else:
            raw = list(rng.uniform(-radius, radius, size=7))
        xm, x, xp = sorted(raw[:3])
        ymm, ymp = sorted(raw[3:5])
        ypm, ypp = sorted(raw[5:7])
        if ymm <= xm <= ymp and ypm <= xp <= ypp:
            return BTP(x, xm, xp, ymm, ymp, ypm, ypp)
    raise BtpError("could not draw a valid plan; widen the radius")
