"""Continuous-averaging Asian options: one- and two-marginal bounds, hedges and fixtures."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .measures import DiscreteMeasure
from .mot import Coupling, coupling_violations, solve_mot, solve_mot_multi
from .payoffs import CostSpec, PayoffError, PiecewiseLinear
from .scalars import DOUBLE_TOL, all_exact, format_scalar


class AsianError(ValueError):
    pass


# ---------------------------------------------------------------------------
# one prescribed marginal


def one_marginal_bounds(nu: DiscreteMeasure, phi: PiecewiseLinear) -> tuple:
    """Sharp ``(lower, upper)`` price of ``φ(average)`` when only the terminal law is known.

    Lower: stay at the forward and jump at the very end.  Upper: jump to the
    terminal law immediately and stay there.
    """
    phi.require_convex()
    return phi(nu.mean), nu.expect(phi)


def one_marginal_lp(nu: DiscreteMeasure, phi: PiecewiseLinear, steps: int = 5, exact: Optional[bool] = None) -> tuple:
    """LP cross-check of :func:`one_marginal_bounds` over discrete-time martingales.

    The chain starts at the forward, passes through ``steps - 1`` free
    coordinates on the grid ``atoms(ν) ∪ {mean}`` and ends in ``ν``.  The
    average weighs only the free coordinates: the start and the end are
    single instants that the continuous average does not see, which is
    what lets the extremal models jump at ``0+`` and at ``T-``.
    """
    if steps < 2:
        raise AsianError("need at least two steps")
    m = nu.mean
    start = DiscreteMeasure.dirac(m)
    grid = sorted(set(nu.atoms) | {m})
    free = steps - 1
    w = Fraction(1, free) if nu.exact else 1.0 / free
    weights = (0,) + (w,) * free + (0,)
    payoff = CostSpec.weighted_average(weights, phi)
    marginals = [start] + [None] * free + [nu]
    grids = [None] + [grid] * free + [None]
    lo = solve_mot_multi(marginals, payoff, "min", grids=grids, exact=exact)
    hi = solve_mot_multi(marginals, payoff, "max", grids=grids, exact=exact)
    return lo.value, hi.value


@dataclass(frozen=True)
class DiscretePath:
    """Piecewise constant, right-continuous path: ``values[k]`` holds on ``[times[k], times[k+1])``.

    ``values[-1]`` is the terminal value at ``times[-1] = T``.
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times, values = tuple(self.times), tuple(self.values)
        if all_exact(times + values):
            times = tuple(Fraction(t) for t in times)
            values = tuple(Fraction(v) for v in values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if len(times) < 2 or len(times) != len(values):
            raise AsianError("a path needs at least two grid times with one value each")
        if any(not b > a for a, b in zip(times, times[1:])):
            raise AsianError("path times must be strictly increasing")
        if not all(np.isfinite(float(v)) for v in times + values):
            raise AsianError("path values must be finite")

    @property
    def horizon(self):
        return self.times[-1] - self.times[0]

    def average(self):
        """``(1/T)∫ X_t dt``, exact for the step path."""
        total = sum(v * (b - a) for v, a, b in zip(self.values, self.times, self.times[1:]))
        return total / self.horizon

    @classmethod
    def from_rows(cls, rows: Sequence) -> "DiscretePath":
        rows = sorted(rows, key=lambda r: r[0])
        return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows))


@dataclass(frozen=True)
class HedgePlan:
    """Static claim ``φ(X_T)`` plus holdings ``H`` at each grid time (``H[0] = 0``)."""

    static_payoff: PiecewiseLinear
    trading_integrand: tuple
    path: DiscretePath = field(repr=False)

    def gains(self):
        """Trading gains; ``H[k]`` is held through the move into ``values[k]``."""
        v = self.path.values
        return sum(h * (b - a) for h, a, b in zip(self.trading_integrand[1:], v, v[1:]))

    def value(self):
        return self.static_payoff(self.path.values[-1]) - self.gains()


def superhedge_plan(phi: PiecewiseLinear, path: DiscretePath) -> tuple:
    """Pathwise superhedge of ``φ(average)`` and its slack on ``path``.

    ``H_t = (1/T)∫_0^t φ'(X_s) ds`` with the left derivative at kinks.  The
    slack ``φ(X_T) - gains - φ(average)`` is nonnegative for every path.
    """
    phi.require_convex()
    horizon = path.horizon
    h = [path.values[0] * 0]
    acc = h[0]
    for v, a, b in zip(path.values, path.times, path.times[1:]):
        acc = acc + phi.left_derivative(v) * (b - a) / horizon
        h.append(acc)
    plan = HedgePlan(phi, tuple(h), path)
    return plan, plan.value() - phi(path.average())


def random_path(rng: np.random.Generator, steps: int = 8, horizon: float = 1.0, scale: float = 2.0) -> DiscretePath:
    cuts = np.sort(rng.uniform(0, horizon, size=steps - 1))
    times = np.concatenate([[0.0], cuts, [horizon]])
    times = np.unique(times)
    values = rng.normal(0, scale, size=len(times))
    return DiscretePath(tuple(times), tuple(values))


# ---------------------------------------------------------------------------
# jump model approximation


@dataclass(frozen=True)
class JumpModel:
    """Discrete path law: ``X`` until ``t1 - 1/n``, a bridge value until ``t1``, then ``Y``.

    ``law`` is a coupling of ``(X, B, Y)`` and ``times`` the grid
    ``(0, t1 - 1/n, t1, T)``.
    """

    times: tuple
    law: Coupling

    def path_average(self, x, b, y):
        t0, t_bridge, t1, horizon = self.times
        return (x * (t_bridge - t0) + b * (t1 - t_bridge) + y * (horizon - t1)) / (horizon - t0)

    def expect_average(self, phi):
        return self.law.expect(lambda x, b, y: phi(self.path_average(x, b, y)))


def approx_jump_model(law_xy: Coupling, t1, horizon, n: int, tol=None) -> tuple:
    """Replace the jump at ``t1`` by a short martingale bridge of length ``1/n``.

    Given ``X``, a fair coin decides whether the bridge value is ``X``
    (the jump happens at ``t1``) or ``Y`` (it happens at ``t1 - 1/n``);
    both branches keep the martingale property.  Returns the model and the
    exact L¹ distance between its path average and
    ``(t1 X + (T - t1) Y)/T``, which equals ``E|Y - X|/(2nT)``.
    """
    if n < 1:
        raise AsianError("n must be a positive integer")
    exact = all_exact(law_xy.masses) and all(all_exact(p) for p in law_xy.points) and all_exact((t1, horizon))
    one = Fraction(1) if exact else 1.0
    if exact:
        t1, horizon = Fraction(t1), Fraction(horizon)
    t_bridge = t1 - one / n
    if not t_bridge > 0:
        raise AsianError(f"bridge start t1 - 1/n = {t_bridge} must be positive; increase n")
    if not t1 < horizon:
        raise AsianError("need t1 < T")
    if law_xy.dim != 2:
        raise AsianError("the jump law must be a two-step coupling")
    if coupling_violations(law_xy, tol=None if exact else DOUBLE_TOL):
        raise AsianError("the jump law is not a martingale coupling")
    half = one / 2
    acc: dict = {}
    for (x, y), m in zip(law_xy.points, law_xy.masses):
        for b in (x, y):
            acc[(x, b, y)] = acc.get((x, b, y), 0) + m * half
    pts = sorted(acc)
    model = JumpModel((0 * one, t_bridge, t1, horizon), Coupling(tuple(pts), tuple(acc[p] for p in pts)))

    def target(x, y):
        return (t1 * x + (horizon - t1) * y) / horizon

    gap = model.law.expect(lambda x, b, y: abs(model.path_average(x, b, y) - target(x, y)))
    bound = law_xy.expect(lambda x, y: abs(y)) / (n * horizon)
    slack = 0 if exact else DOUBLE_TOL if tol is None else tol
    if gap > bound + slack:
        raise AsianError(f"L1 gap {gap} exceeds the bound {bound}")
    return model, gap


# ---------------------------------------------------------------------------
# two prescribed marginals


@dataclass(frozen=True)
class CounterexampleReport:
    price_candidate: Fraction
    price_constancy: Fraction
    strictly_smaller: bool
    normalized_candidate: Fraction
    normalized_constancy: Fraction
    law: Coupling
    z_marginal_ok: bool
    y_marginal_ok: bool
    martingale_ok: bool
    start_mean_ok: bool

    def to_json(self) -> dict:
        return {
            "price_candidate": format_scalar(self.price_candidate),
            "price_constancy": format_scalar(self.price_constancy),
            "strictly_smaller": self.strictly_smaller,
            "normalized_candidate": format_scalar(self.normalized_candidate),
            "normalized_constancy": format_scalar(self.normalized_constancy),
            "z_marginal_matches": self.z_marginal_ok,
            "y_marginal_matches": self.y_marginal_ok,
            "martingale": self.martingale_ok,
            "starts_at_forward": self.start_mean_ok,
            "law": self.law.to_rows(),
            "note": "the payoff argument is the unnormalized integral over [0, 2]; "
                    "Y holds on (0, 1) and its law differs from the prescribed one",
        }


COUNTEREXAMPLE_MARGINAL = DiscreteMeasure((-2, -1, 1, 2), tuple(Fraction(1, 4) for _ in range(4)))


def counterexample_4128() -> CounterexampleReport:
    """A path law beating the stay-constant minimizer candidate for ``φ = |·|``.

    Both prescribed marginals are uniform on ``{-2, -1, 1, 2}``.  The path
    starts at 0, holds ``Y`` on ``(0, 1)`` and ``Z`` on ``[1, 2]``.
    """
    q, f, s = Fraction(1, 4), Fraction(5, 28), Fraction(1, 14)
    pts = [((q, -1), q), ((-q, 1), q), ((q, 2), f), ((-q, -2), f), ((0, 2), s), ((0, -2), s)]
    law = Coupling(tuple((Fraction(a), Fraction(b)) for (a, b), _ in pts), tuple(m for _, m in pts))
    mu = COUNTEREXAMPLE_MARGINAL
    z_ok = law.marginal(1) == dict(mu.items())
    y_ok = law.marginal(0) == dict(mu.items())
    mart_ok = not coupling_violations(law)
    start_ok = law.expect(lambda y, z: y) == 0
    # unit-length pieces: the integral over [0, 2] is Y + Z
    candidate = law.expect(lambda y, z: abs(y + z))
    constancy = mu.expect(abs)
    return CounterexampleReport(candidate, constancy, candidate < constancy, candidate / 2, constancy / 2,
                                law, z_ok, y_ok, mart_ok, start_ok)


def _scaled_phi(phi: PiecewiseLinear, t1, horizon):
    w1 = t1 / horizon
    return CostSpec.weighted_average((w1, 1 - w1), phi)


def two_marginal_candidate_bounds(mu1: DiscreteMeasure, mu2: DiscreteMeasure, t1, horizon,
                                  phi: PiecewiseLinear) -> tuple:
    """Upper candidate from the initial-jump model plus a note on the lower side.

    The upper candidate maximizes ``E φ((t1 X + (T - t1) Y)/T)`` over
    martingale couplings.  The stay-constant minimum is only a heuristic
    (the counterexample beats it); the valid floor is ``φ(mean)``.
    """
    phi.require_convex()
    exact = mu1.exact and mu2.exact and all_exact((t1, horizon))
    if exact:
        t1, horizon = Fraction(t1), Fraction(horizon)
    else:
        t1, horizon = float(t1), float(horizon)
    cost = _scaled_phi(phi, t1, horizon)
    best = solve_mot(mu1, mu2, cost, "max")
    note = {
        "valid_lower_bound": False,
        "heuristic_min": stay_constant_value(mu1, phi, t1, horizon),
        "jensen_floor": phi(mu1.mean),
        "reason": "the stay-constant scheme is beaten by counterexample_4128 (41/28 < 3/2)",
    }
    return best.value, note


def stay_constant_value(mu1: DiscreteMeasure, phi: PiecewiseLinear, t1, horizon):
    """Price of holding the forward on ``[0, t1)`` and ``X_{t1}`` on ``[t1, T)``."""
    m = mu1.mean
    w = t1 / horizon
    return mu1.expect(lambda x: phi(w * m + (1 - w) * x))


# ---------------------------------------------------------------------------
# three-step models and the domination harness


@dataclass(frozen=True)
class ThreeStepModel:
    """Law of ``(X_t, X_1, X_2)`` with ``X_1 ~ μ`` and ``X_2 ~ ν``."""

    support: tuple  # (x_t, x_1, x_2, mass)
    times: tuple = (Fraction(1, 2), 1, 2)

    def coupling(self) -> Coupling:
        return Coupling(tuple(r[:3] for r in self.support), tuple(r[3] for r in self.support))

    def expect(self, f):
        return sum(f(a, b, c) * m for a, b, c, m in self.support)

    def violations(self, mu: Optional[DiscreteMeasure] = None, nu: Optional[DiscreteMeasure] = None) -> list:
        margs = None if mu is None else [None, mu, nu]
        return coupling_violations(self.coupling(), margs)


def _random_roots(rng: np.random.Generator, mu: DiscreteMeasure, merges: int) -> list:
    """``(root, atom, mass)`` triples whose conditional means reproduce the roots.

    Starts from ``X_t = X_1`` and repeatedly merges slices of two atoms into
    a common root at their barycenter.
    """
    exact = mu.exact
    rem = dict(mu.items())
    out = []
    atoms = list(mu.atoms)
    for _ in range(merges):
        live = [a for a in atoms if rem[a] > 0]
        if len(live) < 2:
            break
        i, j = sorted(rng.choice(len(live), size=2, replace=False))
        a, b = live[i], live[j]
        if exact:
            fa = Fraction(int(rng.integers(1, 5)), 4)
            fb = Fraction(int(rng.integers(1, 5)), 4)
        else:
            fa, fb = rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)
        ma, mb = rem[a] * fa, rem[b] * fb
        root = (a * ma + b * mb) / (ma + mb)
        out += [(root, a, ma), (root, b, mb)]
        rem[a] -= ma
        rem[b] -= mb
    out += [(a, a, m) for a, m in rem.items() if m > 0]
    return out


def random_forward_coupling(rng: np.random.Generator, mu: DiscreteMeasure, nu: DiscreteMeasure) -> Coupling:
    """A vertex of the martingale transport polytope picked by a random linear cost."""
    exact = mu.exact and nu.exact
    table = {}
    for x in mu.atoms:
        for y in nu.atoms:
            r = rng.integers(-20, 21)
            table[(x, y)] = Fraction(int(r)) if exact else float(r)
    return solve_mot(mu, nu, CostSpec("custom_table", table=table), "max").coupling


def random_three_step_model(rng: np.random.Generator, mu: DiscreteMeasure, nu: DiscreteMeasure,
                            t=None, merges: Optional[int] = None) -> ThreeStepModel:
    if merges is None:
        merges = int(rng.integers(0, len(mu) + 1))
    roots = _random_roots(rng, mu, merges)
    fwd = random_forward_coupling(rng, mu, nu)
    cond: dict = {}
    for (x1, x2), m in zip(fwd.points, fwd.masses):
        cond.setdefault(x1, []).append((x2, m))
    weight = dict(mu.items())
    acc: dict = {}
    for r, x1, m in roots:
        for x2, m2 in cond[x1]:
            key = (r, x1, x2)
            acc[key] = acc.get(key, 0) + m * m2 / weight[x1]
    if t is None:
        t = Fraction(int(rng.integers(0, 5)), 4) if mu.exact else float(rng.uniform(0, 1))
    support = tuple((*k, v) for k, v in sorted(acc.items()) if v > 0)
    return ThreeStepModel(support, (t, 1, 2))


@dataclass(frozen=True)
class HarnessReport:
    bound: object
    trials: int
    min_slack: object
    violations: tuple
    mode: str

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "bound": format_scalar(self.bound),
            "trials": self.trials,
            "min_slack": format_scalar(self.min_slack),
            "violations": [
                {"slack": format_scalar(s), "model": [[format_scalar(v) for v in row] for row in m.support]}
                for s, m in self.violations
            ],
        }


def conjecture_harness(mu: DiscreteMeasure, nu: DiscreteMeasure, strike, trials: int, seed: int,
                       phi: Optional[PiecewiseLinear] = None, t1=1, horizon=2, tol: float = 1e-9) -> HarnessReport:
    """Search for three-step models beating the optimal two-step price.

    With ``phi`` unset the payoff is ``(x + y - K)_+`` at weights ``(1, 1)``
    (a proved domination result, so any violation is a bug).  With a convex
    ``phi`` the payoff is ``φ(t1 x + (T - t1) y)`` and violations are
    findings about an open question.
    """
    rng = np.random.default_rng(seed)
    if phi is None:
        mode = "call"
        cost = CostSpec.call_on_sum(strike)

        def payoff(a, c):
            return cost(a, c)
    else:
        phi.require_convex()
        mode = "convex"
        cost = CostSpec.weighted_average((t1, horizon - t1), phi)

        def payoff(a, c):
            return cost(a, c)
    bound = solve_mot(mu, nu, cost, "max").value
    exact = mu.exact and nu.exact
    min_slack = None
    bad = []
    for _ in range(trials):
        model = random_three_step_model(rng, mu, nu)
        price = model.expect(lambda a, b, c: payoff(a, c))
        slack = bound - price
        if min_slack is None or slack < min_slack:
            min_slack = slack
        if slack < (0 if exact else -tol):
            bad.append((slack, model))
    return HarnessReport(bound, trials, min_slack, tuple(bad), mode)
