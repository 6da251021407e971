"""Payoff functions: convex piecewise-linear profiles and path cost specifications."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .scalars import DOUBLE_TOL, all_exact, is_finite, parse_scalar


class PayoffError(ValueError):
    pass


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function through ``breakpoints``.

    Outside the first and last breakpoints the end segments are extended
    linearly.  Derivatives use the left derivative at kinks.
    """

    xs: tuple
    values: tuple

    def __post_init__(self):
        xs, vs = tuple(self.xs), tuple(self.values)
        if all_exact(xs + vs):
            xs = tuple(Fraction(v) for v in xs)
            vs = tuple(Fraction(v) for v in vs)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)
        if len(xs) < 2 or len(xs) != len(vs):
            raise PayoffError("need at least two breakpoints with matching values")
        if not all(map(is_finite, xs + vs)):
            raise PayoffError("breakpoints must be finite")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise PayoffError("breakpoints must be strictly increasing")

    @classmethod
    def from_breakpoints(cls, points: Sequence[Sequence], exact: bool = True) -> "PiecewiseLinear":
        try:
            xs = [parse_scalar(p[0], exact) for p in points]
            vs = [parse_scalar(p[1], exact) for p in points]
        except (TypeError, IndexError, ValueError) as exc:
            raise PayoffError(f"bad breakpoints: {exc}") from exc
        return cls(tuple(xs), tuple(vs))

    @classmethod
    def call(cls, strike) -> "PiecewiseLinear":
        """``x ↦ (x - K)_+``."""
        return cls((strike - 1, strike, strike + 1), (0, 0, 1))

    @classmethod
    def straddle(cls, center) -> "PiecewiseLinear":
        """``x ↦ |x - a|``."""
        return cls((center - 1, center, center + 1), (1, 0, 1))

    @property
    def exact(self) -> bool:
        return all_exact(self.xs + self.values)

    @property
    def slopes(self) -> tuple:
        return tuple((self.values[i + 1] - self.values[i]) / (self.xs[i + 1] - self.xs[i])
                     for i in range(len(self.xs) - 1))

    def is_convex(self, tol=None) -> bool:
        if tol is None:
            tol = 0 if self.exact else DOUBLE_TOL
        s = self.slopes
        return all(b - a >= -tol for a, b in zip(s, s[1:]))

    def require_convex(self) -> "PiecewiseLinear":
        if not self.is_convex():
            raise PayoffError("payoff profile is not convex (slopes must be nondecreasing)")
        return self

    def _segment(self, x) -> int:
        # segment i covers (xs[i], xs[i+1]]; clamp to the end segments
        i = bisect.bisect_left(self.xs, x) - 1
        return min(max(i, 0), len(self.xs) - 2)

    def __call__(self, x):
        i = self._segment(x)
        x0, x1 = self.xs[i], self.xs[i + 1]
        v0, v1 = self.values[i], self.values[i + 1]
        return v0 + (v1 - v0) * (x - x0) / (x1 - x0)

    def left_derivative(self, x):
        return self.slopes[self._segment(x)]

    def to_json(self) -> list:
        from .scalars import format_scalar

        return [[format_scalar(x), format_scalar(v)] for x, v in zip(self.xs, self.values)]


COST_KINDS = ("abs_sum", "call_on_sum", "straddle", "convex_of_weighted_avg", "custom_table")


@dataclass(frozen=True)
class CostSpec:
    """Payoff of a path ``(x_1, ..., x_n)``.

    ``abs_sum``: ``|x+y|``; ``call_on_sum``: ``(x+y-K)_+``; ``straddle``:
    ``|x-y|``; ``convex_of_weighted_avg``: ``φ(Σ w_i x_i)``;
    ``custom_table``: explicit values keyed by path.
    """

    kind: str
    strike: object = None
    weights: Optional[tuple] = None
    phi: Optional[PiecewiseLinear] = None
    table: Optional[Mapping] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise PayoffError(f"unknown payoff kind {self.kind!r}; expected one of {', '.join(COST_KINDS)}")
        if self.kind == "call_on_sum" and self.strike is None:
            raise PayoffError("call_on_sum needs a strike")
        if self.kind == "convex_of_weighted_avg":
            if self.weights is None or self.phi is None:
                raise PayoffError("convex_of_weighted_avg needs weights and breakpoints")
            object.__setattr__(self, "weights", tuple(self.weights))
            self.phi.require_convex()
        if self.kind == "custom_table" and self.table is None:
            raise PayoffError("custom_table needs a table")

    @classmethod
    def abs_sum(cls) -> "CostSpec":
        return cls("abs_sum")

    @classmethod
    def call_on_sum(cls, strike) -> "CostSpec":
        return cls("call_on_sum", strike=strike)

    @classmethod
    def weighted_average(cls, weights: Sequence, phi: PiecewiseLinear) -> "CostSpec":
        return cls("convex_of_weighted_avg", weights=tuple(weights), phi=phi)

    @property
    def arity(self) -> Optional[int]:
        if self.kind == "convex_of_weighted_avg":
            return len(self.weights)
        if self.kind == "custom_table":
            return len(next(iter(self.table)))
        return 2

    def __call__(self, *path):
        if self.kind == "abs_sum":
            return abs(path[0] + path[1])
        if self.kind == "call_on_sum":
            s = path[0] + path[1] - self.strike
            return s if s > 0 else s * 0
        if self.kind == "straddle":
            return abs(path[0] - path[1])
        if self.kind == "convex_of_weighted_avg":
            return self.phi(sum(w * x for w, x in zip(self.weights, path)))
        try:
            return self.table[tuple(path)]
        except KeyError:
            raise PayoffError(f"custom table has no value for path {tuple(path)}") from None

    @classmethod
    def from_json(cls, obj: Mapping, exact: bool = True) -> "CostSpec":
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise PayoffError("payoff must be an object with a 'kind' field")
        kind = obj["kind"]
        try:
            if kind == "call_on_sum":
                if "strike" not in obj:
                    raise PayoffError("payoff.strike is required for call_on_sum")
                return cls.call_on_sum(parse_scalar(obj["strike"], exact))
            if kind == "convex_of_weighted_avg":
                if "weights" not in obj or "breakpoints" not in obj:
                    raise PayoffError("payoff.weights and payoff.breakpoints are required")
                phi = PiecewiseLinear.from_breakpoints(obj["breakpoints"], exact)
                return cls.weighted_average([parse_scalar(w, exact) for w in obj["weights"]], phi)
            if kind == "custom_table":
                rows = obj.get("table")
                if not isinstance(rows, list) or not rows:
                    raise PayoffError("payoff.table must be a non-empty list of [x1, ..., xn, value] rows")
                table = {}
                for row in rows:
                    vals = [parse_scalar(v, exact) for v in row]
                    table[tuple(vals[:-1])] = vals[-1]
                return cls("custom_table", table=table)
        except ValueError as exc:
            if isinstance(exc, PayoffError):
                raise
            raise PayoffError(f"payoff: {exc}") from exc
        return cls(kind)

    def to_json(self) -> dict:
        from .scalars import format_scalar

        out = {"kind": self.kind}
        if self.strike is not None:
            out["strike"] = format_scalar(self.strike)
        if self.weights is not None:
            out["weights"] = [format_scalar(w) for w in self.weights]
        if self.phi is not None:
            out["breakpoints"] = self.phi.to_json()
        return out
