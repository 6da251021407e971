"""Finite atomic marginal laws, call-price curves and the affine reductions used on them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .scalars import (
    DOUBLE_TOL,
    Scalar,
    all_exact,
    format_scalar,
    is_finite,
    parse_scalar,
    to_mode,
)

MERGE_TOL = 1e-12


class MeasureError(ValueError):
    """Raised for invalid measures or curves."""


class ArbitrageError(MeasureError):
    """Call curve that cannot come from any probability law."""


def _normalize_ints(values) -> tuple:
    # plain ints become Fractions so that int/int division stays exact
    values = tuple(values)
    if all_exact(values):
        return tuple(Fraction(v) for v in values)
    return values


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite probability measure on the line.

    ``atoms`` are strictly increasing, ``weights`` strictly positive and
    summing to one (exactly when every value is rational).
    """

    atoms: tuple
    weights: tuple

    def __post_init__(self):
        atoms, weights = _normalize_ints(self.atoms), _normalize_ints(self.weights)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        if len(atoms) == 0:
            raise MeasureError("measure needs at least one atom")
        if len(atoms) != len(weights):
            raise MeasureError(f"{len(atoms)} atoms but {len(weights)} weights")
        if not all(is_finite(a) for a in atoms) or not all(is_finite(w) for w in weights):
            raise MeasureError("atoms and weights must be finite")
        for a, b in zip(atoms, atoms[1:]):
            if not a < b:
                raise MeasureError(f"atoms must be strictly increasing ({a} !< {b})")
        for w in weights:
            if not w > 0:
                raise MeasureError(f"weights must be positive, got {w}")
        total = sum(weights)
        if self.exact:
            if total != 1:
                raise MeasureError(f"weights sum to {total}, not 1")
        elif abs(total - 1.0) > DOUBLE_TOL:
            raise MeasureError(f"weights sum to {float(total)!r}, not 1")

    # construction -----------------------------------------------------

    @classmethod
    def from_points(cls, atoms: Iterable, weights: Iterable, merge_tol: float = MERGE_TOL,
                    normalize: bool = False) -> "DiscreteMeasure":
        """Sort atoms, drop zero weights and merge coincident atoms.

        In double mode atoms closer than ``merge_tol`` are merged (the
        weighted position is kept); exact atoms merge only when equal.
        """
        pairs = sorted((a, w) for a, w in zip(atoms, weights) if w != 0)
        if any(w < 0 for _, w in pairs):
            raise MeasureError("negative weight")
        exact = all_exact(a for a, _ in pairs) and all_exact(w for _, w in pairs)
        merged: list[list] = []
        for a, w in pairs:
            if merged:
                last = merged[-1]
                close = (a == last[0]) if exact else (abs(a - last[0]) <= merge_tol)
                if close:
                    if not exact and a != last[0]:
                        last[0] = (last[0] * last[1] + a * w) / (last[1] + w)
                    last[1] += w
                    continue
            merged.append([a, w])
        xs = tuple(m[0] for m in merged)
        ws = tuple(m[1] for m in merged)
        if normalize:
            total = sum(ws)
            ws = tuple(w / total for w in ws)
        elif not exact:
            total = sum(ws)
            if abs(total - 1.0) <= DOUBLE_TOL:
                ws = tuple(w / total for w in ws)
        return cls(xs, ws)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls((x,), (Fraction(1) if all_exact([x]) else 1.0,))

    @classmethod
    def uniform(cls, atoms: Sequence) -> "DiscreteMeasure":
        n = len(atoms)
        w = Fraction(1, n) if all_exact(atoms) else 1.0 / n
        return cls.from_points(atoms, [w] * n)

    # properties -------------------------------------------------------

    @property
    def exact(self) -> bool:
        return all_exact(self.atoms) and all_exact(self.weights)

    def __len__(self) -> int:
        return len(self.atoms)

    def items(self):
        return zip(self.atoms, self.weights)

    @property
    def mean(self) -> Scalar:
        return sum(a * w for a, w in self.items())

    def expect(self, f: Callable) -> Scalar:
        return sum(f(a) * w for a, w in self.items())

    def call(self, strike) -> Scalar:
        """``∫ (x - K)_+ dμ``."""
        return sum((a - strike) * w for a, w in self.items() if a > strike)

    def put(self, strike) -> Scalar:
        return sum((strike - a) * w for a, w in self.items() if a < strike)

    def as_exact(self) -> "DiscreteMeasure":
        return DiscreteMeasure.from_points([to_mode(a, True) for a in self.atoms],
                                           [to_mode(w, True) for w in self.weights], normalize=True)

    def as_float(self) -> "DiscreteMeasure":
        return DiscreteMeasure(tuple(float(a) for a in self.atoms), tuple(float(w) for w in self.weights))

    def to_json(self) -> dict:
        return {"atoms": [{"x": format_scalar(a), "p": format_scalar(w)} for a, w in self.items()]}

    @classmethod
    def from_json(cls, obj: dict, exact: bool = True) -> "DiscreteMeasure":
        try:
            raw = obj["atoms"]
        except (KeyError, TypeError) as exc:
            raise MeasureError("measure JSON needs an 'atoms' list") from exc
        if not isinstance(raw, list) or not raw:
            raise MeasureError("'atoms' must be a non-empty list")
        xs, ps = [], []
        for i, item in enumerate(raw):
            if not isinstance(item, dict) or "x" not in item or "p" not in item:
                raise MeasureError(f"atoms[{i}] must be an object with 'x' and 'p'")
            try:
                xs.append(parse_scalar(item["x"], exact))
                ps.append(parse_scalar(item["p"], exact))
            except ValueError as exc:
                raise MeasureError(f"atoms[{i}]: {exc}") from exc
        return cls.from_points(xs, ps)


@dataclass(frozen=True)
class CallCurve:
    """Call prices ``C(K)`` sampled on strictly increasing strikes."""

    strikes: tuple
    prices: tuple

    def __post_init__(self):
        object.__setattr__(self, "strikes", _normalize_ints(self.strikes))
        object.__setattr__(self, "prices", _normalize_ints(self.prices))
        if len(self.strikes) != len(self.prices):
            raise MeasureError("strikes and prices differ in length")
        if len(self.strikes) < 2:
            raise MeasureError("need at least two strikes")
        if not all(map(is_finite, self.strikes + self.prices)):
            raise MeasureError("strikes and prices must be finite")
        for a, b in zip(self.strikes, self.strikes[1:]):
            if not a < b:
                raise MeasureError("strikes must be strictly increasing")

    @property
    def exact(self) -> bool:
        return all_exact(self.strikes) and all_exact(self.prices)

    def slopes(self) -> list:
        k, c = self.strikes, self.prices
        return [(c[i + 1] - c[i]) / (k[i + 1] - k[i]) for i in range(len(k) - 1)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strike", "price"])
        for k, p in zip(self.strikes, self.prices):
            w.writerow([format_scalar(k), format_scalar(p)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, exact: bool = True) -> "CallCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [h.strip().lower() for h in rows[0]] != ["strike", "price"]:
            raise MeasureError("call-curve CSV must start with header 'strike,price'")
        ks, ps = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise MeasureError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                ks.append(parse_scalar(row[0], exact))
                ps.append(parse_scalar(row[1], exact))
            except ValueError as exc:
                raise MeasureError(f"line {lineno}: {exc}") from exc
        return cls(tuple(ks), tuple(ps))


class OrderResult(NamedTuple):
    ordered: bool
    witness: Optional[Scalar]


def _default_tol(exact: bool, tol):
    if tol is not None:
        return tol
    return 0 if exact else DOUBLE_TOL


def call_values(mu: DiscreteMeasure, strikes: Sequence) -> list:
    if mu.exact and all_exact(strikes):
        return [mu.call(k) for k in strikes]
    x = np.asarray(mu.atoms, dtype=float)
    w = np.asarray(mu.weights, dtype=float)
    k = np.asarray(strikes, dtype=float)
    return list((np.maximum(x[None, :] - k[:, None], 0.0) * w[None, :]).sum(axis=1))


def convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure, tol=None) -> OrderResult:
    """Test ``μ ⪯ ν``; on failure return the strike with the largest call violation.

    Potentials of finite measures are piecewise linear with kinks at atoms,
    so checking the union of both atom sets suffices.
    """
    for m in (mu, nu):
        if not isinstance(m, DiscreteMeasure):
            raise MeasureError("convex_order expects DiscreteMeasure inputs")
    exact = mu.exact and nu.exact
    tol = _default_tol(exact, tol)
    strikes = sorted(set(mu.atoms) | set(nu.atoms))
    cm = call_values(mu, strikes)
    cn = call_values(nu, strikes)
    worst, witness = None, None
    for k, a, b in zip(strikes, cm, cn):
        excess = a - b
        if excess > tol and (worst is None or excess > worst):
            worst, witness = excess, k
    if witness is not None:
        return OrderResult(False, witness)
    if abs(mu.mean - nu.mean) > tol:
        # calls pass but the means differ: the put at the top atom is violated
        return OrderResult(False, strikes[-1] if mu.mean < nu.mean else strikes[0])
    return OrderResult(True, None)


def measure_to_calls(mu: DiscreteMeasure, strikes: Sequence) -> CallCurve:
    return CallCurve(tuple(strikes), tuple(call_values(mu, strikes)))


def padded_strikes(mu: DiscreteMeasure, pad=1) -> list:
    """All atoms plus one strike beyond each end; enough to invert exactly."""
    return [mu.atoms[0] - pad, *mu.atoms, mu.atoms[-1] + pad]


def calls_to_measure(curve: CallCurve, tol=None) -> DiscreteMeasure:
    """Discrete Breeden-Litzenberger inversion.

    Each interior strike receives the jump of the slope there. The curve must
    have slope -1 on its first and 0 on its last segment so that the whole
    mass lies strictly inside the sampled strike range.
    """
    exact = curve.exact
    tol = _default_tol(exact, tol)
    k, c = curve.strikes, curve.prices
    if any(p < -tol for p in c):
        raise ArbitrageError("not arbitrage-free curve: negative price")
    s = curve.slopes()
    for i, si in enumerate(s):
        if si > tol:
            raise ArbitrageError(f"not arbitrage-free curve: price increases between strikes {k[i]} and {k[i + 1]}")
        if si < -1 - tol:
            raise ArbitrageError(f"not arbitrage-free curve: slope below -1 between strikes {k[i]} and {k[i + 1]}")
    for i in range(1, len(s)):
        if s[i] - s[i - 1] < -tol:
            raise ArbitrageError(f"not arbitrage-free curve: convexity violated at strike {k[i]}")
    if abs(s[0] + 1) > tol or abs(s[-1]) > tol or abs(c[-1]) > tol:
        raise MeasureError("curve does not capture the full mass: first slope must be -1 and "
                           "the last segment flat at zero; widen the strike range")
    forward = c[0] + k[0]
    for ki, ci in zip(k, c):
        if ci < max(forward - ki, 0) - tol:
            raise ArbitrageError(f"not arbitrage-free curve: price below intrinsic value at strike {ki}")
    atoms, weights = [], []
    for i in range(1, len(k) - 1):
        mass = s[i] - s[i - 1]
        if (mass != 0) if exact else (mass > tol):
            atoms.append(k[i])
            weights.append(mass)
    if not exact:
        total = sum(weights)
        weights = [w / total for w in weights]
    return DiscreteMeasure.from_points(atoms, weights)


def affine_pushforward(mu: DiscreteMeasure, a, b) -> DiscreteMeasure:
    """Image of ``μ`` under ``x ↦ a·x + b``."""
    if a == 0:
        raise MeasureError("affine map with a = 0 is not injective")
    return DiscreteMeasure.from_points([a * x + b for x in mu.atoms], list(mu.weights))


class AbsReduction(NamedTuple):
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    linear_offset: Scalar


def reduce_to_abs(mu: DiscreteMeasure, nu: DiscreteMeasure, strike) -> AbsReduction:
    """Rewrite the averaged call ``((x+y)/2 - K)_+`` as an ``|x̃+ỹ|`` problem.

    With ``x̃ = (x-K)/2`` and ``ỹ = (y-K)/2`` one has, pointwise,
    ``((x+y)/2 - K)_+ = ½|x̃+ỹ| + (x+y)/4 - K/2``; integrated against any
    martingale coupling the affine part equals ``(m_μ + m_ν)/4 - K/2``.
    """
    half = Fraction(1, 2) if mu.exact and nu.exact and all_exact([strike]) else 0.5
    shift = -strike * half
    mt = affine_pushforward(mu, half, shift)
    nt = affine_pushforward(nu, half, shift)
    offset = (mu.mean + nu.mean) * half * half - strike * half
    return AbsReduction(mt, nt, offset)


def moment(mu: DiscreteMeasure, k: int) -> Scalar:
    """Absolute moment ``∫ |x|^k dμ``."""
    if k < 0:
        raise MeasureError("moment order must be non-negative")
    return sum(abs(a) ** k * w for a, w in mu.items())


def quantize_uniform(pieces: Sequence[tuple], cells: int, exact: bool = False) -> DiscreteMeasure:
    """Midpoint quantization of a piecewise-uniform law.

    ``pieces`` are ``(left, right, density)`` triples; the total length is
    split into ``cells`` equal cells and each cell's mass is placed at its
    midpoint (which is also the cell's conditional mean, so means are
    preserved exactly).
    """
    if cells < 1:
        raise MeasureError("need at least one cell")
    conv = (lambda v: Fraction(v)) if exact else float
    pieces = [(conv(a), conv(b), conv(d)) for a, b, d in pieces]
    length = sum(b - a for a, b, _ in pieces)
    h = length / cells
    atoms, weights = [], []
    for a, b, d in pieces:
        n = (b - a) / h
        n_int = round(n)
        if abs(n - n_int) > 1e-9:
            raise MeasureError("cell width does not divide every piece; choose another cell count")
        for i in range(int(n_int)):
            atoms.append(a + (2 * i + 1) * h / 2)
            weights.append(d * h)
    total = sum(weights)
    if exact:
        if total != 1:
            raise MeasureError(f"densities integrate to {total}, not 1")
    else:
        if abs(total - 1) > 1e-9:
            raise MeasureError(f"densities integrate to {total}, not 1")
        weights = [w / total for w in weights]
    return DiscreteMeasure.from_points(atoms, weights)


def grid_spacing(mu: DiscreteMeasure):
    """Largest gap between consecutive atoms (0 for a point mass)."""
    if len(mu) < 2:
        return 0
    return max(b - a for a, b in zip(mu.atoms, mu.atoms[1:]))


def isclose_measures(a: DiscreteMeasure, b: DiscreteMeasure, tol: float = 1e-12) -> bool:
    if len(a) != len(b):
        return False
    return all(math.isclose(float(x), float(y), abs_tol=tol) for x, y in zip(a.atoms, b.atoms)) and all(
        math.isclose(float(x), float(y), abs_tol=tol) for x, y in zip(a.weights, b.weights))
