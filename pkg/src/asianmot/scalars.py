"""Scalar handling shared by every module.

Two arithmetic modes coexist: exact (``fractions.Fraction``) and double
(``float``).  A value set is exact when every member is an ``int`` or a
``Fraction``; a single float anywhere demotes the computation to double mode.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

Scalar = Union[Fraction, float]

DOUBLE_TOL = 1e-9


def is_exact_value(v) -> bool:
    return isinstance(v, Rational) and not isinstance(v, bool)


def all_exact(values: Iterable) -> bool:
    return all(is_exact_value(v) for v in values)


def parse_scalar(raw, exact: bool = True) -> Scalar:
    """Parse a JSON-ish scalar: number, ``"num/den"`` string or decimal string."""
    if isinstance(raw, bool):
        raise ValueError(f"boolean is not a number: {raw!r}")
    if isinstance(raw, str):
        text = raw.strip()
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number {raw!r}") from exc
        return value if exact else float(value)
    if isinstance(raw, Rational):
        return Fraction(raw) if exact else float(raw)
    if isinstance(raw, float):
        if not math.isfinite(raw):
            raise ValueError(f"non-finite number {raw!r}")
        # repr gives the shortest decimal that round-trips, so 0.1 -> 1/10
        return Fraction(repr(raw)) if exact else raw
    raise ValueError(f"cannot parse number {raw!r}")


def to_mode(v, exact: bool) -> Scalar:
    if exact:
        if isinstance(v, float):
            return Fraction(repr(v))
        return Fraction(v)
    return float(v)


def format_scalar(v) -> Union[str, float, int]:
    """JSON encoding: rationals as ``"num/den"`` strings, floats as numbers."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    return float(v)


def is_finite(v) -> bool:
    if is_exact_value(v):
        return True
    try:
        return math.isfinite(v)
    except TypeError:
        return False
