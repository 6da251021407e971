"""Robust price bounds for Asian-style options via discrete martingale optimal transport."""

from .measures import (
    CallCurve,
    DiscreteMeasure,
    affine_pushforward,
    calls_to_measure,
    convex_order,
    moment,
    reduce_to_abs,
)

__all__ = [
    "CallCurve",
    "DiscreteMeasure",
    "affine_pushforward",
    "calls_to_measure",
    "convex_order",
    "moment",
    "reduce_to_abs",
]

__version__ = "0.1.0"
