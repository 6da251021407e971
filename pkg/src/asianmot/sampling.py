"""Seeded generators for random marginals in convex order."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np

from .measures import DiscreteMeasure


def random_weights(rng: np.random.Generator, k: int, exact: bool, resolution: int = 20) -> list:
    raw = rng.integers(1, resolution + 1, size=k)
    total = int(raw.sum())
    if exact:
        return [Fraction(int(r), total) for r in raw]
    return list(raw / total)


def spread(mu: DiscreteMeasure, rng: np.random.Generator, grid_step, lo, hi, stay_prob: float = 0.0,
           exact: Optional[bool] = None) -> DiscreteMeasure:
    """A measure dominating ``μ`` in convex order.

    Each atom ``x`` keeps its mass with probability ``stay_prob``; otherwise
    it is split onto grid points ``a < x < b`` (multiples of ``grid_step``
    inside ``[lo, hi]``) with the barycenter kept at ``x``.
    """
    if exact is None:
        exact = mu.exact
    n_lo = int(np.ceil(lo / grid_step))
    n_hi = int(np.floor(hi / grid_step))
    atoms, weights = [], []
    for x, w in mu.items():
        below = [k for k in range(n_lo, n_hi + 1) if k * grid_step < x]
        above = [k for k in range(n_lo, n_hi + 1) if k * grid_step > x]
        if rng.random() < stay_prob or not below or not above:
            atoms.append(x)
            weights.append(w)
            continue
        a = below[-1 - int(rng.integers(0, min(len(below), 6)))] * grid_step
        b = above[int(rng.integers(0, min(len(above), 6)))] * grid_step
        pa = (b - x) / (b - a)
        atoms += [a, b]
        weights += [w * pa, w * (1 - pa)]
    return DiscreteMeasure.from_points(atoms, weights)


def random_pair(rng: np.random.Generator, n_mu: int, exact: bool = True, denom: int = 8, span: int = 4,
                positive: bool = False, stay_prob: float = 0.2):
    """``(μ, ν)`` with ``μ ⪯ ν``: ``μ`` on a rational grid, ``ν`` by mean-preserving splits."""
    step = Fraction(1, denom) if exact else 1.0 / denom
    if positive:
        pool = np.arange(1, span * denom + 1)
    else:
        pool = np.arange(-span * denom, span * denom + 1)
    n_mu = min(n_mu, len(pool))
    ks = sorted(rng.choice(pool, size=n_mu, replace=False))
    atoms = [int(k) * step for k in ks]
    mu = DiscreteMeasure.from_points(atoms, random_weights(rng, n_mu, exact))
    nu = spread(mu, rng, step, -2 * span, 2 * span, stay_prob, exact)
    return mu, nu


def random_measure(rng: np.random.Generator, k: int, exact: bool = True, denom: int = 4, span: int = 4):
    pool = np.arange(-span * denom, span * denom + 1)
    k = min(k, len(pool))
    ks = sorted(rng.choice(pool, size=k, replace=False))
    step = Fraction(1, denom) if exact else 1.0 / denom
    return DiscreteMeasure.from_points([int(v) * step for v in ks], random_weights(rng, k, exact))


def smooth_pair(rng: np.random.Generator, kind: str = "conv", n_atoms: int = 40, step: float = 1 / 16):
    """Positive ``μ`` with a smooth density on consecutive grid points and a spread-out ``ν``.

    ``conv`` smears every atom uniformly over ``±s`` grid steps (one ``s``
    for all atoms); ``dil`` lets the half-width vary smoothly with ``x``.
    Both keep ``ν`` on the same grid, so ``h = step`` is the resolution.
    """
    if kind not in ("conv", "dil"):
        raise ValueError("kind must be 'conv' or 'dil'")
    k0 = int(rng.integers(1, 25))
    t = np.linspace(0, 1, n_atoms)
    dens = np.ones(n_atoms)
    for _ in range(3):
        dens += rng.uniform(0, 2) * np.exp(-((t - rng.uniform()) / rng.uniform(0.1, 0.4)) ** 2)
    mu = DiscreteMeasure.from_points([(k0 + i) * step for i in range(n_atoms)], list(dens / dens.sum()))
    if kind == "conv":
        s = int(rng.integers(4, 40))

        def width(x):
            return s
    else:
        a, c, ph = rng.uniform(0.5, 3), rng.uniform(0, 4), rng.uniform(0, 6)

        def width(x):
            return max(1, int(a * (1 + np.sin(c * x + ph)) * 8))
    atoms, weights = [], []
    for x, p in mu.items():
        s = width(x)
        for k in range(-s, s + 1):
            atoms.append(x + k * step)
            weights.append(p / (2 * s + 1))
    return mu, DiscreteMeasure.from_points(atoms, weights)
