from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asianmot.lp_core import (
    INFEASIBLE,
    UNBOUNDED,
    LinearProgram,
    LpError,
    TooManyVariables,
    enumerate_vertices,
    enumerate_vertices_bruteforce,
    solve,
    solve_lexicographic,
)

HALF = F(1, 2)


def transport_lp():
    return LinearProgram.dense([1, 0, 0, 1], [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]],
                               [HALF] * 4, ["=="] * 4)


def test_single_bound():
    sol = solve(LinearProgram.dense([1], [[1]], [1], ["<="]))
    assert sol.optimal and sol.value == 1 and sol.primal == (1,)


@pytest.mark.parametrize("exact", [True, False])
def test_transport_diagonal(exact):
    lp = transport_lp()
    sol = solve(lp, exact=exact)
    assert sol.value == 1
    assert list(sol.primal) == [HALF, 0, 0, HALF]
    assert sol.check(lp) == []


def test_infeasible():
    sol = solve(LinearProgram.dense([1], [[1], [1]], [1, 2], ["<=", ">="]))
    assert sol.status == INFEASIBLE


def test_unbounded():
    sol = solve(LinearProgram.dense([1], [[-1]], [1], ["<="]))
    assert sol.status == UNBOUNDED


def test_bad_row_kind():
    with pytest.raises(LpError):
        LinearProgram.dense([1], [[1]], [1], ["<"])


@pytest.mark.parametrize("exact", [True, False])
def test_lexicographic_edge_tie(exact):
    # max x+y on the unit square cut by x+y <= 1, then prefer small x
    lp = LinearProgram.dense([1, 1], [[1, 1], [1, 0], [0, 1]], [1, 1, 1], ["<="] * 3)
    sol = solve_lexicographic(lp, [-1, 0], exact=exact)
    assert sol.primary_value == 1
    assert list(sol.primal) == [0, 1]


def test_lexicographic_vacuous_primary():
    lp = LinearProgram.dense([0], [[1]], [3], ["<="])
    sol = solve_lexicographic(lp, [1])
    assert sol.primal == (3,)


def test_square_has_four_vertices():
    lp = LinearProgram.dense([1, 0], [[1, 0], [0, 1]], [1, 1], ["<="] * 2)
    verts = enumerate_vertices(lp)
    assert len(verts) == 4
    assert verts == enumerate_vertices_bruteforce(lp)


def test_vertex_guard():
    lp = LinearProgram.dense([0] * 30, [[1] * 30], [1], ["<="])
    with pytest.raises(TooManyVariables):
        enumerate_vertices(lp)


def _random_lp(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 4)), int(rng.integers(2, 6))
    mat = [[F(int(v)) for v in rng.integers(-3, 4, size=n)] for _ in range(m)]
    mat.append([F(1)] * n)  # keeps the feasible set bounded
    rhs = [F(int(v)) for v in rng.integers(0, 5, size=m)] + [F(4)]
    kinds = [str(k) for k in rng.choice(["<=", ">=", "=="], size=m)] + ["<="]
    obj = [F(int(v)) for v in rng.integers(-5, 6, size=n)]
    return LinearProgram.dense(obj, mat, rhs, kinds)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_simplex_matches_vertex_oracle(seed):
    lp = _random_lp(seed)
    verts = enumerate_vertices_bruteforce(lp)
    assert enumerate_vertices(lp) == verts
    for exact in (True, False):
        sol = solve(lp, exact=exact)
        if not verts:
            assert sol.status == INFEASIBLE
            continue
        best = max(sum(c * v for c, v in zip(lp.objective, x)) for x in verts)
        assert sol.optimal
        if exact:
            assert sol.value == best
            # strong duality holds exactly
            assert sum(y * b for y, b in zip(sol.dual, lp.rhs)) == best
        else:
            assert abs(sol.value - float(best)) <= 1e-9 * (1 + abs(float(best)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_crash_does_not_change_the_value(seed):
    lp = _random_lp(seed)
    a = solve(lp, exact=True, crash="off")
    b = solve(lp, exact=True, crash="highs")
    assert a.status == b.status
    if a.optimal:
        assert a.value == b.value
