from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asianmot.btp import (
    MIRROR_PAIRS,
    BtpError,
    branch_costs,
    classify_cases,
    dominance_check,
    left_part,
    make_btp,
    mirror,
    random_btp,
    right_part,
    right_part_suboptimal,
)

HALF = F(1, 2)
SYM = make_btp(0, -1, 1, -2, 0, 0, 2)
I1_TYPE = make_btp(HALF, 0, 1, -3, 2, -2, 3)


def test_lambdas():
    assert (SYM.lam_plus, SYM.lam_mp, SYM.lam_pp) == (HALF, HALF, HALF)


def test_degenerate_lambdas_are_one():
    b = make_btp(*[2] * 7)
    assert (b.lam_plus, b.lam_mp, b.lam_pp) == (1, 1, 1)


def test_bad_ordering():
    with pytest.raises(BtpError):
        make_btp(0, -1, 1, -2, 0, 2, 0)


def test_costs_of_symmetric_plan():
    assert branch_costs(SYM) == (1, 2)


def test_plan_masses_sum_to_one():
    assert SYM.plan().total_mass == 1


def test_degenerate_parts_coincide():
    b = make_btp(1, 1, 1, 0, 3, -1, 2)
    assert [m for _, _, m in b.branches()][:2] == [0, 0]
    assert branch_costs(b)[0] == branch_costs(b)[1]
    assert right_part(b).points == tuple((1, y) for y in (-1, 2))
    assert left_part(b).masses == right_part(b).masses


def test_right_part_barycenter():
    b = make_btp(F(1, 3), -1, 2, -3, 1, 0, 5)
    rows = [(a, y, m) for a, y, m in b.branches() if a == b.x_minus]
    assert sum(y * m for _, y, m in rows) == b.lam_minus * b.x_minus


def test_mirror_of_symmetric_plan_is_itself():
    assert mirror(SYM) == SYM


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_mirror_properties(seed):
    b = random_btp(np.random.default_rng(seed))
    m = mirror(b)
    assert mirror(m) == b
    assert branch_costs(m) == branch_costs(b)
    if b.x_minus < b.x_plus:
        paired = {MIRROR_PAIRS[c] for c in classify_cases(b) if c in MIRROR_PAIRS}
        assert paired == {c for c in classify_cases(m) if c in MIRROR_PAIRS}


@pytest.mark.parametrize("nodes, case", [
    ((0, -1, 1, -2, 0, 0, 2), "L1"),
    ((2, 1, 3, 1, 3, 2, 4), "L2"),
    ((1, 0, 2, -1, 3, -1, 3), "L9"),
])
def test_case_examples(nodes, case):
    assert case in classify_cases(make_btp(*nodes))


def test_right_part_suboptimality():
    sub, competitor, best = right_part_suboptimal(I1_TYPE)
    assert sub and competitor is not None
    assert best > branch_costs(I1_TYPE)[1]
    sub, _, best = right_part_suboptimal(SYM)
    assert not sub and best == 2


def test_dominance_verdicts():
    res = dominance_check(SYM)
    assert res.verdict == "left_dominated" and "L1" in res.matched_cases
    # here the left part also ties, so both branches hold
    assert dominance_check(I1_TYPE).verdict in ("right_suboptimal", "both")
    flat = dominance_check(make_btp(1, 1, 1, 0, 2, 0, 2))
    assert flat.verdict == "left_dominated" and flat.costs[0] == flat.costs[1]


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6))
def test_matched_cases_dominate(seed):
    b = random_btp(np.random.default_rng(seed))
    res = dominance_check(b)
    if res.matched_cases:
        assert res.costs[0] <= res.costs[1]


def test_float_mode_agrees():
    b = random_btp(np.random.default_rng(5), exact=False)
    res = dominance_check(b)
    assert res.verdict in ("right_suboptimal", "left_dominated", "both")
