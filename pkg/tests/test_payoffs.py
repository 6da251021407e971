from fractions import Fraction as F

import pytest

from asianmot.payoffs import CostSpec, PayoffError, PiecewiseLinear


def test_call_profile():
    c = PiecewiseLinear.call(1)
    assert [c(x) for x in (-5, 1, 3)] == [0, 0, 2]
    assert c.left_derivative(1) == 0
    assert c.left_derivative(F(3, 2)) == 1


def test_extrapolates_end_segments():
    s = PiecewiseLinear.straddle(0)
    assert s(-10) == 10 and s(7) == 7


def test_convexity_check():
    with pytest.raises(PayoffError, match="not convex"):
        PiecewiseLinear((0, 1, 2), (0, 1, 0)).require_convex()


def test_breakpoints_must_increase():
    with pytest.raises(PayoffError):
        PiecewiseLinear((0, 0), (1, 1))


def test_cost_kinds():
    assert CostSpec.abs_sum()(1, -3) == 2
    assert CostSpec.call_on_sum(1)(1, 1) == 1
    assert CostSpec("straddle")(1, 4) == 3
    avg = CostSpec.weighted_average((F(1, 2), F(1, 2)), PiecewiseLinear.call(1))
    assert avg(1, 2) == F(1, 2)


def test_from_json_errors():
    with pytest.raises(PayoffError, match="strike"):
        CostSpec.from_json({"kind": "call_on_sum"})
    with pytest.raises(PayoffError, match="unknown payoff kind"):
        CostSpec.from_json({"kind": "lookback"})


def test_json_round_trip():
    spec = CostSpec.weighted_average((0, F(1, 2), F(1, 2)), PiecewiseLinear.call(1))
    assert CostSpec.from_json(spec.to_json()) == spec


def test_custom_table_lookup():
    spec = CostSpec.from_json({"kind": "custom_table", "table": [[0, 1, 5], [0, 2, "1/3"]]})
    assert spec(0, 2) == F(1, 3)
    with pytest.raises(PayoffError, match="no value"):
        spec(1, 1)
