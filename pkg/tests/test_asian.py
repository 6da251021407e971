from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asianmot.asian import (
    COUNTEREXAMPLE_MARGINAL,
    AsianError,
    DiscretePath,
    approx_jump_model,
    conjecture_harness,
    counterexample_4128,
    one_marginal_bounds,
    one_marginal_lp,
    random_path,
    random_three_step_model,
    superhedge_plan,
    two_marginal_candidate_bounds,
)
from asianmot.measures import DiscreteMeasure
from asianmot.mot import Coupling
from asianmot.payoffs import PiecewiseLinear
from asianmot.sampling import random_measure, random_pair

HALF = F(1, 2)
SPLIT = DiscreteMeasure((0, 2), (HALF, HALF))
STRADDLE1 = PiecewiseLinear.straddle(1)
FORWARD_LAW = Coupling(((1, 0), (1, 2)), (HALF, HALF))


class TestOneMarginal:
    def test_point_mass(self):
        phi = PiecewiseLinear((0, 1, 3), (2, 0, 5))
        assert one_marginal_bounds(DiscreteMeasure.dirac(F(7, 3)), phi) == (phi(F(7, 3)),) * 2

    def test_two_point(self):
        assert one_marginal_bounds(SPLIT, STRADDLE1) == (0, 1)

    def test_lp_agrees_exactly(self):
        nu = DiscreteMeasure.uniform([-1, 0, 2, 3])
        assert one_marginal_lp(nu, STRADDLE1, steps=3) == one_marginal_bounds(nu, STRADDLE1)

    def test_non_convex_rejected(self):
        with pytest.raises(ValueError):
            one_marginal_bounds(SPLIT, PiecewiseLinear((0, 1, 2), (0, 1, 0)))


class TestSuperhedge:
    def test_constant_path_has_zero_slack(self):
        _, slack = superhedge_plan(STRADDLE1, DiscretePath((0, 1, 2), (3, 3, 3)))
        assert slack == 0

    def test_two_step_path(self):
        plan, slack = superhedge_plan(STRADDLE1, DiscretePath((0, 1, 2), (0, 2, 2)))
        assert plan.trading_integrand[1] == -HALF
        assert slack == 2

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10**6))
    def test_slack_nonnegative(self, seed):
        phi = PiecewiseLinear.from_breakpoints([(-1, 2), (0, 0), (1, 1), (3, 4)], exact=False)
        _, slack = superhedge_plan(phi, random_path(np.random.default_rng(seed)))
        assert slack >= -1e-12

    def test_bad_times(self):
        with pytest.raises(AsianError):
            DiscretePath((0, 0), (1, 1))


class TestJumpApproximation:
    def test_no_jump_no_gap(self):
        law = Coupling(((1, 1),), (F(1),))
        _, gap = approx_jump_model(law, 1, 2, 4)
        assert gap == 0

    def test_gap_halves(self):
        gaps = [approx_jump_model(FORWARD_LAW, 1, 2, n)[1] for n in (4, 8, 16)]
        assert gaps == [F(1, 16), F(1, 32), F(1, 64)]

    def test_prices_converge(self):
        target = FORWARD_LAW.expect(lambda x, y: STRADDLE1((x + y) / 2))
        prices = [approx_jump_model(FORWARD_LAW, 1, 2, n)[0].expect_average(STRADDLE1) for n in (4, 8, 16, 32)]
        diffs = [p - target for p in prices]
        assert all(a > b >= 0 for a, b in zip(diffs, diffs[1:]))

    def test_bridge_must_fit(self):
        with pytest.raises(AsianError):
            approx_jump_model(FORWARD_LAW, 1, 2, 1)


class TestCounterexample:
    def test_prices(self):
        rep = counterexample_4128()
        assert rep.price_candidate == F(41, 28)
        assert rep.price_constancy == F(3, 2)
        assert rep.strictly_smaller and rep.martingale_ok and rep.z_marginal_ok

    def test_conditional_mean(self):
        law = counterexample_4128().law
        rows = [(z, m) for (y, z), m in zip(law.points, law.masses) if y == F(1, 4)]
        mass = sum(m for _, m in rows)
        assert mass == F(3, 7)
        assert sum(z * m for z, m in rows) / mass == F(1, 4)

    def test_stay_constant_heuristic_is_beaten(self):
        _, note = two_marginal_candidate_bounds(COUNTEREXAMPLE_MARGINAL, COUNTEREXAMPLE_MARGINAL, 1, 2,
                                                PiecewiseLinear.straddle(0))
        assert note["heuristic_min"] == F(3, 4)
        assert counterexample_4128().normalized_candidate < note["heuristic_min"]
        assert note["jensen_floor"] == 0


def test_equal_marginals_force_identity():
    mu = DiscreteMeasure.uniform([-1, 0, 2])
    value, _ = two_marginal_candidate_bounds(mu, mu, 1, 2, STRADDLE1)
    assert value == mu.expect(STRADDLE1)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_candidate_dominates_sampled_models(seed):
    rng = np.random.default_rng(seed)
    mu, nu = random_pair(rng, 3, denom=2, span=2)
    value, _ = two_marginal_candidate_bounds(mu, nu, 1, 2, STRADDLE1)
    for _ in range(5):
        model = random_three_step_model(rng, mu, nu)
        assert model.violations(mu, nu) == []
        # a model that holds X_1 on [0, 1) is one of the candidates' competitors
        assert model.expect(lambda a, b, c: STRADDLE1((b + c) / 2)) <= value


class TestHarness:
    def test_point_mass_start(self):
        rep = conjecture_harness(DiscreteMeasure.dirac(1), SPLIT, 2, 5, 0)
        assert rep.min_slack == 0 and not rep.violations

    def test_random_call_trials(self):
        rng = np.random.default_rng(2)
        for i in range(10):
            mu, nu = random_pair(rng, 3, denom=2, span=2)
            rep = conjecture_harness(mu, nu, F(int(rng.integers(-4, 5)), 2), 5, i)
            assert rep.min_slack >= 0

    def test_convex_mode_reports(self):
        mu = random_measure(np.random.default_rng(1), 3)
        rep = conjecture_harness(mu, mu, 0, 3, 0, phi=STRADDLE1)
        assert rep.mode == "convex" and rep.trials == 3
