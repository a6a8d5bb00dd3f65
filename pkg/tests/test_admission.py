"""Admission control: bids, scores, floors, greedy pass, exhaustive oracle."""

import math

import numpy as np
import pytest

from layered_num import admission as adm
from layered_num import demand
from layered_num.admission import (
    AdmissionWeights,
    Bid,
    admission_score,
    greedy_select,
    knapsack_oracle,
    price_floor_apply,
    random_instance,
    suboptimal_instance,
    user_bid,
)
from layered_num.model import LayerSchedule, UserProfile


def make_user(rates=(2.0, 5.0), budget=50.0, x_min=2.0, uid=0, **kw):
    return UserProfile(id=uid, route=("AB",), budget=budget,
                       layers=LayerSchedule(rates=tuple(rates)),
                       x_min=x_min, **kw)


class TestBid:
    def test_rejects_nonpositive_rate(self):
        with pytest.raises(ValueError, match="requested_rate"):
            Bid(user=0, requested_rate=0.0, offered_price=1.0)

    def test_rejects_negative_price(self):
        with pytest.raises(ValueError, match="offered_price"):
            Bid(user=0, requested_rate=1.0, offered_price=-0.1)


class TestUserBid:
    def test_single_layer_bids_that_layer(self):
        u = make_user(rates=(4.0,), x_min=1.0, price_increment=0.0)
        assert user_bid(u, 2.0).requested_rate == 4.0

    def test_per_cost_argmax_picks_first_layer(self):
        # at lambda = 1 the (2,5) schedule pays off better at rate 2
        u = make_user(price_increment=0.0)
        assert user_bid(u, 1.0).requested_rate == 2.0

    def test_zero_increment_offers_network_price(self):
        u = make_user(price_increment=0.0)
        assert user_bid(u, 3.0).offered_price == 3.0

    def test_armed_target_overrides_argmax(self):
        u = make_user(price_increment=0.0)
        assert user_bid(u, 1.0, target_rate=5.0).requested_rate == 5.0

    def test_budget_exhausted_falls_back_to_minimum(self):
        u = make_user(budget=1.0, x_min=0.5, price_increment=0.0)
        assert user_bid(u, 10.0).requested_rate == 0.5

    def test_fixed_increment_added_on_top(self):
        u = make_user(price_increment=2.0)
        assert user_bid(u, 3.0).offered_price == 5.0

    def test_derived_increment_uses_final_step_bound(self):
        u = make_user()
        bid = user_bid(u, 1.0)  # requests rate 2, one step above nothing
        want = demand.min_price_increment(u, 0, 1, 1.0)
        assert bid.offered_price == pytest.approx(1.0 + want, rel=1e-12)


class TestAdmissionScore:
    def test_weights_off_reduces_to_rate(self):
        u = make_user()
        bid = Bid(user=0, requested_rate=5.0, offered_price=9.0)
        w = AdmissionWeights(delta_lambda=0.0, delta_u=0.0)
        assert admission_score(bid, 2.0, u, w) == 5.0

    def test_unit_ratio_leaves_rate_plus_utility_term(self):
        u = make_user()
        bid = Bid(user=0, requested_rate=5.0, offered_price=2.0)
        w = AdmissionWeights(delta_lambda=1.0, delta_u=1.0)
        want = 5.0 + u.staircase(5.0) / (2.0 * 5.0)
        assert admission_score(bid, 2.0, u, w) == pytest.approx(want, rel=1e-15)

    def test_reference_value(self):
        # rate 5 offered at 1.5x the network price, squared emphasis,
        # utility term tuned to exactly 0.04
        u = make_user(rates=(5.0,), budget=10.0, x_min=1.0,
                      sigmoid_steepness=(1000.0,),
                      decay_coeff=(math.log(2.5) / 5.0,))
        bid = Bid(user=0, requested_rate=5.0, offered_price=3.0)
        w = AdmissionWeights(delta_lambda=2.0, delta_u=1.0)
        assert admission_score(bid, 2.0, u, w) == pytest.approx(11.29, rel=1e-12)

    def test_generous_bids_dominate_as_emphasis_grows(self):
        u = make_user()
        over = Bid(user=0, requested_rate=3.0, offered_price=3.0)
        fair = Bid(user=1, requested_rate=5.0, offered_price=2.0)
        low = AdmissionWeights(delta_lambda=1.0, delta_u=0.0)
        high = AdmissionWeights(delta_lambda=8.0, delta_u=0.0)
        assert admission_score(fair, 2.0, u, low) > admission_score(over, 2.0, u, low)
        assert admission_score(over, 2.0, u, high) > admission_score(fair, 2.0, u, high)

    def test_unpriced_network_rejected(self):
        u = make_user()
        bid = Bid(user=0, requested_rate=5.0, offered_price=1.0)
        with pytest.raises(ValueError, match="zero network price"):
            admission_score(bid, 0.0, u, AdmissionWeights())


class TestPriceFloorApply:
    def test_identity_above_floors(self):
        prices = {"AB": 2.0, "BC": 1.0}
        assert price_floor_apply(prices, {"AB": 0.5, "BC": 0.5}) == prices

    def test_clamps_to_floor(self):
        assert price_floor_apply({"AB": 0.0}, {"AB": 0.5}) == {"AB": 0.5}

    def test_elementwise_mix(self):
        got = price_floor_apply({"AB": 2.0, "BC": 0.1}, {"AB": 1.0, "BC": 0.4})
        assert got == {"AB": 2.0, "BC": 0.4}

    def test_unknown_floor_link_ignored(self):
        assert price_floor_apply({"AB": 1.0}, {"ZZ": 5.0}) == {"AB": 1.0}

    def test_negative_floor_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            price_floor_apply({"AB": 1.0}, {"AB": -0.5})

    def test_input_not_mutated(self):
        prices = {"AB": 0.0}
        price_floor_apply(prices, {"AB": 1.0})
        assert prices == {"AB": 0.0}


def one_link_instance():
    capacities = {"L": 7.0}
    routes = {0: ["L"], 1: ["L"], 2: ["L"]}
    scored = [
        (Bid(user=0, requested_rate=5.0, offered_price=1.0), 9.0),
        (Bid(user=1, requested_rate=4.0, offered_price=1.0), 8.0),
        (Bid(user=2, requested_rate=2.0, offered_price=1.0), 7.0),
    ]
    return scored, capacities, routes


class TestGreedySelect:
    def test_no_bids(self):
        result = greedy_select([], {"L": 5.0}, {})
        assert result.admitted == set() and result.rejected == set()
        assert result.objective == 0.0
        assert result.residual == {"L": 5.0}

    def test_single_fitting_bid(self):
        scored = [(Bid(user=0, requested_rate=3.0, offered_price=1.0), 4.0)]
        result = greedy_select(scored, {"A": 5.0, "B": 9.0}, {0: ["A", "B"]})
        assert result.admitted == {0}
        assert result.residual == {"A": 2.0, "B": 6.0}
        assert result.objective == 4.0

    def test_skips_what_does_not_fit_and_continues(self):
        scored, capacities, routes = one_link_instance()
        result = greedy_select(scored, capacities, routes)
        assert result.admitted == {0, 2}
        assert result.rejected == {1}
        assert result.objective == 16.0
        assert result.residual["L"] == 0.0

    def test_score_tie_goes_to_lower_id(self):
        scored = [
            (Bid(user=7, requested_rate=4.0, offered_price=1.0), 5.0),
            (Bid(user=2, requested_rate=4.0, offered_price=1.0), 5.0),
        ]
        result = greedy_select(scored, {"L": 4.0}, {7: ["L"], 2: ["L"]})
        assert result.admitted == {2}
        assert result.rejected == {7}

    def test_step_count_linear_in_bids(self):
        # the fold touches each user's route exactly once
        class CountingRoutes(dict):
            def __init__(self, *a, **k):
                super().__init__(*a, **k)
                self.lookups = 0

            def __getitem__(self, key):
                self.lookups += 1
                return super().__getitem__(key)

        for n in (8, 16, 32):
            scored = [(Bid(user=i, requested_rate=1.0, offered_price=1.0),
                       float(n - i)) for i in range(n)]
            routes = CountingRoutes({i: ["A", "B"] for i in range(n)})
            greedy_select(scored, {"A": 1e9, "B": 1e9}, routes)
            assert routes.lookups == n

    def test_never_violates_capacity_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            scored, capacities, routes = random_instance(rng, int(rng.integers(1, 13)))
            result = greedy_select(scored, capacities, routes)
            loads = {l: 0.0 for l in capacities}
            by_user = {b.user: b for b, _ in scored}
            for uid in result.admitted:
                for l in routes[uid]:
                    loads[l] += by_user[uid].requested_rate
            for l, cap in capacities.items():
                assert loads[l] <= cap + 1e-9
                assert result.residual[l] >= -1e-9


class TestKnapsackOracle:
    def test_empty(self):
        result = knapsack_oracle([], {"L": 5.0}, {})
        assert result.admitted == set() and result.objective == 0.0

    def test_matches_greedy_when_greedy_optimal(self):
        scored, capacities, routes = one_link_instance()
        result = knapsack_oracle(scored, capacities, routes)
        assert result.admitted == {0, 2}
        assert result.objective == 16.0

    def test_crafted_instance_beats_greedy(self):
        scored, capacities, routes = suboptimal_instance()
        greedy = greedy_select(scored, capacities, routes)
        oracle = knapsack_oracle(scored, capacities, routes)
        assert greedy.admitted == {0}
        assert greedy.objective == 10.0
        assert oracle.admitted == {1, 2}
        assert oracle.objective == 14.0

    def test_equal_objective_breaks_lexicographically(self):
        scored = [
            (Bid(user=4, requested_rate=3.0, offered_price=1.0), 5.0),
            (Bid(user=1, requested_rate=3.0, offered_price=1.0), 5.0),
        ]
        result = knapsack_oracle(scored, {"L": 3.0}, {4: ["L"], 1: ["L"]})
        assert result.admitted == {1}

    def test_instance_cap(self):
        scored = [(Bid(user=i, requested_rate=1.0, offered_price=1.0), 1.0)
                  for i in range(21)]
        routes = {i: ["L"] for i in range(21)}
        with pytest.raises(ValueError, match="too large"):
            knapsack_oracle(scored, {"L": 50.0}, routes)

    def test_greedy_never_beats_oracle_randomized(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            scored, capacities, routes = random_instance(rng, int(rng.integers(1, 13)))
            greedy = greedy_select(scored, capacities, routes)
            oracle = knapsack_oracle(scored, capacities, routes)
            assert greedy.objective <= oracle.objective + 1e-9
