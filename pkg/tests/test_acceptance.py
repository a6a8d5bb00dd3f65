"""Acceptance gate for the simulator.

One test per criterion:
 1. concave baseline: two log-utility users on one link reach the
    proportional-fair point (x = w/lambda, lambda = sum(w)/C) within 2000
    iterations, under 2% relative error, in under a second
 2. staircase suite: 100 randomized schedules keep the shape properties
 3. shipped scenario: bottleneck price oscillates > 5% of its mean over
    iterations 100-300 with passive users 0-2 riding along, then every
    link and every surviving user is converged (1%, window 100) by 600
 4. the iteration-300 admission dismisses exactly user 0 and user 3 holds
    rate 5 afterwards
 5. the ripple reaches user 4 before admission while users 5, 6 and 7 stay
    converged over the whole run
 6. greedy vs exhaustive oracle on 200 random instances: never over
    capacity, never above the optimum; the crafted instance shows the
    strict gap (10 vs 14); under 10 seconds
 7. each active user's upgrade demand dies above a finite price
 8. reruns are byte-identical
"""

import math
import time

import numpy as np
import pytest

from layered_num import admission as adm
from layered_num import demand, engine, model, pricing, utility

from conftest import SCENARIO_PATH


def test_concave_baseline_matches_closed_form():
    # log-utility best response: x(lambda) = w/lambda, capped at the
    # capacity; KKT point on C = 10 with w = (2, 3) is x = (4, 6) at
    # lambda = 0.5
    start = time.perf_counter()
    weights = (2.0, 3.0)
    capacity = 10.0
    lam = 0.0

    def response(w, lam):
        return capacity if lam <= 0 else min(capacity, w / lam)

    for t in range(2000):
        load = sum(response(w, lam) for w in weights)
        lam = pricing.update_link_price(lam, pricing.step_size(1.0, t),
                                        capacity, load)
    rates = [response(w, lam) for w in weights]
    assert abs(lam - 0.5) / 0.5 < 0.02
    assert abs(rates[0] - 4.0) / 4.0 < 0.02
    assert abs(rates[1] - 6.0) / 6.0 < 0.02
    assert time.perf_counter() - start < 1.0


def test_staircase_property_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    peak = math.asinh(1.0 / 0.1)  # height peak of the default parameters
    for _ in range(100):
        n = int(rng.integers(2, 7))
        rates = [float(rng.uniform(peak + 0.1, peak + 3.0))]
        for _ in range(n - 1):
            rates.append(rates[-1] + float(rng.uniform(0.5, 4.0)))

        for x in np.linspace(0.0, rates[0] - 1e-9, 7):
            assert utility.staircase_utility(float(x), rates) == 0.0

        grid = np.linspace(0.0, rates[-1] * 1.2, 120)
        vals = [utility.staircase_utility(float(x), rates) for x in grid]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

        heights = utility.step_heights(rates)
        assert all(b < a for a, b in zip(heights, heights[1:]))
    assert time.perf_counter() - start < 1.0


def test_bottleneck_oscillation_and_post_admission_convergence(default_trace,
                                                               default_scenario):
    ab = default_trace.link_price_series("AB")
    window = ab[100:300]
    amplitude = max(window) - min(window)
    mean = sum(window) / len(window)
    assert amplitude > 0.05 * mean

    for uid in (0, 1, 2):
        rates = default_trace.user_rate_series(uid)[100:300]
        assert max(rates) - min(rates) > 0.5, f"user {uid} did not oscillate"

    surviving = default_trace.admissions[0]["admitted"]
    for uid in surviving:
        series = default_trace.user_rate_series(uid)[:600]
        tol = engine.relative_tol(series, 0.01)
        assert engine.converged(series, tol, 100), f"user {uid} rate not settled"
    for link in default_scenario.links:
        series = default_trace.link_price_series(link.id)[:600]
        tol = engine.relative_tol(series, 0.01)
        assert engine.converged(series, tol, 100), f"link {link.id} not settled"


def test_admission_dismisses_exactly_user_zero(default_trace):
    outcome = default_trace.admissions[0]
    assert outcome["iteration"] == 300
    assert outcome["rejected"] == [0]
    assert outcome["admitted"] == [1, 2, 3, 4, 5, 6, 7]
    assert set(default_trace.user_rate_series(3)[320:]) == {5.0}


def test_ripple_reaches_user_4_but_spares_the_rest(default_trace):
    u4 = default_trace.user_rate_series(4)[100:300]
    metric = engine.detect_oscillation(u4, window=len(u4), threshold=1.0)
    assert metric.flag, "user 4 should toggle while the bottleneck rings"

    for uid in (5, 6, 7):
        series = default_trace.user_rate_series(uid)
        tol = engine.relative_tol(series, 0.01)
        assert max(series) - min(series) < tol, f"user {uid} was disturbed"


def test_greedy_vs_oracle_sweep():
    start = time.perf_counter()
    rng = np.random.default_rng(2026)
    for _ in range(200):
        scored, capacities, routes = adm.random_instance(rng, int(rng.integers(1, 13)))
        greedy = adm.greedy_select(scored, capacities, routes)
        oracle = adm.knapsack_oracle(scored, capacities, routes)

        loads = {l: 0.0 for l in capacities}
        by_user = {b.user: b for b, _ in scored}
        for uid in greedy.admitted:
            for l in routes[uid]:
                loads[l] += by_user[uid].requested_rate
        for l, cap in capacities.items():
            assert loads[l] <= cap + 1e-9
        assert greedy.objective <= oracle.objective + 1e-9

    scored, capacities, routes = adm.suboptimal_instance()
    assert adm.greedy_select(scored, capacities, routes).objective == 10.0
    assert adm.knapsack_oracle(scored, capacities, routes).objective == 14.0
    assert time.perf_counter() - start < 10.0


def test_demand_stops_above_a_finite_price(default_scenario):
    active = [u for u in default_scenario.users if u.mode == "active"]
    assert active, "the shipped scenario must contain an active user"
    for user in active:
        k = user.upgrade_step

        def fires(lam):
            inc = demand.effective_increment(user, 1, k, lam)
            return demand.upgrade_condition(user, 1, k, lam, inc)

        lo, hi = 1e-9, 1e6
        assert fires(lo) and not fires(hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if fires(mid):
                lo = mid
            else:
                hi = mid
        lam_star = hi
        assert math.isfinite(lam_star)
        for lam in np.linspace(lam_star * 1.0001, lam_star * 100.0, 50):
            assert not fires(float(lam)), f"user {user.id} still demanding at {lam}"


def test_byte_identical_reruns(tmp_path):
    scenario = model.load_scenario(SCENARIO_PATH)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    engine.run(scenario).write_csv(first)
    engine.run(model.load_scenario(SCENARIO_PATH)).write_csv(second)
    assert first.read_bytes() == second.read_bytes()
