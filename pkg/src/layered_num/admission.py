"""Admission control: bids, scoring, greedy selection, exhaustive oracle.

When invoked, the network first raises prices to per-link floors, users
submit (requested rate, offered price) bids, and a greedy pass admits bids
in descending score order, reserving capacity along each admitted route.
The greedy pass is the production path; an exhaustive 0-1 knapsack oracle
over all admit subsets exists purely as a yardstick, since greedy may leave
revenue on the table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from . import demand, utility
from .model import UserProfile


@dataclass(frozen=True)
class Bid:
    """What a user puts on the table: a rate and the price it would pay."""

    user: int
    requested_rate: float
    offered_price: float

    def __post_init__(self):
        if self.requested_rate <= 0:
            raise ValueError(f"bid for user {self.user}: requested_rate must be positive")
        if self.offered_price < 0:
            raise ValueError(f"bid for user {self.user}: offered_price must be non-negative")


@dataclass(frozen=True)
class AdmissionWeights:
    delta_lambda: float = 1.0
    delta_u: float = 1.0

    def __post_init__(self):
        if self.delta_lambda < 0 or self.delta_u < 0:
            raise ValueError("admission weights must be non-negative")


@dataclass
class AdmissionResult:
    admitted: Set[int] = field(default_factory=set)
    rejected: Set[int] = field(default_factory=set)
    residual: Dict[str, float] = field(default_factory=dict)
    objective: float = 0.0


def user_bid(user: UserProfile, lambda_s: float,
             target_rate: Optional[float] = None) -> Bid:
    """Build a user's admission bid at the given path price.

    A user actively demanding a target layer bids that rate (it is the
    bandwidth it is fighting for); otherwise the bid is the layer threshold
    maximizing utility per unit cost, restricted to layers the budget can
    afford at this price.  When no layer is affordable the user falls back
    to bidding its minimum rate.  The offered price adds the user's
    willingness increment on top of the network price.
    """
    if target_rate is not None:
        requested = target_rate
    else:
        best_rate = None
        best_ratio = 0.0
        for i, r in enumerate(user.layers.rates):
            if r * lambda_s > user.budget:
                continue
            ratio = user.staircase(r) / (r * lambda_s)
            if best_rate is None or ratio > best_ratio:
                best_rate, best_ratio = r, ratio
        requested = best_rate if best_rate is not None else user.x_min
    increment = _bid_increment(user, requested, lambda_s)
    return Bid(user=user.id, requested_rate=requested,
               offered_price=lambda_s + increment)


def _bid_increment(user: UserProfile, requested: float, lambda_s: float) -> float:
    """Willingness increment for a bid: explicit override, else the
    minimum-increment bound for climbing the final upgrade step to the
    requested layer (zero when the request is below the first layer)."""
    if user.price_increment is not None:
        return user.price_increment
    y_req = utility.attained_layer(requested, user.layers.rates)
    if y_req == 0 or lambda_s <= 0:
        return 0.0
    k = min(user.upgrade_step, y_req)
    return demand.min_price_increment(user, y_req - k, k, lambda_s)


def admission_score(bid: Bid, lambda_s: float, user: UserProfile,
                    weights: AdmissionWeights) -> float:
    """Selection score: rate weighted by price generosity plus a
    utility-per-cost term.

    x * (offered/network)^delta_lambda + delta_u * U(x) / (network * x).
    Growing delta_lambda makes over-offering bids dominate.
    """
    if lambda_s <= 0:
        raise ValueError("admission_score: zero network price")
    x = bid.requested_rate
    ratio = bid.offered_price / lambda_s
    return x * ratio ** weights.delta_lambda + \
        weights.delta_u * user.staircase(x) / (lambda_s * x)


def price_floor_apply(prices: Dict[str, float],
                      floors: Dict[str, float]) -> Dict[str, float]:
    """Elementwise max of current prices and per-link floors."""
    out = dict(prices)
    for link_id, floor in floors.items():
        if floor < 0:
            raise ValueError(f"floor for link '{link_id}' must be non-negative")
        if link_id in out and out[link_id] < floor:
            out[link_id] = floor
    return out


def greedy_select(scored_bids: Sequence[Tuple[Bid, float]],
                  capacities: Dict[str, float],
                  routes: Dict[int, Sequence[str]]) -> AdmissionResult:
    """Admit bids in descending score order while capacity lasts.

    Each admitted bid reserves its requested rate on every link of its
    route; a bid that does not fit the residual capacity anywhere along its
    route is rejected (not an error).  Ties in score go to the lower user
    id, making the fold fully deterministic.
    """
    result = AdmissionResult(residual=dict(capacities))
    order = sorted(scored_bids, key=lambda bs: (-bs[1], bs[0].user))
    for bid, score in order:
        if bid.user in result.admitted:
            continue
        route = routes[bid.user]
        if all(result.residual[l] >= bid.requested_rate for l in route):
            for l in route:
                result.residual[l] -= bid.requested_rate
            result.admitted.add(bid.user)
            result.objective += score
        else:
            result.rejected.add(bid.user)
    return result


def knapsack_oracle(scored_bids: Sequence[Tuple[Bid, float]],
                    capacities: Dict[str, float],
                    routes: Dict[int, Sequence[str]]) -> AdmissionResult:
    """Exhaustive optimum over all admit subsets (reference yardstick).

    Enumerates 2^n subsets, so instances are capped at 20 bids.  Among
    subsets of equal objective the lexicographically smallest sorted tuple
    of admitted user ids wins, pinning a deterministic answer.
    """
    n = len(scored_bids)
    if n > 20:
        raise ValueError(f"instance too large for exhaustive oracle ({n} bids > 20)")
    link_ids = list(capacities)
    if n == 0:
        return AdmissionResult(residual=dict(capacities))

    users = [b.user for b, _ in scored_bids]
    scores = np.array([s for _, s in scored_bids], dtype=float)
    # rate matrix: bid i consumes rates[i, j] on link j
    rates = np.zeros((n, len(link_ids)), dtype=float)
    for i, (bid, _) in enumerate(scored_bids):
        for l in routes[bid.user]:
            rates[i, link_ids.index(l)] = bid.requested_rate
    caps = np.array([capacities[l] for l in link_ids], dtype=float)

    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1  # (2^n, n)
    loads = bits @ rates
    feasible = (loads <= caps + 1e-9).all(axis=1)
    objectives = bits @ scores
    objectives[~feasible] = -np.inf
    best_value = objectives.max()

    tied = np.flatnonzero(objectives == best_value)
    best_mask = min(
        (tuple(sorted(users[i] for i in range(n) if m >> i & 1)), m)
        for m in tied.tolist()
    )[1]

    result = AdmissionResult(residual=dict(capacities))
    for i in range(n):
        if best_mask >> i & 1:
            result.admitted.add(users[i])
            result.objective += float(scores[i])
            for l in routes[users[i]]:
                result.residual[l] -= scored_bids[i][0].requested_rate
        else:
            result.rejected.add(users[i])
    return result


def suboptimal_instance() -> Tuple[List[Tuple[Bid, float]], Dict[str, float], Dict[int, List[str]]]:
    """Pinned instance where the greedy order provably loses to the oracle.

    One link of capacity 7; user 0's big bid carries the top score, so the
    greedy pass admits it first and strands the complementary pair
    (objective 10).  The optimum drops user 0 and packs users 1 and 2
    instead (objective 14).
    """
    capacities = {"L": 7.0}
    routes: Dict[int, List[str]] = {0: ["L"], 1: ["L"], 2: ["L"]}
    scored = [
        (Bid(user=0, requested_rate=6.0, offered_price=2.0), 10.0),
        (Bid(user=1, requested_rate=4.0, offered_price=1.5), 7.0),
        (Bid(user=2, requested_rate=3.0, offered_price=1.5), 7.0),
    ]
    return scored, capacities, routes


def random_instance(rng: np.random.Generator, n_users: int,
                    ) -> Tuple[List[Tuple[Bid, float]], Dict[str, float], Dict[int, List[str]]]:
    """One randomized small admission instance for greedy-vs-oracle sweeps.

    1-4 links, every user routed over a non-empty random subset of them,
    rates and scores drawn so that instances mix trivial and tight fits.
    """
    n_links = int(rng.integers(1, 5))
    link_ids = [f"L{j}" for j in range(n_links)]
    capacities = {l: float(rng.uniform(4.0, 18.0)) for l in link_ids}
    scored: List[Tuple[Bid, float]] = []
    routes: Dict[int, List[str]] = {}
    for uid in range(n_users):
        picks = [l for l in link_ids if rng.random() < 0.5]
        if not picks:
            picks = [link_ids[int(rng.integers(0, n_links))]]
        routes[uid] = picks
        rate = float(rng.uniform(0.5, 8.0))
        offered = float(rng.uniform(0.5, 4.0))
        bid = Bid(user=uid, requested_rate=rate, offered_price=offered)
        scored.append((bid, float(rng.uniform(0.1, 10.0))))
    return scored, capacities, routes
