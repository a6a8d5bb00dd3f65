"""Congestion pricing: path prices, subgradient link updates, best response.

Links act as independent auctioneers.  Each iteration a link moves its
price against the sign of its spare capacity, scaled by a diminishing
harmonic step, and projects onto the non-negative (or floored) half line.
Users respond by maximizing total utility over the finite candidate set
formed by their minimum rate and their layer thresholds; no continuous
search is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

from .model import UserProfile

# Per-link prices keyed by link id.
PriceVector = Dict[str, float]


@dataclass(frozen=True)
class StepSchedule:
    """Diminishing harmonic step sizes sigma0 / (t + 1).

    The sequence vanishes while its partial sums diverge, the standard
    recipe for subgradient convergence.
    """

    sigma0: float

    def at(self, t: int) -> float:
        return self.sigma0 / (t + 1)


def step_size(sigma0: float, t: int) -> float:
    return sigma0 / (t + 1)


def path_price(prices: PriceVector, route: Sequence[str]) -> float:
    """Sum of link prices along a route."""
    return sum(prices[l] for l in route)


def update_link_price(
    price: float,
    sigma: float,
    capacity: float,
    load: float,
    floor: Optional[float] = None,
) -> float:
    """One subgradient step: price - sigma*(capacity - load), projected.

    Projection is onto [0, inf), or onto [floor, inf) when an admission
    price floor is active for the link.
    """
    updated = price - sigma * (capacity - load)
    lower = floor if floor is not None else 0.0
    return updated if updated > lower else lower


def user_rate(user: UserProfile, lambda_s: float) -> float:
    """Best-response rate: argmax of total utility over the candidate set.

    Candidates are the user's minimum rate plus every layer threshold,
    evaluated in ascending order; ties keep the smaller rate, which makes
    the response monotone non-increasing in the path price.
    """
    candidates = [user.x_min]
    for r in user.layers.rates:
        if r != user.x_min:
            candidates.append(r)
    candidates.sort()
    best = candidates[0]
    best_value = user.total_utility(best, lambda_s)
    for x in candidates[1:]:
        value = user.total_utility(x, lambda_s)
        if value > best_value:
            best, best_value = x, value
    return best
