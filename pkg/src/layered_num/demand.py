"""Adaptive layered demand: the upgrade test and per-iteration demand rule.

An active user watching its path price decides each iteration whether to
transmit above the allocation the price alone would give it.  The desire
for a k-layer upgrade weighs the utility gain against the money spent at a
price the user is willing to offer; the upgrade fires when desire covers
the budget-weighted spend.  A simpler threshold policy (demand the target
layer while the price is below a fixed threshold) is also supported, since
a fixed willingness bound reduces the desire test to exactly that form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import utility
from .model import ACTIVE, POLICY_B_FUNCTION, POLICY_THRESHOLD, UserProfile


@dataclass
class DemandState:
    """Mutable per-user demand bookkeeping carried across iterations.

    current_rate is the rate actually transmitted last iteration.
    target_layer is armed by a demand-change event (1-based); base_rate is
    the rate held when the target was armed, used as the fall-back side of
    the threshold policy.
    """

    current_rate: float
    target_layer: Optional[int] = None
    base_rate: Optional[float] = None

    @property
    def armed(self) -> bool:
        return self.target_layer is not None


def _cumulative_utility(user: UserProfile, layer: int) -> float:
    """Staircase value at a 1-based layer (0 means no layer attained)."""
    if layer == 0:
        return 0.0
    return user.staircase(user.layers.rate_of(layer))


def desire(user: UserProfile, y: int, k: int, lambda_s: float,
           lambda_inc: float) -> float:
    """Quality gain per unit of money offered for a y -> y+k upgrade.

    (U^{y+k} - U^y) / (x^{y+k} * (lambda_s + lambda_inc)), decreasing in
    both the network price and the increment the user puts on top.
    """
    x_up = user.layers.rate_of(y + k)
    gain = _cumulative_utility(user, y + k) - _cumulative_utility(user, y)
    return gain / (x_up * (lambda_s + lambda_inc))


def upgrade_condition(user: UserProfile, y: int, k: int, lambda_s: float,
                      lambda_inc: float) -> bool:
    """True when the desire covers the budget-weighted spend for the jump.

    beta * x^{y+k} * lambda_s / budget <= desire.  With lambda_inc set to
    the minimum-increment bound the two sides meet exactly.
    """
    x_up = user.layers.rate_of(y + k)
    spend = user.beta * x_up * lambda_s / user.budget
    return spend <= desire(user, y, k, lambda_s, lambda_inc)


def min_price_increment(user: UserProfile, y: int, k: int,
                        lambda_s: float) -> float:
    """Smallest increment above the network price that makes the upgrade viable.

    budget * (U^{y+k} - U^y) / (beta * lambda_s * (x^{y+k})^2) - lambda_s,
    clamped at zero: a user never offers a negative increment.
    """
    x_up = user.layers.rate_of(y + k)
    gain = _cumulative_utility(user, y + k) - _cumulative_utility(user, y)
    bound = user.budget * gain / (user.beta * lambda_s * x_up * x_up) - lambda_s
    return bound if bound > 0.0 else 0.0


def effective_increment(user: UserProfile, y: int, k: int,
                        lambda_s: float) -> float:
    """The increment a user offers: explicit override, else the minimum bound."""
    if user.price_increment is not None:
        return user.price_increment
    return min_price_increment(user, y, k, lambda_s)


def next_demand(user: UserProfile, state: DemandState, lambda_s: float,
                allocated: float) -> float:
    """Rate the user transmits this iteration.

    allocated is the best-response rate the current price yields.  Passive
    users take it as-is.  An active user under the threshold policy holds
    its armed target while the path price stays below the threshold and
    falls back to its base rate otherwise (nothing armed: hold current).
    Under the b-function policy the user transmits the k-step upgrade rate
    whenever the upgrade test passes at the current price, else the plain
    allocation.
    """
    if user.mode != ACTIVE or user.demand_policy is None:
        return allocated

    policy = user.demand_policy
    if policy.kind == POLICY_THRESHOLD:
        if not state.armed:
            return state.current_rate
        if lambda_s < policy.threshold:
            return user.layers.rate_of(state.target_layer)
        return state.base_rate if state.base_rate is not None else user.x_min

    if policy.kind == POLICY_B_FUNCTION:
        y = utility.attained_layer(allocated, user.layers.rates)
        k = user.upgrade_step
        if y + k > len(user.layers) or lambda_s <= 0.0:
            return allocated
        inc = effective_increment(user, y, k, lambda_s)
        if upgrade_condition(user, y, k, lambda_s, inc):
            return user.layers.rate_of(y + k)
        return allocated

    return allocated
