"""Staircase bandwidth utility and its linear cost counterpart.

A layered flow draws value from every layer it has fully attained: each
layer contributes a sigmoid of its threshold rate, damped by an exponential
decay in that same rate.  Layer contributions therefore form a staircase in
the transmission rate, flat between thresholds and jumping at them.  The
network charge enters separately as a budget-normalized linear penalty, and
the two are summed into the objective a user maximizes.

All functions here are pure and scalar; per-layer parameter sequences are
aligned with the rate schedule (entry i parameterizes layer i+1).
"""

from __future__ import annotations

import math
from typing import List, Sequence, Union

DEFAULT_STEEPNESS = 1.0
DEFAULT_DECAY = 0.1

PerLayer = Union[float, Sequence[float]]


def _broadcast(value: PerLayer, n: int, default: float) -> List[float]:
    # scalar or empty -> one value per layer; sequences must already align
    if value is None:
        return [default] * n
    if isinstance(value, (int, float)):
        return [float(value)] * n
    vals = [float(v) for v in value]
    if not vals:
        return [default] * n
    if len(vals) != n:
        raise ValueError(f"expected {n} per-layer values, got {len(vals)}")
    return vals


def attained_layer(x: float, rates: Sequence[float]) -> int:
    """Highest layer index y (1-based) whose threshold is covered by x.

    The boundary is inclusive: transmitting exactly at a layer's threshold
    attains that layer.  Returns 0 when x is below the lowest threshold.
    """
    y = 0
    for i, r in enumerate(rates):
        if x >= r:
            y = i + 1
        else:
            break
    return y


def layer_utility(x: float, steepness: float) -> float:
    """Shifted sigmoid 2 / (1 + e^(-a*x)) - 1.

    Anchored so the value at x = 0 is exactly 0 and the supremum is 1.
    """
    return 2.0 / (1.0 + math.exp(-steepness * x)) - 1.0


def decay_factor(x: float, decay: float) -> float:
    """Exponential damping e^(-w*x) applied to a layer's contribution."""
    return math.exp(-decay * x)


def step_heights(
    rates: Sequence[float],
    steepness: PerLayer = DEFAULT_STEEPNESS,
    decay: PerLayer = DEFAULT_DECAY,
) -> List[float]:
    """Per-layer staircase increments: sigmoid * damping at each threshold.

    steepness and decay may be scalars (shared by every layer) or sequences
    aligned with the rate schedule.  With sensibly spaced schedules the
    heights are strictly decreasing (diminishing returns); callers that rely
    on that property should check it, since steep early thresholds can
    violate it.
    """
    n = len(rates)
    a_per = _broadcast(steepness, n, DEFAULT_STEEPNESS)
    w_per = _broadcast(decay, n, DEFAULT_DECAY)
    return [
        layer_utility(r, a) * decay_factor(r, w)
        for r, a, w in zip(rates, a_per, w_per)
    ]


def staircase_utility(
    x: float,
    rates: Sequence[float],
    steepness: PerLayer = DEFAULT_STEEPNESS,
    decay: PerLayer = DEFAULT_DECAY,
) -> float:
    """Bandwidth utility at rate x: the sum of all attained layer steps.

    Zero below the first threshold, constant between thresholds,
    non-decreasing in x.
    """
    heights = step_heights(rates, steepness, decay)
    return math.fsum(heights[: attained_layer(x, rates)])


def cost_utility(x: float, price: float, budget: float) -> float:
    """Charge-side utility 1 - x*price/budget.

    Evaluated literally: 1 at x = 0, 0 at the budget break-even point,
    negative beyond it (overspending is representable, not clamped).
    """
    return 1.0 - x * price / budget


def total_utility(
    x: float,
    price: float,
    budget: float,
    rates: Sequence[float],
    steepness: PerLayer = DEFAULT_STEEPNESS,
    decay: PerLayer = DEFAULT_DECAY,
) -> float:
    """Objective a user maximizes: staircase value plus cost term."""
    return staircase_utility(x, rates, steepness, decay) + cost_utility(
        x, price, budget
    )
