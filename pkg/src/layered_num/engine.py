"""The iteration loop: prices out, rates back, events on schedule.

Each iteration runs in a fixed order that the rest of the suite depends
on: (1) path prices from the current link prices, (2) every user's best
response followed by active-demand overrides, (3) per-link subgradient
price updates against the aggregate of the step-2 rates, (4) scheduled
events, (5) trace records of the post-event state.  The order is part of
the contract because transients change if it changes.

Admission events run the three-step protocol: raise prices to per-link
floors (floors stay active from then on), collect bids, select greedily by
score.  Rejected users are dismissed for the remainder of the run and
their flows drop in the same iteration's records.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

from . import admission as adm
from . import demand as dem
from . import pricing
from . import utility
from .model import (
    EVENT_DEMAND_CHANGE,
    EVENT_INVOKE_ADMISSION,
    EVENT_SET_PRICE_FLOOR,
    Event,
    Scenario,
    ScenarioError,
)
from .trace import Trace

logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """Raised when a run hits a non-finite value or an invalid event."""


@dataclass
class OscillationMetric:
    window: int
    amplitude: float
    flag: bool


def detect_oscillation(series: Sequence[float], window: int,
                       threshold: float) -> OscillationMetric:
    """Amplitude (max - min) over the trailing window, flagged above threshold."""
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(series) < window:
        raise ValueError(f"series of {len(series)} shorter than window {window}")
    tail = series[-window:]
    amplitude = max(tail) - min(tail)
    return OscillationMetric(window=window, amplitude=amplitude,
                             flag=amplitude > threshold)


def converged(series: Sequence[float], tol: float, window: int) -> bool:
    """True iff max - min over the trailing window is below tol."""
    if len(series) < window:
        raise ValueError(f"series of {len(series)} shorter than window {window}")
    tail = series[-window:]
    return max(tail) - min(tail) < tol


def relative_tol(series: Sequence[float], fraction: float) -> float:
    """Tolerance as a fraction of the series mean, floored for flat-zero series."""
    mean = sum(series) / len(series) if series else 0.0
    return max(fraction * abs(mean), 1e-9)


@dataclass
class SimState:
    """Everything the loop mutates between iterations."""

    iteration: int
    prices: Dict[str, float]
    demand_states: Dict[int, dem.DemandState]
    admitted: Dict[int, bool]
    # Links whose price floor is active (admission has been invoked or a
    # floor event fired); before that the projection is plain max(0, .).
    floored_links: Set[str] = field(default_factory=set)
    # Effective floor values; seeded from link fields, events may override.
    floor_values: Dict[str, float] = field(default_factory=dict)


class Engine:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.links = scenario.links
        self.users = scenario.users
        self._events_by_iter: Dict[int, List[Event]] = {}
        for e in scenario.events:
            self._events_by_iter.setdefault(e.iteration, []).append(e)
        self._last_admission: Optional[dict] = None

    # -- state ----------------------------------------------------------

    def initial_state(self) -> SimState:
        return SimState(
            iteration=0,
            prices={l.id: 0.0 for l in self.links},
            demand_states={u.id: dem.DemandState(current_rate=u.x_min)
                           for u in self.users},
            admitted={u.id: True for u in self.users},
            floor_values={l.id: l.price_floor for l in self.links},
        )

    # -- loop -------------------------------------------------------------

    def run(self) -> Trace:
        scenario = self.scenario
        state = self.initial_state()
        trace = Trace(link_ids=tuple(l.id for l in self.links),
                      user_ids=tuple(u.id for u in self.users))
        for t in range(scenario.solver.max_iterations):
            state.iteration = t
            prices_seen = dict(state.prices)

            # (1) path prices
            path_prices = {
                u.id: pricing.path_price(prices_seen, u.route)
                for u in self.users
            }

            # (2) best responses, then active-demand overrides
            rates: Dict[int, float] = {}
            for u in self.users:
                ds = state.demand_states[u.id]
                if not state.admitted[u.id]:
                    rates[u.id] = 0.0
                    ds.current_rate = 0.0
                    continue
                lam = path_prices[u.id]
                allocated = pricing.user_rate(u, lam)
                x = dem.next_demand(u, ds, lam, allocated)
                if not math.isfinite(x):
                    raise SimulationError(
                        f"non-finite rate at iteration {t} for user {u.id}")
                rates[u.id] = x
                ds.current_rate = x

            # (3) subgradient price updates against aggregate load
            sigma = pricing.step_size(scenario.solver.sigma0, t)
            for link in self.links:
                load = sum(rates[u.id] for u in self.users if link.id in u.route)
                floor = (state.floor_values[link.id]
                         if link.id in state.floored_links else None)
                new_price = pricing.update_link_price(
                    state.prices[link.id], sigma, link.capacity, load, floor)
                if not math.isfinite(new_price):
                    raise SimulationError(
                        f"non-finite price at iteration {t} for link {link.id}")
                state.prices[link.id] = new_price

            # (4) scheduled events
            applied = []
            for event in self._events_by_iter.get(t, []):
                note = self.apply_event(state, event)
                applied.append((event.kind, note))

            # (5) records: post-event snapshot of this iteration
            for link in self.links:
                trace.add_link(t, link.id, prices_seen[link.id])
            for u in self.users:
                x = state.demand_states[u.id].current_rate
                layer = utility.attained_layer(x, u.layers.rates)
                trace.add_user(t, u.id, x, layer, state.admitted[u.id])
            for kind, note in applied:
                trace.add_event(t, kind, note)
                if kind == EVENT_INVOKE_ADMISSION:
                    trace.admissions.append(self._last_admission)
        return trace

    # -- events -----------------------------------------------------------

    def apply_event(self, state: SimState, event: Event) -> str:
        """Apply one event to the state; returns a human-readable note."""
        if event.kind == EVENT_DEMAND_CHANGE:
            user = self.scenario.user_map().get(event.user)
            if user is None:
                raise SimulationError(f"demand-change for unknown user {event.user}")
            ds = state.demand_states[user.id]
            ds.base_rate = ds.current_rate
            ds.target_layer = event.new_layer_target
            target = user.layers.rate_of(event.new_layer_target)
            logger.info("iteration %d: user %d armed for layer %d (rate %s)",
                        state.iteration, user.id, event.new_layer_target, target)
            return f"user {user.id} targets layer {event.new_layer_target} rate {target}"

        if event.kind == EVENT_SET_PRICE_FLOOR:
            if event.link not in state.prices:
                raise SimulationError(f"set-price-floor for unknown link {event.link}")
            state.floored_links.add(event.link)
            state.floor_values[event.link] = event.value
            if state.prices[event.link] < event.value:
                state.prices[event.link] = event.value
            return f"link {event.link} floor {event.value}"

        if event.kind == EVENT_INVOKE_ADMISSION:
            return self._run_admission(state)

        raise SimulationError(f"unknown event kind '{event.kind}'")

    def _run_admission(self, state: SimState) -> str:
        scenario = self.scenario
        # Step one: raise prices to floors; floors stay active afterwards.
        floors = dict(state.floor_values)
        state.prices = adm.price_floor_apply(state.prices, floors)
        state.floored_links.update(floors)

        # Step two: bids from every currently admitted user.
        weights = adm.AdmissionWeights(
            delta_lambda=scenario.admission.delta_lambda,
            delta_u=scenario.admission.delta_u)
        scored = []
        routes = {}
        for u in self.users:
            if not state.admitted[u.id]:
                continue
            lam = pricing.path_price(state.prices, u.route)
            # A priced signal is needed to rank bids; an unpriced path
            # scores against a unit price (ordering is scale-free).
            lam_eff = lam if lam > 0 else 1.0
            ds = state.demand_states[u.id]
            target_rate = None
            if ds.armed:
                target_rate = u.layers.rate_of(ds.target_layer)
            bid = adm.user_bid(u, lam_eff, target_rate)
            scored.append((bid, adm.admission_score(bid, lam_eff, u, weights)))
            routes[u.id] = u.route

        # Step three: greedy selection, rejected users dismissed for good.
        capacities = {l.id: l.capacity for l in self.links}
        result = adm.greedy_select(scored, capacities, routes)
        for uid in result.rejected:
            state.admitted[uid] = False
            state.demand_states[uid].current_rate = 0.0
        admitted_ids = sorted(result.admitted)
        rejected_ids = sorted(result.rejected)
        self._last_admission = {
            "iteration": state.iteration,
            "admitted": admitted_ids,
            "rejected": rejected_ids,
            "objective": result.objective,
        }
        logger.info("iteration %d: admission admitted=%s rejected=%s",
                    state.iteration, admitted_ids, rejected_ids)
        return ("admitted " + " ".join(map(str, admitted_ids)) +
                "; dismissed " + (" ".join(map(str, rejected_ids)) or "none"))


def run(scenario: Scenario) -> Trace:
    """Execute a scenario start to finish; deterministic for fixed input."""
    if scenario.solver.max_iterations < 0:
        raise ScenarioError("max_iterations must be non-negative")
    return Engine(scenario).run()


# ---------------------------------------------------------------------------
# Run summaries
# ---------------------------------------------------------------------------

def summarize(trace: Trace, scenario: Scenario) -> dict:
    """Trace-derived digest: convergence flags, oscillation spans, admissions.

    Everything here is recomputed from trace series so the summary can be
    checked against the trace it describes.
    """
    solver = scenario.solver
    window = solver.window
    out: dict = {
        "iterations": trace.iterations(),
        "links": {},
        "users": {},
        "admissions": trace.admissions,
        "events": [
            {"iteration": t, "kind": kind, "note": note}
            for t, kind, note in trace.event_markers()
        ],
    }
    for link_id in trace.link_ids:
        series = trace.link_price_series(link_id)
        out["links"][link_id] = {
            "final_price": series[-1] if series else None,
            "converged": _tail_converged(series, solver.tolerance, window),
            "oscillation_spans": _oscillation_spans(series, window),
        }
    for user_id in trace.user_ids:
        series = trace.user_rate_series(user_id)
        admitted = trace.user_admitted_series(user_id)
        out["users"][str(user_id)] = {
            "final_rate": series[-1] if series else None,
            "converged": _tail_converged(series, solver.tolerance, window),
            "admitted": admitted[-1] if admitted else True,
        }
    return out


def _tail_converged(series: List[float], fraction: float, window: int) -> Optional[bool]:
    if len(series) < window:
        return None
    return converged(series, relative_tol(series, fraction), window)


def _oscillation_spans(series: List[float], window: int,
                       fraction: float = 0.05) -> List[List[int]]:
    """Contiguous iteration spans where rolling amplitude exceeds 5% of mean."""
    if len(series) < window:
        return []
    threshold = relative_tol(series, fraction)
    spans: List[List[int]] = []
    flagging = False
    for end in range(window - 1, len(series)):
        tail = series[end - window + 1:end + 1]
        amplitude = max(tail) - min(tail)
        if amplitude > threshold:
            if not flagging:
                spans.append([end, end])
                flagging = True
            else:
                spans[-1][1] = end
        else:
            flagging = False
    return spans


def text_digest(summary: dict) -> str:
    """One-screen human rendering of a summary dict."""
    lines = [f"iterations: {summary['iterations']}"]
    for link_id, info in summary["links"].items():
        spans = ",".join(f"{a}-{b}" for a, b in info["oscillation_spans"]) or "-"
        lines.append(
            f"link {link_id}: final price {info['final_price']:.4g} "
            f"converged={info['converged']} oscillation={spans}")
    for user_id, info in summary["users"].items():
        status = "admitted" if info["admitted"] else "dismissed"
        lines.append(
            f"user {user_id}: final rate {info['final_rate']:.4g} "
            f"converged={info['converged']} {status}")
    for a in summary["admissions"]:
        lines.append(
            f"admission @ {a['iteration']}: admitted {a['admitted']} "
            f"rejected {a['rejected']} objective {a['objective']:.4g}")
    return "\n".join(lines)
