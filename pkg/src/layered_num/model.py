"""Scenario domain model: topology, user profiles, events, and JSON I/O.

A scenario file is a single JSON document with top-level keys "links",
"users", "events", "solver" and "admission".  Routes may be written either
as a node string ("ABCD", expanded to consecutive-pair links AB, BC, CD) or
as an explicit list of link ids (required when a route uses a parallel link
whose id is not a node pair).  Loading validates every structural invariant
and reports violations with the offending field path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from . import utility

PASSIVE = "passive"
ACTIVE = "active"

POLICY_THRESHOLD = "price-threshold"
POLICY_B_FUNCTION = "b-function"

EVENT_DEMAND_CHANGE = "demand-change"
EVENT_INVOKE_ADMISSION = "invoke-admission"
EVENT_SET_PRICE_FLOOR = "set-price-floor"


class ScenarioError(ValueError):
    """Raised for any structural or semantic scenario violation."""


@dataclass(frozen=True)
class Link:
    id: str
    capacity: float
    price_floor: float = 0.0


@dataclass(frozen=True)
class LayerSchedule:
    """Strictly increasing positive bandwidth thresholds, one per layer."""

    rates: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.rates)

    def __getitem__(self, i: int) -> float:
        return self.rates[i]

    def rate_of(self, layer: int) -> float:
        """Rate of a 1-based layer index."""
        if not 1 <= layer <= len(self.rates):
            raise ScenarioError(f"layer {layer} outside schedule of {len(self.rates)}")
        return self.rates[layer - 1]


@dataclass(frozen=True)
class DemandPolicy:
    """How an active user re-demands bandwidth.

    kind "price-threshold": demand the target layer while the path price is
    below the threshold, fall back to the base rate otherwise.
    kind "b-function": demand the upgrade whenever the desire-per-spend test
    passes at the current price.
    """

    kind: str
    threshold: Optional[float] = None


@dataclass(frozen=True)
class UserProfile:
    id: int
    route: Tuple[str, ...]
    budget: float
    layers: LayerSchedule
    x_min: float
    beta: float = 1.0
    mode: str = PASSIVE
    upgrade_step: int = 1
    sigmoid_steepness: Tuple[float, ...] = ()
    decay_coeff: Tuple[float, ...] = ()
    demand_policy: Optional[DemandPolicy] = None
    # Willingness to pay above the network price when bidding/upgrading.
    # None means "derive from the minimum-increment bound at use time".
    price_increment: Optional[float] = None

    def staircase(self, x: float) -> float:
        return utility.staircase_utility(
            x, self.layers.rates, self.sigmoid_steepness, self.decay_coeff
        )

    def total_utility(self, x: float, price: float) -> float:
        return utility.total_utility(
            x, price, self.budget,
            self.layers.rates, self.sigmoid_steepness, self.decay_coeff,
        )


@dataclass(frozen=True)
class Event:
    iteration: int
    kind: str
    user: Optional[int] = None
    new_layer_target: Optional[int] = None
    link: Optional[str] = None
    value: Optional[float] = None


@dataclass(frozen=True)
class SolverConfig:
    sigma0: float = 1.0
    max_iterations: int = 500
    tolerance: float = 0.01  # relative: fraction of series mean
    window: int = 100


@dataclass(frozen=True)
class AdmissionConfig:
    delta_lambda: float = 1.0
    delta_u: float = 1.0


@dataclass(frozen=True)
class Scenario:
    links: Tuple[Link, ...]
    users: Tuple[UserProfile, ...]
    events: Tuple[Event, ...] = ()
    solver: SolverConfig = field(default_factory=SolverConfig)
    admission: AdmissionConfig = field(default_factory=AdmissionConfig)

    def link_map(self) -> Dict[str, Link]:
        return {l.id: l for l in self.links}

    def user_map(self) -> Dict[int, UserProfile]:
        return {u.id: u for u in self.users}


# ---------------------------------------------------------------------------
# Route handling
# ---------------------------------------------------------------------------

def route_links(nodes: str) -> List[str]:
    """Expand a node string into consecutive-pair link ids.

    "ABCDE" -> ["AB", "BC", "CD", "DE"].  A single node makes no link.
    """
    if len(nodes) < 2:
        raise ScenarioError(f"route '{nodes}' has no links (needs at least two nodes)")
    return [nodes[i] + nodes[i + 1] for i in range(len(nodes) - 1)]


def users_on_link(scenario: Scenario, link_id: str) -> Set[int]:
    """Ids of users whose route traverses the given link."""
    if link_id not in scenario.link_map():
        raise ScenarioError(f"unknown link '{link_id}'")
    return {u.id for u in scenario.users if link_id in u.route}


# ---------------------------------------------------------------------------
# Loading and validation
# ---------------------------------------------------------------------------

def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ScenarioError(f"{where}: {msg}")


def _number(obj: dict, key: str, where: str, default=None) -> float:
    if key not in obj:
        if default is not None:
            return default
        raise ScenarioError(f"{where}: missing field '{key}'")
    v = obj[key]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool),
             f"{where}.{key}", "expected a number")
    return float(v)


def _parse_link(obj: dict, where: str) -> Link:
    _require(isinstance(obj, dict), where, "expected an object")
    lid = obj.get("id")
    _require(isinstance(lid, str) and lid != "", f"{where}.id", "expected a non-empty string")
    capacity = _number(obj, "capacity", where)
    _require(capacity > 0, f"{where}.capacity", "must be positive")
    floor = _number(obj, "price_floor", where, default=0.0)
    _require(floor >= 0, f"{where}.price_floor", "must be non-negative")
    return Link(id=lid, capacity=capacity, price_floor=floor)


def _parse_schedule(raw, where: str) -> LayerSchedule:
    _require(isinstance(raw, list) and len(raw) > 0, where, "expected a non-empty list")
    rates = []
    for i, r in enumerate(raw):
        _require(isinstance(r, (int, float)) and not isinstance(r, bool),
                 f"{where}[{i}]", "expected a number")
        _require(r > 0, f"{where}[{i}]", "layer rates must be positive")
        rates.append(float(r))
    for i in range(1, len(rates)):
        _require(rates[i] > rates[i - 1], where,
                 f"non-increasing layer schedule ({rates[i - 1]} then {rates[i]})")
    return LayerSchedule(rates=tuple(rates))


def _parse_per_layer(raw, n: int, default: float, where: str) -> Tuple[float, ...]:
    if raw is None:
        return tuple([default] * n)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        _require(raw > 0, where, "must be positive")
        return tuple([float(raw)] * n)
    _require(isinstance(raw, list), where, "expected a number or list")
    _require(len(raw) == n, where, f"expected {n} entries (one per layer), got {len(raw)}")
    out = []
    for i, v in enumerate(raw):
        _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                 f"{where}[{i}]", "expected a number")
        _require(v > 0, f"{where}[{i}]", "must be positive")
        out.append(float(v))
    return tuple(out)


def _parse_policy(raw, where: str) -> Optional[DemandPolicy]:
    if raw is None:
        return None
    _require(isinstance(raw, dict), where, "expected an object or null")
    kind = raw.get("kind")
    _require(kind in (POLICY_THRESHOLD, POLICY_B_FUNCTION), f"{where}.kind",
             f"expected '{POLICY_THRESHOLD}' or '{POLICY_B_FUNCTION}'")
    threshold = None
    if kind == POLICY_THRESHOLD:
        threshold = _number(raw, "threshold", where)
        _require(threshold > 0, f"{where}.threshold", "must be positive")
    return DemandPolicy(kind=kind, threshold=threshold)


def _parse_route(raw, link_ids: Set[str], where: str) -> Tuple[str, ...]:
    if isinstance(raw, str):
        route = route_links(raw)
    elif isinstance(raw, list):
        _require(len(raw) > 0, where, "route must be non-empty")
        _require(all(isinstance(x, str) for x in raw), where, "expected link id strings")
        route = list(raw)
    else:
        raise ScenarioError(f"{where}: expected a node string or list of link ids")
    seen = set()
    for lid in route:
        _require(lid in link_ids, where, f"route uses unknown link '{lid}'")
        _require(lid not in seen, where, f"route repeats link '{lid}'")
        seen.add(lid)
    return tuple(route)


def _parse_user(obj: dict, link_ids: Set[str], where: str) -> UserProfile:
    _require(isinstance(obj, dict), where, "expected an object")
    uid = obj.get("id")
    _require(isinstance(uid, int) and not isinstance(uid, bool) and uid >= 0,
             f"{where}.id", "expected a non-negative integer")
    route = _parse_route(obj.get("route"), link_ids, f"{where}.route")
    budget = _number(obj, "budget", where)
    _require(budget > 0, f"{where}.budget", "must be positive")
    beta = _number(obj, "beta", where, default=1.0)
    _require(beta > 0, f"{where}.beta", "must be positive")
    layers = _parse_schedule(obj.get("layer_rates"), f"{where}.layer_rates")
    x_min = _number(obj, "x_min", where)
    _require(x_min > 0, f"{where}.x_min", "must be positive")
    _require(x_min <= layers.rates[0], f"{where}.x_min",
             f"must not exceed the first layer rate ({layers.rates[0]})")
    mode = obj.get("mode", PASSIVE)
    _require(mode in (PASSIVE, ACTIVE), f"{where}.mode",
             f"expected '{PASSIVE}' or '{ACTIVE}'")
    step = obj.get("upgrade_step", 1)
    _require(isinstance(step, int) and not isinstance(step, bool) and step >= 1,
             f"{where}.upgrade_step", "expected an integer >= 1")
    n = len(layers.rates)
    steep = _parse_per_layer(obj.get("sigmoid_steepness"), n,
                             utility.DEFAULT_STEEPNESS, f"{where}.sigmoid_steepness")
    decay = _parse_per_layer(obj.get("decay_coeff"), n,
                             utility.DEFAULT_DECAY, f"{where}.decay_coeff")
    policy = _parse_policy(obj.get("demand_policy"), f"{where}.demand_policy")
    inc = obj.get("price_increment")
    if inc is not None:
        inc = _number(obj, "price_increment", where)
        _require(inc >= 0, f"{where}.price_increment", "must be non-negative")
    return UserProfile(
        id=uid, route=route, budget=budget, layers=layers, x_min=x_min,
        beta=beta, mode=mode, upgrade_step=step,
        sigmoid_steepness=steep, decay_coeff=decay,
        demand_policy=policy, price_increment=inc,
    )


def _parse_event(obj: dict, scenario_links: Set[str], where: str) -> Event:
    _require(isinstance(obj, dict), where, "expected an object")
    it = obj.get("iteration")
    _require(isinstance(it, int) and not isinstance(it, bool) and it >= 0,
             f"{where}.iteration", "expected a non-negative integer")
    kind = obj.get("kind")
    _require(kind in (EVENT_DEMAND_CHANGE, EVENT_INVOKE_ADMISSION, EVENT_SET_PRICE_FLOOR),
             f"{where}.kind", "unknown event kind")
    user = obj.get("user")
    target = obj.get("new_layer_target")
    link = obj.get("link")
    value = obj.get("value")
    if kind == EVENT_DEMAND_CHANGE:
        _require(isinstance(user, int) and not isinstance(user, bool),
                 f"{where}.user", "expected a user id")
        _require(isinstance(target, int) and not isinstance(target, bool) and target >= 1,
                 f"{where}.new_layer_target", "expected a 1-based layer index")
    elif kind == EVENT_SET_PRICE_FLOOR:
        _require(isinstance(link, str) and link in scenario_links,
                 f"{where}.link", "expected a known link id")
        value = _number(obj, "value", where)
        _require(value >= 0, f"{where}.value", "must be non-negative")
    return Event(iteration=it, kind=kind, user=user,
                 new_layer_target=target, link=link, value=value)


def _parse_solver(obj, where: str) -> SolverConfig:
    if obj is None:
        return SolverConfig()
    _require(isinstance(obj, dict), where, "expected an object")
    sigma0 = _number(obj, "sigma0", where, default=SolverConfig.sigma0)
    _require(sigma0 > 0, f"{where}.sigma0", "must be positive")
    max_it = obj.get("max_iterations", SolverConfig.max_iterations)
    _require(isinstance(max_it, int) and not isinstance(max_it, bool) and max_it >= 0,
             f"{where}.max_iterations", "expected an integer >= 0")
    tol = _number(obj, "tolerance", where, default=SolverConfig.tolerance)
    _require(tol > 0, f"{where}.tolerance", "must be positive")
    window = obj.get("window", SolverConfig.window)
    _require(isinstance(window, int) and not isinstance(window, bool) and window >= 2,
             f"{where}.window", "expected an integer >= 2")
    return SolverConfig(sigma0=sigma0, max_iterations=max_it, tolerance=tol, window=window)


def _parse_admission(obj, where: str) -> AdmissionConfig:
    if obj is None:
        return AdmissionConfig()
    _require(isinstance(obj, dict), where, "expected an object")
    dl = _number(obj, "delta_lambda", where, default=AdmissionConfig.delta_lambda)
    du = _number(obj, "delta_u", where, default=AdmissionConfig.delta_u)
    _require(dl >= 0, f"{where}.delta_lambda", "must be non-negative")
    _require(du >= 0, f"{where}.delta_u", "must be non-negative")
    return AdmissionConfig(delta_lambda=dl, delta_u=du)


def load_scenario(source: Union[str, Path, dict]) -> Scenario:
    """Parse and validate a scenario from a JSON file path or a dict.

    Raises ScenarioError naming the offending field; JSON syntax errors keep
    the decoder's line/column information.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{source}: invalid JSON: {e}") from e
    else:
        doc = source
    _require(isinstance(doc, dict), "scenario", "top level must be an object")

    raw_links = doc.get("links")
    _require(isinstance(raw_links, list), "links", "expected a list")
    links = [_parse_link(l, f"links[{i}]") for i, l in enumerate(raw_links)]
    link_ids = set()
    for i, l in enumerate(links):
        _require(l.id not in link_ids, f"links[{i}].id", f"duplicate link id '{l.id}'")
        link_ids.add(l.id)

    raw_users = doc.get("users", [])
    _require(isinstance(raw_users, list), "users", "expected a list")
    users = [_parse_user(u, link_ids, f"users[{i}]") for i, u in enumerate(raw_users)]
    user_ids = set()
    for i, u in enumerate(users):
        _require(u.id not in user_ids, f"users[{i}].id", f"duplicate user id {u.id}")
        user_ids.add(u.id)

    raw_events = doc.get("events", [])
    _require(isinstance(raw_events, list), "events", "expected a list")
    events = [_parse_event(e, link_ids, f"events[{i}]") for i, e in enumerate(raw_events)]
    for i in range(1, len(events)):
        _require(events[i].iteration >= events[i - 1].iteration, f"events[{i}]",
                 "events must be sorted by iteration")
    for i, e in enumerate(events):
        if e.kind == EVENT_DEMAND_CHANGE:
            _require(e.user in user_ids, f"events[{i}].user", f"unknown user {e.user}")
            target_user = next(u for u in users if u.id == e.user)
            _require(e.new_layer_target <= len(target_user.layers),
                     f"events[{i}].new_layer_target",
                     f"layer {e.new_layer_target} outside user {e.user}'s schedule")
            _require(target_user.demand_policy is not None, f"events[{i}]",
                     f"user {e.user} has no demand policy to arm")

    solver = _parse_solver(doc.get("solver"), "solver")
    admission = _parse_admission(doc.get("admission"), "admission")

    return Scenario(links=tuple(links), users=tuple(users), events=tuple(events),
                    solver=solver, admission=admission)


def serialize(scenario: Scenario) -> dict:
    """Inverse of load_scenario: a dict that reloads to an equal Scenario."""
    doc: dict = {
        "links": [
            {"id": l.id, "capacity": l.capacity, "price_floor": l.price_floor}
            for l in scenario.links
        ],
        "users": [],
        "events": [],
        "solver": {
            "sigma0": scenario.solver.sigma0,
            "max_iterations": scenario.solver.max_iterations,
            "tolerance": scenario.solver.tolerance,
            "window": scenario.solver.window,
        },
        "admission": {
            "delta_lambda": scenario.admission.delta_lambda,
            "delta_u": scenario.admission.delta_u,
        },
    }
    for u in scenario.users:
        entry: dict = {
            "id": u.id,
            "route": list(u.route),
            "budget": u.budget,
            "beta": u.beta,
            "layer_rates": list(u.layers.rates),
            "x_min": u.x_min,
            "mode": u.mode,
            "upgrade_step": u.upgrade_step,
            "sigmoid_steepness": list(u.sigmoid_steepness),
            "decay_coeff": list(u.decay_coeff),
        }
        if u.demand_policy is not None:
            policy = {"kind": u.demand_policy.kind}
            if u.demand_policy.threshold is not None:
                policy["threshold"] = u.demand_policy.threshold
            entry["demand_policy"] = policy
        if u.price_increment is not None:
            entry["price_increment"] = u.price_increment
        doc["users"].append(entry)
    for e in scenario.events:
        entry = {"iteration": e.iteration, "kind": e.kind}
        if e.user is not None:
            entry["user"] = e.user
        if e.new_layer_target is not None:
            entry["new_layer_target"] = e.new_layer_target
        if e.link is not None:
            entry["link"] = e.link
        if e.value is not None:
            entry["value"] = e.value
        doc["events"].append(entry)
    return doc
