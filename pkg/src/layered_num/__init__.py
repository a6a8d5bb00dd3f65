"""Network utility maximization with multi-layered user utilities.

The package pairs a dual-decomposition congestion-pricing loop with users
whose utility is a staircase over discrete rate layers.  It adds adaptive
demand upgrades, greedy admission control with an exhaustive oracle for
small instances, and a CSV/JSON trace pipeline for downstream plotting.
"""

from .admission import (
    AdmissionResult,
    AdmissionWeights,
    Bid,
    admission_score,
    greedy_select,
    knapsack_oracle,
    suboptimal_instance,
    user_bid,
)
from .demand import DemandState, desire, min_price_increment, next_demand, upgrade_condition
from .engine import Engine, OscillationMetric, converged, detect_oscillation, run, summarize
from .model import (
    AdmissionConfig,
    Event,
    LayerSchedule,
    Link,
    Scenario,
    ScenarioError,
    SolverConfig,
    UserProfile,
    load_scenario,
    route_links,
    serialize,
    users_on_link,
)
from .pricing import path_price, step_size, update_link_price, user_rate
from .trace import Trace, TraceRecord, read_csv
from .utility import (
    attained_layer,
    cost_utility,
    layer_utility,
    staircase_utility,
    step_heights,
    total_utility,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissionConfig",
    "AdmissionResult",
    "AdmissionWeights",
    "Bid",
    "DemandState",
    "Engine",
    "Event",
    "LayerSchedule",
    "Link",
    "OscillationMetric",
    "Scenario",
    "ScenarioError",
    "SolverConfig",
    "Trace",
    "TraceRecord",
    "UserProfile",
    "admission_score",
    "attained_layer",
    "converged",
    "cost_utility",
    "desire",
    "detect_oscillation",
    "greedy_select",
    "knapsack_oracle",
    "layer_utility",
    "load_scenario",
    "min_price_increment",
    "next_demand",
    "path_price",
    "read_csv",
    "route_links",
    "run",
    "serialize",
    "staircase_utility",
    "step_heights",
    "step_size",
    "suboptimal_instance",
    "summarize",
    "total_utility",
    "update_link_price",
    "upgrade_condition",
    "user_bid",
    "user_rate",
    "users_on_link",
]
