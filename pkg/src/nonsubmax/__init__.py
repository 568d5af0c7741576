"""Greedy maximization of monotone, possibly nonsubmodular set functions under
several monotone constraints, with ratio/curvature tools, a Kalman sensor
scheduling objective, a sequential latency model and experiment harnesses."""

from .core import (
    CardinalityFunction,
    ConstraintSpec,
    CoverageFunction,
    Element,
    GroundSet,
    ModularFunction,
    ProblemInstance,
    SetFunction,
    TableFunction,
    constraint_marginal,
    evaluate,
    is_feasible,
    marginal_gain,
    validate_instance,
)
from .errors import *  # noqa: F401,F403
from .greedy import BlockTrace, GeneralTrace, general_greedy, parallel_greedy
from .kalman import KalmanInstance, KalmanObjective, f_s, g_value, prop1_bounds, riccati_step
from .latency import (
    LatencyFunction,
    LatencyProfile,
    check_assumption3,
    h_c,
    latency_curvature_bound,
    prop2_curvature_bound,
    seq_latency,
)
from .oracle import OracleResult, brute_force_opt, exhaustive_feasible
from .ratios import (
    GuaranteeInputs,
    RatioReport,
    exact_ratios,
    guarantee_inputs,
    greedy_choice_ratios,
    greedy_submodularity_ratio,
    matroid_bound,
    remark1_bound,
    remark2_bound,
    theorem1_bound,
    theorem2_bound,
)

__version__ = "0.1.0"
