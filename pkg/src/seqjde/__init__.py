"""Sequential joint detection and estimation for linear Gaussian observations.

Observing pairs ``(y_t, h_t)`` with ``y_t = x*h_t + w_t``, the library
calibrates the energy threshold of the optimal stopping rule, applies the
estimation-aware decision rule and the posterior-mean estimator at the time
of stopping, and validates the closed-form combined cost by Monte Carlo.
"""

from .engine import TripletOutcome, predicted_cost, run_sequential
from .errors import (
    ChannelFileError,
    HorizonExhausted,
    InfeasibleConstraint,
    InvalidCosts,
    NumericalError,
    QuadratureNonConvergence,
    SeqjdeError,
)
from .gfunc import (
    Calibration,
    GPoint,
    Regime,
    g_eval,
    g_eval_quadrature,
    g_limits,
    g_point,
    g_root,
    region,
    solve_gamma,
)
from .model import CostWeights, Hypothesis, ModelParams, admissible_cost_bound
from .sim import (
    Ar1,
    ChannelModel,
    Constant,
    CostReport,
    FromFile,
    IidGaussian,
    Rayleigh,
    ScenarioConfig,
    compare_schemes,
    gen_channel,
    monte_carlo,
    sample_scenario,
    separate_decide,
)
from .stats import (
    SufficientStats,
    decide,
    estimate,
    init,
    log_likelihood_ratio,
    posterior_variance,
    update,
)

__version__ = "0.1.0"

__all__ = [
    "Ar1",
    "Calibration",
    "ChannelFileError",
    "ChannelModel",
    "Constant",
    "CostReport",
    "CostWeights",
    "FromFile",
    "GPoint",
    "HorizonExhausted",
    "Hypothesis",
    "IidGaussian",
    "InfeasibleConstraint",
    "InvalidCosts",
    "ModelParams",
    "NumericalError",
    "QuadratureNonConvergence",
    "Rayleigh",
    "Regime",
    "ScenarioConfig",
    "SeqjdeError",
    "SufficientStats",
    "TripletOutcome",
    "admissible_cost_bound",
    "compare_schemes",
    "decide",
    "estimate",
    "g_eval",
    "g_eval_quadrature",
    "g_limits",
    "g_point",
    "g_root",
    "gen_channel",
    "init",
    "log_likelihood_ratio",
    "monte_carlo",
    "posterior_variance",
    "predicted_cost",
    "region",
    "run_sequential",
    "sample_scenario",
    "separate_decide",
    "solve_gamma",
    "update",
]
