"""Seed-reproducible RL pricing duopoly simulator with collusion metrics."""

__version__ = "0.1.0"

from .markets import EquilibriumInfo, MarketModel, Variant, demand, equilibrium_info, profit, solve_monopoly, solve_nash
from .env import ActionSpace, EnvState, PriceDuopoly, SpaceKind, StepRecord, logit_bounds, price_grid
from .metrics import Label, RunClassification, classify, delta, eta, kappa, rpdi
from .runner import ExperimentConfig, RunResult, RunTrace, best_response, run_batch, run_single, tune

__all__ = [
    "__version__",
    "EquilibriumInfo", "MarketModel", "Variant", "demand", "equilibrium_info",
    "profit", "solve_monopoly", "solve_nash",
    "ActionSpace", "EnvState", "PriceDuopoly", "SpaceKind", "StepRecord",
    "logit_bounds", "price_grid",
    "Label", "RunClassification", "classify", "delta", "eta", "kappa", "rpdi",
    "ExperimentConfig", "RunResult", "RunTrace", "best_response",
    "run_batch", "run_single", "tune",
]
