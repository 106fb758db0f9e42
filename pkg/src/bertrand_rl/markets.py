"""Demand, profit, and equilibrium solving for three Bertrand duopoly variants.

All functions are pure and operate on immutable model values, so they are
safe to call concurrently. Prices and profits are per-firm throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from .errors import ConvergenceError, PriceRangeError


class Variant(enum.Enum):
    STANDARD = "standard"
    EDGEWORTH = "edgeworth"
    LOGIT = "logit"


@dataclass(frozen=True)
class MarketModel:
    """Economic parameters of one duopoly market.

    ``g`` (quality) and ``mu`` (substitutability) apply to the logit variant
    only; ``k`` (per-firm capacity) applies to the Edgeworth variant only.
    """

    variant: Variant
    c: float = 0.0
    g: float = 0.0
    mu: float = 0.0
    k: float = 0.0

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValueError(f"marginal cost must be >= 0, got {self.c}")
        if self.variant is Variant.EDGEWORTH and not self.k > 0.5:
            raise ValueError(f"Edgeworth capacity must exceed 0.5, got k={self.k}")
        if self.variant is Variant.LOGIT and not self.mu > 0:
            raise ValueError(f"logit substitutability must be positive, got mu={self.mu}")
        if self.variant is Variant.EDGEWORTH:
            # Joint capacity must cover demand at the monopoly price, otherwise
            # the unconstrained symmetric monopoly treatment below is invalid.
            p_m = (1.0 + self.c) / 2.0
            if not 2.0 * self.k >= 1.0 - p_m:
                raise ValueError(
                    f"joint capacity 2k={2 * self.k} below monopoly demand {1.0 - p_m}"
                )

    @classmethod
    def standard(cls, c: float = 0.0) -> "MarketModel":
        return cls(Variant.STANDARD, c=c)

    @classmethod
    def edgeworth(cls, c: float = 0.0, k: float = 0.6) -> "MarketModel":
        return cls(Variant.EDGEWORTH, c=c, k=k)

    @classmethod
    def logit(cls, c: float = 1.0, g: float = 2.0, mu: float = 0.25) -> "MarketModel":
        return cls(Variant.LOGIT, c=c, g=g, mu=mu)


@dataclass(frozen=True)
class EquilibriumInfo:
    """Per-firm Nash and monopoly benchmarks for one market."""

    nash_price: float
    monopoly_price: float
    nash_profit: float
    monopoly_profit: float

    def __post_init__(self) -> None:
        if not self.nash_price < self.monopoly_price:
            raise ValueError("Nash price must lie below the monopoly price")
        if not self.nash_profit < self.monopoly_profit:
            raise ValueError("Nash profit must lie below the monopoly profit")


def _check_price(model: MarketModel, price: float, who: str) -> None:
    if model.variant is Variant.LOGIT:
        if not math.isfinite(price):
            raise PriceRangeError(f"{who} price {price} is not finite")
        return
    if not 0.0 <= price <= 1.0:
        raise PriceRangeError(f"{who} price {price} outside admissible range [0, 1]")


def demand(model: MarketModel, p_i: float, p_other: float) -> float:
    """Quantity sold by the firm pricing at ``p_i`` against ``p_other``.

    Standard: the cheaper firm serves the whole market ``1 - p``, an exact
    price tie splits it evenly. Edgeworth: the winner is capped at capacity
    ``k`` and the loser picks up the residual. Logit: smooth shares with an
    outside option, so both firms always sell a positive quantity.
    """
    _check_price(model, p_i, "own")
    _check_price(model, p_other, "opponent")
    if model.variant is Variant.STANDARD:
        if p_i < p_other:
            return 1.0 - p_i
        if p_i == p_other:
            return 0.5 * (1.0 - p_i)
        return 0.0
    if model.variant is Variant.EDGEWORTH:
        if p_i < p_other:
            return min(model.k, 1.0 - p_i)
        if p_i == p_other:
            return 0.5 * (1.0 - p_i)
        return max(0.0, 1.0 - p_i - model.k)
    e_i = math.exp((model.g - p_i) / model.mu)
    e_other = math.exp((model.g - p_other) / model.mu)
    return e_i / (e_i + e_other + 1.0)


def profit(model: MarketModel, p_i: float, demand_i: float) -> float:
    """Profit ``(p_i - c) * demand_i``; negative when pricing below cost."""
    if demand_i < 0:
        raise ValueError(f"demand must be >= 0, got {demand_i}")
    return (p_i - model.c) * demand_i


def _symmetric_demand(model: MarketModel, p: float) -> float:
    return demand(model, p, p)


def solve_nash(model: MarketModel, tol: float = 1e-9, max_iter: int = 10_000) -> float:
    """Symmetric Nash price.

    Standard and Edgeworth reduce to marginal-cost pricing. The logit price
    is the fixed point of ``p = c + mu / (1 - d(p, p))``, iterated with
    damping 0.5 from ``p = c + mu``.
    """
    if model.variant is not Variant.LOGIT:
        return model.c
    p = model.c + model.mu
    for _ in range(max_iter):
        target = model.c + model.mu / (1.0 - _symmetric_demand(model, p))
        nxt = 0.5 * p + 0.5 * target
        if abs(nxt - p) < tol:
            return nxt
        p = nxt
    residual = abs(p - (model.c + model.mu / (1.0 - _symmetric_demand(model, p))))
    raise ConvergenceError(
        f"Nash fixed point did not converge after {max_iter} iterations, residual {residual:.3e}"
    )


def solve_monopoly(model: MarketModel, tol: float = 1e-9) -> float:
    """Symmetric price maximizing joint profit.

    Standard and Edgeworth have the closed form ``(1 + c) / 2`` (Edgeworth
    capacity never binds there, checked at model construction). The logit
    price is found by bounded scalar maximization of the symmetric per-firm
    profit ``(p - c) * d(p, p)``.
    """
    if model.variant is not Variant.LOGIT:
        return (1.0 + model.c) / 2.0
    hi = max(model.g, model.c) + 50.0 * model.mu
    res = minimize_scalar(
        lambda p: -(p - model.c) * _symmetric_demand(model, p),
        bounds=(model.c, hi),
        method="bounded",
        options={"xatol": tol},
    )
    if not res.success:
        raise ConvergenceError(f"monopoly price search failed: {res.message}")
    return float(res.x)


def equilibrium_info(model: MarketModel) -> EquilibriumInfo:
    """Solve both benchmarks and evaluate per-firm profits at the symmetric price."""
    p_n = solve_nash(model)
    p_m = solve_monopoly(model)
    pi_n = profit(model, p_n, _symmetric_demand(model, p_n))
    pi_m = profit(model, p_m, _symmetric_demand(model, p_m))
    return EquilibriumInfo(p_n, p_m, pi_n, pi_m)
