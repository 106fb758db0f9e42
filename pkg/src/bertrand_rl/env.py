"""Repeated-game pricing MDP: action spaces, state, and the simultaneous step.

The game has an infinite horizon; there is no termination flag. The state is
simply both firms' previous prices. One environment instance belongs to one
run; run several instances (with independent seeds) for concurrency.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PriceRangeError
from .markets import EquilibriumInfo, MarketModel, demand, profit


class SpaceKind(enum.Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ActionSpace:
    """Price range, either an m-point equidistant grid or the full interval."""

    kind: SpaceKind
    lower: float
    upper: float
    m: int = 0

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if self.kind is SpaceKind.DISCRETE and self.m < 2:
            raise ValueError(f"discrete space needs m >= 2, got {self.m}")

    @classmethod
    def discrete(cls, lower: float, upper: float, m: int) -> "ActionSpace":
        return cls(SpaceKind.DISCRETE, lower, upper, m)

    @classmethod
    def continuous(cls, lower: float, upper: float) -> "ActionSpace":
        return cls(SpaceKind.CONTINUOUS, lower, upper)

    @property
    def span(self) -> float:
        return self.upper - self.lower


def price_grid(space: ActionSpace) -> np.ndarray:
    """The m equidistant grid prices, endpoints exactly at the bounds."""
    if space.kind is not SpaceKind.DISCRETE:
        raise ValueError("price_grid requires a discrete action space")
    step = (space.upper - space.lower) / (space.m - 1)
    grid = space.lower + step * np.arange(space.m, dtype=np.float64)
    grid[-1] = space.upper
    return grid


def logit_bounds(eq: EquilibriumInfo, zeta: float = 0.1) -> tuple[float, float]:
    """Price bounds extending the [Nash, monopoly] band by a slack factor zeta."""
    if zeta < 0:
        raise ValueError(f"zeta must be >= 0, got {zeta}")
    width = eq.monopoly_price - eq.nash_price
    return eq.nash_price - zeta * width, eq.monopoly_price + zeta * width


@dataclass(frozen=True)
class EnvState:
    """Both firms' prices from the previous step, in firm order."""

    prev_prices: tuple[float, float]


@dataclass(frozen=True)
class StepRecord:
    t: int
    prices: tuple[float, float]
    demands: tuple[float, float]
    rewards: tuple[float, float]


@dataclass
class PriceDuopoly:
    """Two-firm simultaneous-move pricing environment.

    Discrete spaces take grid indices as actions; continuous spaces take raw
    prices. Out-of-bounds continuous prices are clamped and counted in
    ``clamp_count`` so that agent squashing bugs surface instead of silently
    disappearing.
    """

    model: MarketModel
    space: ActionSpace
    t: int = 0
    clamp_count: int = 0
    _grid: Optional[np.ndarray] = field(default=None, repr=False)
    _index: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.space.kind is SpaceKind.DISCRETE:
            self._grid = price_grid(self.space)
            self._index = {p: j for j, p in enumerate(self._grid.tolist())}

    @property
    def grid(self) -> np.ndarray:
        if self._grid is None:
            raise ValueError("continuous action space has no grid")
        return self._grid

    def index_of(self, price: float) -> int:
        """Grid index of an exact (bit-identical) grid price."""
        try:
            return self._index[price]
        except (KeyError, TypeError):
            raise ValueError(f"price {price!r} is not a grid member") from None

    def reset(self, rng: np.random.Generator) -> EnvState:
        """Draw both previous prices uniformly from the action set."""
        self.t = 0
        self.clamp_count = 0
        if self.space.kind is SpaceKind.DISCRETE:
            j0, j1 = rng.integers(0, self.space.m, size=2)
            return EnvState((float(self._grid[j0]), float(self._grid[j1])))
        p0, p1 = rng.uniform(self.space.lower, self.space.upper, size=2)
        return EnvState((float(p0), float(p1)))

    def _to_price(self, action) -> float:
        if self.space.kind is SpaceKind.DISCRETE:
            j = int(action)
            if not 0 <= j < self.space.m:
                raise PriceRangeError(f"action index {j} outside grid of size {self.space.m}")
            return float(self._grid[j])
        p = float(action)
        if not np.isfinite(p):
            raise PriceRangeError(f"continuous action {p} is not finite")
        if p < self.space.lower or p > self.space.upper:
            self.clamp_count += 1
            p = min(max(p, self.space.lower), self.space.upper)
        return p

    def step(self, state: EnvState, a0, a1) -> tuple[EnvState, StepRecord]:
        """Apply both actions at once; the submitted prices become the next state."""
        p0 = self._to_price(a0)
        p1 = self._to_price(a1)
        d0 = demand(self.model, p0, p1)
        d1 = demand(self.model, p1, p0)
        r0 = profit(self.model, p0, d0)
        r1 = profit(self.model, p1, d1)
        self.t += 1
        record = StepRecord(self.t, (p0, p1), (d0, d1), (r0, r1))
        return EnvState((p0, p1)), record
