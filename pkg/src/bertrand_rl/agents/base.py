"""Common learner interface and the exploration schedule.

Each agent instance is owned by exactly one run and is driven strictly
sequentially: ``act`` for the current step, then ``observe`` with the
resulting transition. Discrete agents exchange grid indices with the
environment, continuous agents raw prices.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..env import ActionSpace, EnvState, SpaceKind


class Agent(ABC):
    """One firm's pricing policy plus its learning state."""

    @abstractmethod
    def act(self, state: EnvState, t: int, rng: np.random.Generator):
        """Choose an action (grid index or price) for step ``t``."""

    @abstractmethod
    def observe(self, state: EnvState, action, reward: float, next_state: EnvState) -> None:
        """Consume this agent's slice of the transition; may trigger learning."""


@dataclass(frozen=True)
class EpsilonSchedule:
    """Exponentially decaying exploration rate ``eps_t = exp(-beta * t)``."""

    beta: float

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError(f"decay rate must be >= 0, got {self.beta}")

    def value(self, t: int) -> float:
        return math.exp(-self.beta * t)

    @classmethod
    def for_horizon(cls, horizon: int) -> "EpsilonSchedule":
        """Decay tuned so exploration reaches 1% at the run's midpoint."""
        return cls(beta=2.0 * math.log(100.0) / horizon)


class FixedAgent(Agent):
    """Scripted agent playing one action forever; used by tuning and tests."""

    def __init__(self, action):
        self.action = action

    def act(self, state, t, rng):
        return self.action

    def observe(self, state, action, reward, next_state):
        pass


def normalize_state(state: EnvState, space: ActionSpace) -> np.ndarray:
    """Affine map of both previous prices onto [0, 1]^2 for network input."""
    lo, span = space.lower, space.span
    p0, p1 = state.prev_prices
    return np.array([(p0 - lo) / span, (p1 - lo) / span], dtype=np.float64)


def state_indices(state: EnvState, index_of) -> tuple[int, int]:
    return index_of(state.prev_prices[0]), index_of(state.prev_prices[1])


def uniform_price(space: ActionSpace, rng: np.random.Generator) -> float:
    if space.kind is SpaceKind.DISCRETE:
        raise ValueError("uniform_price is for continuous spaces")
    return float(rng.uniform(space.lower, space.upper))
