"""Tabular Q-learning over the m x m grid-price state space."""

from __future__ import annotations

import numpy as np

from ..env import ActionSpace, EnvState, SpaceKind
from .base import Agent, EpsilonSchedule


def tql_update(q: np.ndarray, s: tuple, a: int, r: float, s_next: tuple,
               alpha: float, gamma: float) -> None:
    """In-place Bellman mixing update of the single cell (s, a)."""
    q[s][a] = (1.0 - alpha) * q[s][a] + alpha * (r + gamma * q[s_next].max())


def greedy_action(q: np.ndarray, s: tuple) -> int:
    """Highest-valued action, ties broken by the lowest index."""
    return int(np.argmax(q[s]))


class TabularQ(Agent):
    """Off-policy tabular learner with epsilon-greedy exploration.

    The table starts at zero, which keeps early play optimistic-free and
    makes single-update arithmetic exactly reproducible.
    """

    def __init__(self, space: ActionSpace, alpha: float, gamma: float,
                 schedule: EpsilonSchedule, index_of):
        if space.kind is not SpaceKind.DISCRETE:
            raise ValueError("tabular Q-learning needs a discrete action space")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"learning rate must lie in [0, 1], got {alpha}")
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {gamma}")
        m = space.m
        self.q = np.zeros((m, m, m), dtype=np.float64)
        self.alpha = alpha
        self.gamma = gamma
        self.schedule = schedule
        self.m = m
        self._index_of = index_of

    def _indices(self, state: EnvState) -> tuple:
        return (self._index_of(state.prev_prices[0]), self._index_of(state.prev_prices[1]))

    def act(self, state: EnvState, t: int, rng: np.random.Generator) -> int:
        if rng.random() < self.schedule.value(t):
            return int(rng.integers(self.m))
        return greedy_action(self.q, self._indices(state))

    def observe(self, state, action, reward, next_state) -> None:
        tql_update(self.q, self._indices(state), action, reward,
                   self._indices(next_state), self.alpha, self.gamma)
