"""The five pricing learners behind one act/observe interface."""

from .base import Agent, EpsilonSchedule, FixedAgent, normalize_state
from .buffers import ReplayBuffer, RolloutBuffer
from .dqn import DQN
from .ppo import PPOContinuous, PPODiscrete, clipped_surrogate
from .sac import SAC
from .tql import TabularQ, greedy_action, tql_update

__all__ = [
    "Agent", "EpsilonSchedule", "FixedAgent", "normalize_state",
    "ReplayBuffer", "RolloutBuffer",
    "DQN", "PPOContinuous", "PPODiscrete", "clipped_surrogate",
    "SAC", "TabularQ", "greedy_action", "tql_update",
]
