"""Experience storage for the off-policy and on-policy learners."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Fixed-capacity ring of (s, a, r, s') transitions in arrival order.

    Minibatches are drawn uniformly without replacement within a batch.
    """

    def __init__(self, capacity: int, state_dim: int, discrete: bool, dtype=np.float32):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=dtype)
        self.next_states = np.zeros((capacity, state_dim), dtype=dtype)
        self.rewards = np.zeros(capacity, dtype=dtype)
        if discrete:
            self.actions = np.zeros(capacity, dtype=np.int64)
        else:
            self.actions = np.zeros(capacity, dtype=dtype)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action, reward, next_state) -> None:
        i = self._next
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch: int, rng: np.random.Generator):
        if batch > self._size:
            raise ValueError(f"cannot sample {batch} from buffer of size {self._size}")
        idx = rng.choice(self._size, size=batch, replace=False)
        return (self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])


class RolloutBuffer:
    """On-policy segment storage, cleared after each policy update.

    ``aux`` holds the pre-squash Gaussian draw for continuous policies and is
    unused by discrete ones. ``advantages``/``returns`` are filled by the
    collector once the segment completes; advantages are kept raw here and
    normalized at update time.
    """

    def __init__(self, horizon: int, state_dim: int, discrete: bool):
        self.horizon = horizon
        self.states = np.zeros((horizon, state_dim), dtype=np.float64)
        self.actions = np.zeros(horizon, dtype=np.int64 if discrete else np.float64)
        self.aux = np.zeros(horizon, dtype=np.float64)
        self.log_probs = np.zeros(horizon, dtype=np.float64)
        self.values = np.zeros(horizon, dtype=np.float64)
        self.rewards = np.zeros(horizon, dtype=np.float64)
        self.advantages = np.zeros(horizon, dtype=np.float64)
        self.returns = np.zeros(horizon, dtype=np.float64)
        self.size = 0

    @property
    def full(self) -> bool:
        return self.size == self.horizon

    def push(self, state, action, log_prob, value, reward, aux=0.0) -> None:
        if self.full:
            raise ValueError("rollout buffer already full")
        i = self.size
        self.states[i] = state
        self.actions[i] = action
        self.aux[i] = aux
        self.log_probs[i] = log_prob
        self.values[i] = value
        self.rewards[i] = reward
        self.size += 1

    def fill_gae(self, bootstrap_value: float, gamma: float, lam: float) -> None:
        """Generalized advantage estimation over the stored segment.

        The segment is a slice of a continuing task, so the value after the
        last stored step enters as a bootstrap rather than a terminal zero.
        """
        adv = 0.0
        next_value = bootstrap_value
        for i in range(self.size - 1, -1, -1):
            td = self.rewards[i] + gamma * next_value - self.values[i]
            adv = td + gamma * lam * adv
            self.advantages[i] = adv
            next_value = self.values[i]
        self.returns[: self.size] = self.advantages[: self.size] + self.values[: self.size]

    def clear(self) -> None:
        self.size = 0
