"""Deep Q-learning with experience replay and a periodically synced target net."""

from __future__ import annotations

import numpy as np

from ..env import ActionSpace, EnvState, SpaceKind
from ..errors import AgentDivergedError
from ..nets import Adam, NetworkSpec, backward, clone_params, forward, forward_cached, init_params
from .base import Agent, EpsilonSchedule, normalize_state
from .buffers import ReplayBuffer


class DQN(Agent):
    """Epsilon-greedy value learner over the discrete price grid.

    Networks run in float32 by default: the 2x256 topology is matmul-bound
    on CPU and single precision is four times faster here at no cost to the
    control task.
    """

    def __init__(self, space: ActionSpace, rng: np.random.Generator,
                 alpha: float = 1e-4, gamma: float = 0.99,
                 schedule: EpsilonSchedule = EpsilonSchedule(0.0),
                 buffer_size: int = 50_000, batch_size: int = 64,
                 target_sync: int = 1_000, warmup: int = 1_000,
                 learn_every: int = 1, dtype=np.float32):
        if space.kind is not SpaceKind.DISCRETE:
            raise ValueError("DQN needs a discrete action space")
        self.space = space
        self.gamma = gamma
        self.schedule = schedule
        self.batch_size = batch_size
        self.target_sync = target_sync
        self.warmup = warmup
        self.learn_every = learn_every
        self.spec = NetworkSpec(input_dim=2, output_dim=space.m, head="linear")
        self.online = init_params(self.spec, rng, dtype=dtype)
        self.target = clone_params(self.online)
        self.opt = Adam(self.online, lr=alpha)
        self.buffer = ReplayBuffer(buffer_size, state_dim=2, discrete=True)
        self._rng = rng
        self._steps = 0
        self.last_loss = float("nan")

    def act(self, state: EnvState, t: int, rng: np.random.Generator) -> int:
        if rng.random() < self.schedule.value(t):
            return int(rng.integers(self.space.m))
        return self.greedy(state)

    def greedy(self, state: EnvState) -> int:
        qs = forward(self.online, self.spec, normalize_state(state, self.space))
        return int(np.argmax(qs))

    def observe(self, state, action, reward, next_state) -> None:
        self.buffer.push(normalize_state(state, self.space), action, reward,
                         normalize_state(next_state, self.space))
        self._steps += 1
        if (self._steps >= self.warmup and len(self.buffer) >= self.batch_size
                and self._steps % self.learn_every == 0):
            self.learn()
        if self._steps % self.target_sync == 0:
            self.target = clone_params(self.online)

    def learn(self) -> float:
        """One squared-TD-error gradient step on a uniform replay minibatch."""
        s, a, r, s2 = self.buffer.sample(self.batch_size, self._rng)
        q_next = forward(self.target, self.spec, s2).max(axis=1)
        y = r + self.gamma * q_next
        q_all, cache = forward_cached(self.online, self.spec, s)
        rows = np.arange(len(a))
        td = q_all[rows, a] - y
        loss = float(np.mean(np.square(td)))
        if not np.isfinite(loss):
            raise AgentDivergedError(f"DQN loss became non-finite at step {self._steps}",
                                     step=self._steps)
        out_grad = np.zeros_like(q_all)
        out_grad[rows, a] = 2.0 * td / len(a)
        grads, _ = backward(self.online, self.spec, cache, out_grad)
        self.opt.step(self.online, grads)
        self.last_loss = loss
        return loss
