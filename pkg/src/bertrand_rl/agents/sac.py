"""Soft actor-critic with twin critics, soft targets, and learned temperature.

Critics evaluate (state, squashed action in [-1, 1]); the actor is a
tanh-squashed Gaussian over the price interval. The entropy temperature is
tuned toward a fixed target entropy through its own Adam state on log(alpha).
"""

from __future__ import annotations

import math

import numpy as np

from ..env import ActionSpace, EnvState, SpaceKind
from ..errors import AgentDivergedError
from ..nets import (Adam, NetworkSpec, backward, clone_params, forward, forward_cached,
                    init_params, soft_update)
from .base import Agent, normalize_state, uniform_price
from .buffers import ReplayBuffer
from . import gaussian_policy as gp


class SAC(Agent):
    """Off-policy maximum-entropy learner for continuous prices."""

    def __init__(self, space: ActionSpace, rng: np.random.Generator,
                 alpha: float = 3e-4, gamma: float = 0.99, tau: float = 0.005,
                 batch_size: int = 64, buffer_size: int = 100_000,
                 target_entropy: float = -1.0, start_steps: int = 1_000,
                 learn_every: int = 1, dtype=np.float32):
        if space.kind is not SpaceKind.CONTINUOUS:
            raise ValueError("SAC needs a continuous action space")
        self.space = space
        self.gamma = gamma
        self.tau = tau
        self.batch_size = batch_size
        self.target_entropy = target_entropy
        self.start_steps = start_steps
        self.learn_every = learn_every
        self.policy_spec = NetworkSpec(input_dim=2, output_dim=2, head="gaussian")
        self.q_spec = NetworkSpec(input_dim=3, output_dim=1, head="linear")
        self.policy = init_params(self.policy_spec, rng, dtype=dtype)
        self.q1 = init_params(self.q_spec, rng, dtype=dtype)
        self.q2 = init_params(self.q_spec, rng, dtype=dtype)
        self.q1_target = clone_params(self.q1)
        self.q2_target = clone_params(self.q2)
        self.policy_opt = Adam(self.policy, lr=alpha)
        self.q1_opt = Adam(self.q1, lr=alpha)
        self.q2_opt = Adam(self.q2, lr=alpha)
        self.log_alpha = np.zeros(1, dtype=np.float64)
        self.alpha_opt = Adam([self.log_alpha], lr=alpha)
        self.buffer = ReplayBuffer(buffer_size, state_dim=2, discrete=False)
        self._rng = rng
        self._steps = 0
        self.auto_alpha = True
        self.update_policy = True
        self.last_losses = (float("nan"), float("nan"))

    @property
    def alpha_temp(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def act(self, state: EnvState, t: int, rng: np.random.Generator) -> float:
        if t <= self.start_steps:
            return uniform_price(self.space, rng)
        s_norm = normalize_state(state, self.space)
        mean, log_std = forward(self.policy, self.policy_spec, s_norm)
        u, _ = gp.sample_pre_squash(mean, log_std, rng)
        return float(gp.squash_to_price(u, self.space))

    def observe(self, state, action, reward, next_state) -> None:
        # Critics see the squashed action coordinate, not the raw price.
        half = 0.5 * self.space.span
        a_tanh = (float(action) - self.space.lower - half) / half
        self.buffer.push(normalize_state(state, self.space), a_tanh, reward,
                         normalize_state(next_state, self.space))
        self._steps += 1
        if len(self.buffer) >= self.batch_size and self._steps % self.learn_every == 0:
            self.last_losses = self.learn()

    def _policy_forward(self, states):
        out, cache = forward_cached(self.policy, self.policy_spec, states)
        mean = np.asarray(out[:, 0], dtype=np.float64)
        log_std = np.asarray(out[:, 1], dtype=np.float64)
        return mean, log_std, cache

    def _sample_with_logp(self, mean, log_std):
        u, xi = gp.sample_pre_squash(mean, log_std, self._rng)
        logp = gp.log_prob(u, mean, log_std, self.space) + math.log(0.5 * self.space.span)
        # The affine-map constant is dropped: critics consume the tanh value,
        # so entropy is measured on the [-1, 1] coordinate.
        return np.tanh(u), u, xi, logp

    def _q_eval(self, params, states, actions_tanh):
        x = np.concatenate([states, actions_tanh[:, None]], axis=1)
        return forward(params, self.q_spec, x)[:, 0]

    def learn(self) -> tuple:
        """One critic + actor + temperature update on a replay minibatch."""
        s, a, r, s2 = self.buffer.sample(self.batch_size, self._rng)
        alpha = self.alpha_temp

        # Critic regression toward the entropy-adjusted soft target.
        mean2, log_std2, _ = self._policy_forward(s2)
        a2, _, _, logp2 = self._sample_with_logp(mean2, log_std2)
        q_next = np.minimum(self._q_eval(self.q1_target, s2, a2),
                            self._q_eval(self.q2_target, s2, a2))
        y = r + self.gamma * (q_next - alpha * logp2)
        q_loss = 0.0
        for params, opt in ((self.q1, self.q1_opt), (self.q2, self.q2_opt)):
            x = np.concatenate([s, np.asarray(a, dtype=s.dtype)[:, None]], axis=1)
            q, cache = forward_cached(params, self.q_spec, x)
            err = q[:, 0] - y
            q_loss += float(np.mean(np.square(err)))
            grads, _ = backward(params, self.q_spec, cache, (2.0 * err / len(err))[:, None])
            opt.step(params, grads)

        policy_loss = float("nan")
        if self.update_policy:
            policy_loss = self._policy_update(s, alpha)
        if not (np.isfinite(q_loss) and (not self.update_policy or np.isfinite(policy_loss))):
            raise AgentDivergedError(f"SAC loss became non-finite at step {self._steps}",
                                     step=self._steps)

        soft_update(self.q1_target, self.q1, self.tau)
        soft_update(self.q2_target, self.q2, self.tau)
        return q_loss, policy_loss

    def _policy_update(self, s, alpha: float) -> float:
        mean, log_std, cache = self._policy_forward(s)
        a_new, u, xi, logp = self._sample_with_logp(mean, log_std)

        # dQ/da through the minimum of the two online critics.
        x = np.concatenate([s, a_new[:, None]], axis=1).astype(s.dtype)
        q1v, c1 = forward_cached(self.q1, self.q_spec, x)
        q2v, c2 = forward_cached(self.q2, self.q_spec, x)
        q1v, q2v = q1v[:, 0], q2v[:, 0]
        pick1 = q1v <= q2v
        q_min = np.where(pick1, q1v, q2v)
        n = len(q_min)
        _, dx1 = backward(self.q1, self.q_spec, c1, pick1.astype(np.float64)[:, None])
        _, dx2 = backward(self.q2, self.q_spec, c2, (~pick1).astype(np.float64)[:, None])
        dq_da = np.asarray(dx1[:, 2] + dx2[:, 2], dtype=np.float64)

        loss = float(np.mean(alpha * logp - q_min))

        # Reparameterized adjoints: a = tanh(u), u = mean + std * xi.
        dtanh = 1.0 - np.square(np.tanh(u))
        lp_mean, lp_log_std = gp.reparam_log_prob_grads(u, xi, log_std)
        out_grad = np.zeros((n, 2))
        out_grad[:, 0] = alpha * lp_mean - dq_da * dtanh
        out_grad[:, 1] = alpha * lp_log_std - dq_da * dtanh * np.exp(log_std) * xi
        out_grad /= n
        grads, _ = backward(self.policy, self.policy_spec, cache, out_grad)
        self.policy_opt.step(self.policy, grads)

        if self.auto_alpha:
            # Dual objective J(alpha) = -alpha * mean(logp + target_entropy).
            gap = float(np.mean(logp) + self.target_entropy)
            self.alpha_opt.step([self.log_alpha],
                                [np.array([-self.alpha_temp * gap])])
        return loss
