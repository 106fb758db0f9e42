"""Proximal policy optimization with a clipped surrogate, discrete and continuous.

Both variants share the collect/update cycle: fill an on-policy segment,
estimate advantages with GAE, then run several epochs of clipped minibatch
updates on separate policy and value networks. The probability ratio is
clipped and, additionally, gradients are capped by global norm.
"""

from __future__ import annotations

import numpy as np

from ..env import ActionSpace, EnvState, SpaceKind
from ..nets import (Adam, NetworkSpec, backward, clip_grad_norm, forward, forward_cached,
                    init_params, log_softmax)
from .base import Agent, normalize_state
from .buffers import RolloutBuffer
from . import gaussian_policy as gp


def clipped_surrogate(log_ratio, advantages, clip: float) -> float:
    """Mean clipped policy objective (to minimize); pure function for oracles."""
    ratio = np.exp(log_ratio)
    lo, hi = 1.0 - clip, 1.0 + clip
    return float(-np.mean(np.minimum(ratio * advantages,
                                     np.clip(ratio, lo, hi) * advantages)))


class _PPOBase(Agent):
    def __init__(self, space: ActionSpace, rng: np.random.Generator, *, discrete: bool,
                 alpha: float = 5e-5, gamma: float = 0.99, rollout: int = 2048,
                 epochs: int = 10, minibatch: int = 64, clip: float = 0.2,
                 gae_lambda: float = 0.95, ent_coef: float = 0.01, vf_coef: float = 0.5,
                 max_grad_norm: float = 0.5, dtype=np.float32):
        self.space = space
        self.gamma = gamma
        self.rollout = rollout
        self.epochs = epochs
        self.minibatch = minibatch
        self.clip = clip
        self.gae_lambda = gae_lambda
        self.ent_coef = ent_coef
        self.vf_coef = vf_coef
        self.max_grad_norm = max_grad_norm
        self._discrete = discrete
        out_dim = space.m if discrete else 2
        head = "categorical" if discrete else "gaussian"
        self.policy_spec = NetworkSpec(input_dim=2, output_dim=out_dim, head=head)
        self.value_spec = NetworkSpec(input_dim=2, output_dim=1, head="linear")
        self.policy = init_params(self.policy_spec, rng, dtype=dtype)
        self.value = init_params(self.value_spec, rng, dtype=dtype)
        self.policy_opt = Adam(self.policy, lr=alpha)
        self.value_opt = Adam(self.value, lr=alpha)
        self.buffer = RolloutBuffer(rollout, state_dim=2, discrete=discrete)
        self._rng = rng
        self._pending = None
        self.skipped_minibatches = 0
        self.last_losses = (float("nan"), float("nan"))

    def value_of(self, s_norm) -> float:
        return float(forward(self.value, self.value_spec, s_norm)[0])

    def act(self, state: EnvState, t: int, rng: np.random.Generator):
        s_norm = normalize_state(state, self.space)
        action, log_prob, aux = self._sample(s_norm, rng)
        self._pending = (s_norm, action, log_prob, self.value_of(s_norm), aux)
        return action

    def observe(self, state, action, reward, next_state) -> None:
        s_norm, act, log_prob, value, aux = self._pending
        self.buffer.push(s_norm, act, log_prob, value, reward, aux=aux)
        self._pending = None
        if self.buffer.full:
            bootstrap = self.value_of(normalize_state(next_state, self.space))
            self.buffer.fill_gae(bootstrap, self.gamma, self.gae_lambda)
            self.last_losses = self.update()
            self.buffer.clear()

    def update(self) -> tuple:
        """K epochs of clipped minibatch updates; returns mean (policy, value) losses."""
        n = self.buffer.size
        adv = self.buffer.advantages[:n]
        std = adv.std()
        adv = (adv - adv.mean()) / (std if std > 1e-8 else 1.0)
        policy_losses, value_losses = [], []
        for _ in range(self.epochs):
            order = self._rng.permutation(n)
            for start in range(0, n, self.minibatch):
                idx = order[start:start + self.minibatch]
                pl = self._policy_step(idx, adv[idx])
                if pl is not None:
                    policy_losses.append(pl)
                value_losses.append(self._value_step(idx))
        return (float(np.mean(policy_losses)) if policy_losses else float("nan"),
                float(np.mean(value_losses)))

    def _value_step(self, idx) -> float:
        states = self.buffer.states[idx]
        targets = self.buffer.returns[idx]
        v, cache = forward_cached(self.value, self.value_spec, states)
        err = v[:, 0] - targets
        loss = float(np.mean(np.square(err)))
        out_grad = (self.vf_coef * 2.0 * err / len(idx))[:, None]
        grads, _ = backward(self.value, self.value_spec, cache, out_grad)
        clip_grad_norm(grads, self.max_grad_norm)
        self.value_opt.step(self.value, grads)
        return loss

    def _clip_mask(self, ratio, adv):
        # The min() in the surrogate passes gradient only where the unclipped
        # term is active: ratio not already past the clip edge on adv's side.
        lo, hi = 1.0 - self.clip, 1.0 + self.clip
        return np.where(adv >= 0.0, ratio <= hi, ratio >= lo)

    # subclass hooks -----------------------------------------------------
    def _sample(self, s_norm, rng):
        raise NotImplementedError

    def _policy_step(self, idx, adv):
        raise NotImplementedError


class PPODiscrete(_PPOBase):
    """Categorical policy over the m grid prices."""

    def __init__(self, space, rng, **kw):
        if space.kind is not SpaceKind.DISCRETE:
            raise ValueError("PPODiscrete needs a discrete action space")
        super().__init__(space, rng, discrete=True, **kw)

    def _sample(self, s_norm, rng):
        probs = forward(self.policy, self.policy_spec, s_norm)
        a = int(rng.choice(self.space.m, p=probs / probs.sum()))
        return a, float(np.log(probs[a])), 0.0

    def _policy_step(self, idx, adv):
        states = self.buffer.states[idx]
        actions = self.buffer.actions[idx]
        logp_old = self.buffer.log_probs[idx]
        probs, cache = forward_cached(self.policy, self.policy_spec, states)
        probs = np.asarray(probs, dtype=np.float64)
        rows = np.arange(len(idx))
        logp_new = log_softmax(np.asarray(cache.z_out, dtype=np.float64))[rows, actions]
        log_ratio = logp_new - logp_old
        if not np.all(np.isfinite(log_ratio)):
            self.skipped_minibatches += 1
            return None
        ratio = np.exp(log_ratio)
        loss = clipped_surrogate(log_ratio, adv, self.clip)

        active = self._clip_mask(ratio, adv)
        out_grad = np.zeros_like(probs)
        # d(-ratio*adv)/dp[a] = -adv/p_old; p_old = p_new / ratio.
        out_grad[rows, actions] = -np.where(active, adv * ratio / probs[rows, actions], 0.0)
        # Entropy bonus -ent_coef * H with H = -sum p log p.
        safe = np.maximum(probs, 1e-30)
        out_grad += self.ent_coef * (np.log(safe) + 1.0)
        out_grad /= len(idx)
        grads, _ = backward(self.policy, self.policy_spec, cache, out_grad)
        clip_grad_norm(grads, self.max_grad_norm)
        self.policy_opt.step(self.policy, grads)
        return loss

    def action_probabilities(self, state: EnvState) -> np.ndarray:
        return np.asarray(forward(self.policy, self.policy_spec,
                                  normalize_state(state, self.space)), dtype=np.float64)


class PPOContinuous(_PPOBase):
    """Tanh-squashed Gaussian policy over the price interval."""

    def __init__(self, space, rng, **kw):
        if space.kind is not SpaceKind.CONTINUOUS:
            raise ValueError("PPOContinuous needs a continuous action space")
        super().__init__(space, rng, discrete=False, **kw)

    def _sample(self, s_norm, rng):
        mean, log_std = forward(self.policy, self.policy_spec, s_norm)
        u, _ = gp.sample_pre_squash(mean, log_std, rng)
        price = float(gp.squash_to_price(u, self.space))
        logp = float(gp.log_prob(u, mean, log_std, self.space))
        return price, logp, float(u)

    def _policy_step(self, idx, adv):
        states = self.buffer.states[idx]
        u = self.buffer.aux[idx]
        logp_old = self.buffer.log_probs[idx]
        out, cache = forward_cached(self.policy, self.policy_spec, states)
        mean = np.asarray(out[:, 0], dtype=np.float64)
        log_std = np.asarray(out[:, 1], dtype=np.float64)
        logp_new = gp.log_prob(u, mean, log_std, self.space)
        log_ratio = logp_new - logp_old
        if not np.all(np.isfinite(log_ratio)):
            self.skipped_minibatches += 1
            return None
        ratio = np.exp(log_ratio)
        loss = clipped_surrogate(log_ratio, adv, self.clip)

        active = self._clip_mask(ratio, adv)
        # d(-ratio*adv)/dlogp_new = -ratio*adv where the unclipped branch is active.
        dlogp = -np.where(active, ratio * adv, 0.0)
        d_mean, d_log_std = gp.log_prob_grads(u, mean, log_std)
        out_grad = np.zeros_like(out)
        out_grad[:, 0] = dlogp * d_mean
        # Entropy bonus uses the pre-squash Gaussian entropy: dH/dlog_std = 1.
        out_grad[:, 1] = dlogp * d_log_std - self.ent_coef
        out_grad /= len(idx)
        grads, _ = backward(self.policy, self.policy_spec, cache, out_grad)
        clip_grad_norm(grads, self.max_grad_norm)
        self.policy_opt.step(self.policy, grads)
        return loss
