"""Tanh-squashed Gaussian policy math shared by the continuous-action learners.

A policy network's gaussian head yields (mean, log_std) for the pre-squash
variable u. Sampling applies tanh and an affine map onto the price interval;
log-densities carry the corresponding change-of-variable corrections:

    price = mid + half * tanh(u),  u ~ Normal(mean, std)
    log pi(price) = log N(u) - log(1 - tanh(u)^2 + EPS) - log(half)
"""

from __future__ import annotations

import math

import numpy as np

from ..env import ActionSpace

SQUASH_EPS = 1e-9
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def sample_pre_squash(mean, log_std, rng: np.random.Generator):
    """Reparameterized draw u = mean + std * xi; returns (u, xi)."""
    xi = rng.standard_normal(size=np.shape(mean))
    return mean + np.exp(log_std) * xi, xi


def squash_to_price(u, space: ActionSpace):
    half = 0.5 * space.span
    mid = space.lower + half
    return mid + half * np.tanh(u)


def price_to_pre_squash(price, space: ActionSpace):
    """Inverse of squash_to_price; valid strictly inside the interval."""
    half = 0.5 * space.span
    mid = space.lower + half
    return np.arctanh((np.asarray(price, dtype=np.float64) - mid) / half)


def log_prob(u, mean, log_std, space: ActionSpace):
    """Log-density of the squashed price whose pre-squash value is u."""
    std = np.exp(log_std)
    z = (u - mean) / std
    base = -0.5 * np.square(z) - log_std - _LOG_SQRT_2PI
    tanh_u = np.tanh(u)
    correction = np.log(1.0 - np.square(tanh_u) + SQUASH_EPS)
    return base - correction - math.log(0.5 * space.span)


def log_prob_grads(u, mean, log_std):
    """Adjoints of log_prob with respect to (mean, log_std) at fixed u."""
    std = np.exp(log_std)
    z = (u - mean) / std
    return z / std, np.square(z) - 1.0


def reparam_log_prob_grads(u, xi, log_std):
    """Adjoints of log_prob w.r.t. (mean, log_std) when u = mean + std * xi moves too.

    Under the reparameterization the Gaussian base term depends only on xi,
    so only the squash correction contributes through u.
    """
    tanh_u = np.tanh(u)
    dcorr_du = 2.0 * tanh_u * (1.0 - np.square(tanh_u)) / (1.0 - np.square(tanh_u) + SQUASH_EPS)
    d_mean = dcorr_du
    d_log_std = -1.0 + dcorr_du * np.exp(log_std) * xi
    return d_mean, d_log_std


def gaussian_entropy(log_std):
    """Entropy of the pre-squash Gaussian (used as the PPO entropy bonus)."""
    return np.asarray(log_std) + 0.5 * (1.0 + math.log(2.0 * math.pi))
