"""Minimal feed-forward approximators with hand-rolled reverse-mode gradients.

Parameters are plain lists of numpy arrays ``[W1, b1, W2, b2, ...]`` with
``x @ W + b`` layers and rectifier hidden activations. Three output heads
cover every learner in the package: raw values ("linear"), a softmax
distribution ("categorical"), and Gaussian policy parameters ("gaussian",
columns = means followed by clamped log-stds).

Networks are plain values owned by a single run; nothing here is shared
across threads. Checkpoints use a one-line JSON header (shapes + dtype)
followed by the raw row-major parameter bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

Params = List[np.ndarray]

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0

_HEADS = ("linear", "categorical", "gaussian")


@dataclass(frozen=True)
class NetworkSpec:
    """Topology and output head of one network.

    The default hidden topology is two 256-unit layers; smaller shapes are
    accepted (they are useful for closed-form gradient checks).
    """

    input_dim: int
    output_dim: int
    head: str = "linear"
    hidden: tuple = (256, 256)

    def __post_init__(self) -> None:
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("network dimensions must be >= 1")
        if self.head not in _HEADS:
            raise ValueError(f"unknown head {self.head!r}, expected one of {_HEADS}")
        if self.head == "gaussian" and self.output_dim % 2 != 0:
            raise ValueError("gaussian head needs an even output_dim (means + log-stds)")

    def layer_dims(self) -> list:
        dims = [self.input_dim, *self.hidden, self.output_dim]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]


def init_params(spec: NetworkSpec, rng: np.random.Generator, dtype=np.float64) -> Params:
    """Fan-in uniform weight init, zero biases."""
    params: Params = []
    for fan_in, fan_out in spec.layer_dims():
        limit = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(dtype))
        params.append(np.zeros(fan_out, dtype=dtype))
    return params


def clone_params(params: Params) -> Params:
    return [p.copy() for p in params]


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class ForwardCache:
    """Intermediate values of one forward pass, consumed by :func:`backward`."""

    x: np.ndarray
    pre_acts: list = field(default_factory=list)
    z_out: np.ndarray = None
    probs: np.ndarray = None
    squeezed: bool = False


def _run_forward(params: Params, spec: NetworkSpec, x) -> ForwardCache:
    dtype = params[0].dtype
    x = np.asarray(x, dtype=dtype)
    cache = ForwardCache(x=None)
    if x.ndim == 1:
        x = x[None, :]
        cache.squeezed = True
    if x.shape[1] != spec.input_dim:
        raise ValueError(f"input width {x.shape[1]} != spec input_dim {spec.input_dim}")
    cache.x = x
    h = x
    n_layers = len(params) // 2
    for i in range(n_layers - 1):
        z = h @ params[2 * i] + params[2 * i + 1]
        cache.pre_acts.append(z)
        h = np.maximum(z, 0.0)
    cache.z_out = h @ params[-2] + params[-1]
    if spec.head == "categorical":
        cache.probs = _softmax(cache.z_out)
    return cache


def _head_output(spec: NetworkSpec, cache: ForwardCache) -> np.ndarray:
    if spec.head == "linear":
        out = cache.z_out
    elif spec.head == "categorical":
        out = cache.probs
    else:
        k = spec.output_dim // 2
        out = cache.z_out.copy()
        out[:, k:] = np.clip(out[:, k:], LOG_STD_MIN, LOG_STD_MAX)
    return out[0] if cache.squeezed else out


def forward(params: Params, spec: NetworkSpec, x) -> np.ndarray:
    """Evaluate the network; output shape follows the input's batchedness."""
    return _head_output(spec, _run_forward(params, spec, x))


def forward_cached(params: Params, spec: NetworkSpec, x):
    """Like :func:`forward` but also returns the cache needed for gradients."""
    cache = _run_forward(params, spec, x)
    return _head_output(spec, cache), cache


def backward(params: Params, spec: NetworkSpec, cache: ForwardCache, out_grad):
    """Reverse-mode gradients of a scalar loss.

    ``out_grad`` is the loss adjoint with respect to the head output (same
    shape as the forward result). Returns ``(param_grads, input_grad)``.
    """
    dtype = params[0].dtype
    g = np.asarray(out_grad, dtype=dtype)
    if cache.squeezed:
        g = g[None, :]
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite loss adjoint passed to backward")

    if spec.head == "linear":
        dz = g
    elif spec.head == "categorical":
        p = cache.probs
        dz = p * (g - (g * p).sum(axis=-1, keepdims=True))
    else:
        k = spec.output_dim // 2
        dz = g.copy()
        raw = cache.z_out[:, k:]
        dz[:, k:] *= (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)

    grads: Params = [None] * len(params)
    n_layers = len(params) // 2
    for i in range(n_layers - 1, -1, -1):
        h_in = cache.x if i == 0 else np.maximum(cache.pre_acts[i - 1], 0.0)
        grads[2 * i] = h_in.T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        if i > 0:
            dz = (dz @ params[2 * i].T) * (cache.pre_acts[i - 1] > 0.0)
    dx = dz @ params[0].T
    return grads, (dx[0] if cache.squeezed else dx)


class Adam:
    """Adaptive-moment optimizer with the de-facto default decay rates."""

    def __init__(self, params: Params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Params, grads: Params) -> None:
        """One in-place update; increments the step counter."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


def soft_update(target: Params, online: Params, tau: float) -> None:
    """In-place Polyak blend ``target <- (1 - tau) * target + tau * online``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if len(target) != len(online):
        raise ValueError("parameter lists differ in length")
    for tgt, src in zip(target, online):
        if tgt.shape != src.shape:
            raise ValueError(f"shape mismatch {tgt.shape} vs {src.shape}")
        tgt *= 1.0 - tau
        tgt += tau * src


def hard_update(target: Params, online: Params) -> None:
    soft_update(target, online, 1.0)


def global_grad_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float(np.square(g).sum()) for g in grads)))


def clip_grad_norm(grads: Params, max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most max_norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def save_params(path, params: Params) -> None:
    """Write a checkpoint: JSON shape/dtype header line, then raw values."""
    header = {
        "shapes": [list(p.shape) for p in params],
        "dtype": params[0].dtype.str if params else "<f8",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        for p in params:
            fh.write(np.ascontiguousarray(p).tobytes())


def load_params(path) -> Params:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        dtype = np.dtype(header["dtype"])
        params = []
        for shape in header["shapes"]:
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(n * dtype.itemsize)
            params.append(np.frombuffer(buf, dtype=dtype).reshape(shape).copy())
    return params
