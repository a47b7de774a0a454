"""Dense numeric kernels for the seq2seq models: LSTM cell with manual
gradients, stable softmax helpers and the rmsprop/sgd update rules.

Everything is double precision, batch-first numpy. Gate order in the fused
weight matrices is input, forget, cell, output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import MiniMTError

RHO = 0.9       # rmsprop decay
EPSILON = 1e-8


@dataclass
class LSTMParams:
    W: np.ndarray  # (4h, d) input weights
    U: np.ndarray  # (4h, h) recurrent weights
    b: np.ndarray  # (4h,)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @classmethod
    def init(cls, in_dim: int, hidden: int, rng: np.random.RandomState, scale: float = 0.08):
        return cls(
            rng.uniform(-scale, scale, (4 * hidden, in_dim)),
            rng.uniform(-scale, scale, (4 * hidden, hidden)),
            np.zeros(4 * hidden),
        )


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_forward(p: LSTMParams, x, h_prev, c_prev):
    """One LSTM step over a batch. Returns (h, c, cache) with the cache
    holding everything the backward pass needs."""
    h = p.hidden
    if x.shape[1] != p.W.shape[1]:
        raise MiniMTError(f"lstm input dim {x.shape[1]} != {p.W.shape[1]}")
    a = x @ p.W.T + h_prev @ p.U.T + p.b
    i = sigmoid(a[:, :h])
    f = sigmoid(a[:, h : 2 * h])
    g = np.tanh(a[:, 2 * h : 3 * h])
    o = sigmoid(a[:, 3 * h :])
    c = f * c_prev + i * g
    out = o * np.tanh(c)
    return out, c, (x, h_prev, c_prev, i, f, g, o, c)


def lstm_backward(p: LSTMParams, cache, dh, dc, grads: dict, prefix: str):
    """Backward through one step; parameter gradients accumulate into grads
    under keys prefix+{W,U,b}. Returns (dx, dh_prev, dc_prev)."""
    x, h_prev, c_prev, i, f, g, o, c = cache
    tanh_c = np.tanh(c)
    do = dh * tanh_c
    dct = dc + dh * o * (1.0 - tanh_c**2)
    di = dct * g
    dg = dct * i
    df = dct * c_prev
    dc_prev = dct * f
    da = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g**2), do * o * (1.0 - o)],
        axis=1,
    )
    grads[prefix + "W"] += da.T @ x
    grads[prefix + "U"] += da.T @ h_prev
    grads[prefix + "b"] += da.sum(axis=0)
    return da @ p.W, da @ p.U, dc_prev


def lstm_step(p: LSTMParams, x, state):
    """Public single-step API: state is (h, c); accepts vectors or batches."""
    h_prev, c_prev = state
    squeeze = x.ndim == 1
    if squeeze:
        x, h_prev, c_prev = x[None, :], h_prev[None, :], c_prev[None, :]
    h, c, _ = lstm_forward(p, x, h_prev, c_prev)
    if squeeze:
        return h[0], c[0]
    return h, c


def log_softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    z = logits - m
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits):
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def clip_global_norm(grads: dict, max_norm: float = 5.0) -> float:
    """Scale all gradients down when their joint L2 norm exceeds max_norm."""
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    norm = total**0.5
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


@dataclass
class RmsPropState:
    acc: dict
    rho: float = RHO
    eps: float = EPSILON

    @classmethod
    def for_params(cls, params: dict) -> "RmsPropState":
        return cls({name: np.zeros_like(p) for name, p in params.items()})


def rmsprop_update(params: dict, grads: dict, state: RmsPropState, lr: float):
    """acc <- rho*acc + (1-rho)*g^2; p <- p - lr*g/sqrt(acc+eps). In place."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise MiniMTError(f"non-finite gradient in {name}; training aborted")
        acc = state.acc[name]
        acc *= state.rho
        acc += (1.0 - state.rho) * g * g
        params[name] -= lr * g / np.sqrt(acc + state.eps)
    return params


def sgd_update(params: dict, grads: dict, lr: float):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise MiniMTError(f"non-finite gradient in {name}; training aborted")
        params[name] -= lr * g
    return params
