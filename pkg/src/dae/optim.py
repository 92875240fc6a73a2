"""Parameter update rules.

Both optimizers update arrays in place.  Adam keeps one :class:`AdamState`
per parameter tensor, keyed by ``(layer index, parameter name)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import check_same_shape


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0


def sgd_step(params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
    check_same_shape(params, grads, "parameters and gradients")
    params -= lr * grads
    return params


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray, lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-7) -> np.ndarray:
    """One bias-corrected Adam update of ``params`` (in place)."""
    check_same_shape(params, grads, "parameters and gradients")
    check_same_shape(params, state.m, "parameters and moment estimates")
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grads
    state.v *= beta2
    state.v += (1.0 - beta2) * (grads * grads)
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    params -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(params.dtype, copy=False)
    return params


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    states: dict = field(default_factory=dict)

    def step(self, layers) -> None:
        for i, layer in enumerate(layers):
            for name, p in layer.params.items():
                key = (i, name)
                state = self.states.get(key)
                if state is None:
                    state = self.states[key] = AdamState(np.zeros_like(p), np.zeros_like(p))
                adam_step(state, p, layer.grads[name], self.lr, self.beta1, self.beta2, self.eps)


@dataclass
class SGD:
    lr: float = 1e-2

    def step(self, layers) -> None:
        for layer in layers:
            for name, p in layer.params.items():
                sgd_step(p, layer.grads[name], self.lr)
