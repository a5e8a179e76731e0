"""Trainable parameters and the adaptive-moment optimizer."""

import numpy as np

from .errors import ConfigError
from .tensor import Tensor


class Param:
    """A trainable float64 array paired with its gradient accumulator.

    ``grad`` always has the same shape as ``value`` and is all zeros right
    after :meth:`zero_grad`. Backward passes add into ``grad``; the caller
    zeroes it between steps.
    """

    __slots__ = ("value", "grad", "name")

    def __init__(self, value, name: str = ""):
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def tensor(self) -> Tensor:
        """Leaf tensor sharing this param's storage; backward deposits here."""
        return Tensor(self.value, _param=self)

    def __repr__(self):
        return f"Param({self.name or 'unnamed'}, shape={self.shape})"


def glorot_uniform(rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class AdamState:
    """First/second moment buffers for a fixed list of params.

    Decay rates 0.9 / 0.999 with epsilon 1e-8; moments are bias-corrected.
    """

    def __init__(self, params, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]


def optimizer_step(params, state: AdamState, lr: float = 1e-3):
    """One adaptive-moment update. Gradients are left untouched."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if len(params) != len(state.m):
        raise ConfigError("optimizer state does not match the param list")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for p, m, v in zip(params, state.m, state.v):
        g = p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
