"""Adam with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import Tensor

__all__ = ["AdamState", "init_adam", "adam_step", "Adam"]


@dataclass
class AdamState:
    """First/second moment accumulators plus the hyperparameters."""

    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_adam(
    params: Sequence[Tensor],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    if not lr > 0.0:
        raise ValueError(f"lr must be positive, got {lr}")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError("betas must lie in [0, 1)")
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step=0,
        m=[np.zeros_like(p.data) for p in params],
        v=[np.zeros_like(p.data) for p in params],
    )


def adam_step(
    params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState
) -> AdamState:
    """One bias-corrected Adam update.  Parameters are updated in place.

    A zero gradient leaves both the parameter and the moments at zero, so a
    parameter that never receives gradient is never moved.
    """
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params, grads, and state must have matching lengths")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match param {p.data.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g**2
        p.data = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


class Adam:
    """Convenience wrapper reading gradients off the parameters."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, **kwargs):
        self.params = list(params)
        self.state = init_adam(self.params, lr=lr, **kwargs)

    def step(self) -> None:
        grads = [
            p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params
        ]
        adam_step(self.params, grads, self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
