"""Adam optimizer over named parameter nodes."""

from __future__ import annotations

import numpy as np

from .autodiff import Node


class NonFiniteGradient(RuntimeError):
    """A parameter gradient contained NaN or infinity."""


class Adam:
    """Standard Adam with bias correction.

    ``step`` consumes the gradients currently stored on the parameter nodes
    and clears them afterwards. Moment buffers are float64 regardless of the
    parameter dtype to keep the running averages stable.
    """

    def __init__(
        self,
        params: dict[str, Node],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros(p.value.shape, dtype=np.float64) for k, p in self.params.items()}
        self._v = {k: np.zeros(p.value.shape, dtype=np.float64) for k, p in self.params.items()}

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self.t
        bias2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = np.asarray(p.grad, dtype=np.float64)
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(f"non-finite gradient for parameter {name!r}")
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            p.value -= update.astype(p.value.dtype)
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
