"""Adaptive-moment gradient descent for the autodiff engine's parameters."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import NonFiniteGradientError


def adam_update(data, grad, m, v, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected moment update; returns (new_data, m, v)."""
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return data - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


class Adam:
    """Holds first/second moment state for a fixed list of parameters."""

    def __init__(self, params: list[Tensor], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(
                    f"non-finite gradient for parameter {p.name or f'#{i}'}"
                )
            p.data, self._m[i], self._v[i] = adam_update(
                p.data, g, self._m[i], self._v[i], self.t,
                self.lr, self.beta1, self.beta2, self.eps,
            )

    def zero_grad(self):
        for p in self.params:
            p.grad = None
