"""Adam optimizer with bias correction."""

import numpy as np

from .errors import ConfigError, ContractError


class Adam:
    """Standard Adam; defaults beta1=0.9, beta2=0.999, eps=1e-8.

    Holds first/second moment estimates per parameter tensor and a shared
    step counter. ``step()`` consumes the gradients currently stored on the
    parameters; call ``zero_grad()`` before the next accumulation round.
    """

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        for p in self.params:
            if p.grad is None:
                raise ContractError("adam step with a missing gradient")
            if p.grad.shape != p.data.shape:
                raise ContractError(
                    f"gradient shape {p.grad.shape} != parameter shape {p.data.shape}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(
                p.data.dtype, copy=False)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
