"""Adam optimizer over a named parameter set."""

from __future__ import annotations

import numpy as np

from .autodiff import Node
from .errors import ShapeError


class Adam:
    """Bias-corrected Adam.

    Holds one first and second moment buffer per parameter, keyed by name;
    ``t`` increases by one on every step. The learning rate may be
    overridden per step so schedules stay outside the optimizer.
    """

    def __init__(
        self,
        params: dict[str, Node],
        lr: float = 1e-2,
        betas: tuple[float, float] = (0.95, 0.95),
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = float(lr)
        self.beta1, self.beta2 = float(betas[0]), float(betas[1])
        self.eps = float(eps)
        self.t = 0
        self.m = {name: np.zeros_like(p.value) for name, p in params.items()}
        self.v = {name: np.zeros_like(p.value) for name, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else float(lr)
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = p.grad
            if g.shape != p.value.shape:
                raise ShapeError(
                    f"gradient shape {g.shape} does not match parameter "
                    f"'{name}' shape {p.value.shape}"
                )
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
