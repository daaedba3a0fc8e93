"""Named parameter collection with Adam state."""

from __future__ import annotations

import numpy as np

from .autodiff import NumericsError, Tensor


class ParamStore:
    """Learned tensors plus per-parameter Adam moments and a step counter.

    ``version`` increments on every update so embedding caches can tell
    whether their entries are stale.
    """

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step: int = 0
        self.version: int = 0

    def add(self, name: str, array: np.ndarray):
        if name in self.params:
            raise NumericsError(f"duplicate parameter {name!r}")
        tensor = Tensor(np.asarray(array, dtype=np.float32), requires_grad=True)
        self.params[name] = tensor
        self.m[name] = np.zeros_like(tensor.data)
        self.v[name] = np.zeros_like(tensor.data)

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return sorted(self.params)

    def num_values(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None


def adam_step(
    store: ParamStore,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """Bias-corrected Adam update from the gradients stored on parameters."""
    store.step += 1
    store.version += 1
    t = store.step
    for name, p in store.params.items():
        grad = p.grad
        if grad is None:
            grad = np.zeros_like(p.data)
        if grad.shape != p.data.shape:
            raise NumericsError(f"gradient shape mismatch for {name!r}")
        grad = grad.astype(np.float32)
        m = store.m[name] = beta1 * store.m[name] + (1 - beta1) * grad
        v = store.v[name] = beta2 * store.v[name] + (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
