"""Maximum mean discrepancy with an inverse multiquadratics kernel."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import NumericsError, Tensor

KERNEL_SCALES = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


def _pairwise_sq_dists(x: Tensor, y: Tensor) -> Tensor:
    x2 = ad.tsum(ad.mul(x, x), axis=1, keepdims=True)           # (n, 1)
    y2 = ad.transpose(ad.tsum(ad.mul(y, y), axis=1, keepdims=True))  # (1, m)
    cross = ad.matmul(x, ad.transpose(y))                        # (n, m)
    d2 = ad.add(ad.sub(x2, ad.mul(cross, 2.0)), y2)
    return ad.clamp(d2, 0.0, np.inf)


def _kernel_sum(d2: Tensor, base: float, weights: np.ndarray) -> Tensor:
    """Sum over the scale set of C_s/(C_s + d^2), weighted per entry."""
    total = None
    w = Tensor(weights)
    for scale in KERNEL_SCALES:
        c = base * scale
        k = ad.div(c, ad.add(d2, c))
        term = ad.tsum(ad.mul(k, w))
        total = term if total is None else ad.add(total, term)
    return total


def mmd_imq(x, y, prior_sigma2: float = 1.0) -> Tensor:
    """Unbiased MMD^2 estimate between two sample sets.

    Kernel: k(a, b) = C/(C + |a-b|^2) with C = 2 * dim * prior_sigma2,
    summed over a fixed scale ladder.  Diagonal terms are excluded from the
    within-set sums, so identical sample sets can come out slightly
    negative.
    """
    x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float32))
    y = y if isinstance(y, Tensor) else Tensor(np.asarray(y, dtype=np.float32))
    if x.data.ndim != 2 or y.data.ndim != 2 or x.shape[1] != y.shape[1]:
        raise NumericsError(f"sample shapes {x.shape} and {y.shape} do not align")
    n, m = x.shape[0], y.shape[0]
    if n < 2 or m < 2:
        raise NumericsError("need at least 2 samples per side")
    dim = x.shape[1]
    base = 2.0 * dim * prior_sigma2

    off_n = (np.ones((n, n)) - np.eye(n)).astype(np.float32) / (n * (n - 1))
    off_m = (np.ones((m, m)) - np.eye(m)).astype(np.float32) / (m * (m - 1))
    cross_w = np.full((n, m), 2.0 / (n * m), dtype=np.float32)

    kxx = _kernel_sum(_pairwise_sq_dists(x, x), base, off_n)
    kyy = _kernel_sum(_pairwise_sq_dists(y, y), base, off_m)
    kxy = _kernel_sum(_pairwise_sq_dists(x, y), base, cross_w)
    return ad.sub(ad.add(kxx, kyy), kxy)
