"""Neural network building blocks used by the route models.

All layers are functional: parameters live in a ParamStore and are passed
in by prefix.  Shapes follow the row convention (batch/nodes on axis 0).
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import NumericsError, Tensor


class MaskError(ValueError):
    pass


# -- parameter initialisation --------------------------------------------------


def uniform_init(shape, fan_in: int, rng) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


def init_linear(store, prefix: str, in_dim: int, out_dim: int, rng):
    store.add(f"{prefix}.W", uniform_init((in_dim, out_dim), in_dim, rng))
    store.add(f"{prefix}.b", uniform_init((1, out_dim), in_dim, rng))


def init_mlp(store, prefix: str, in_dim: int, hidden: int, out_dim: int, rng):
    init_linear(store, f"{prefix}.h", in_dim, hidden, rng)
    init_linear(store, f"{prefix}.out", hidden, out_dim, rng)


def init_gru(store, prefix: str, in_dim: int, h_dim: int, rng):
    for gate in ("r", "z", "n"):
        store.add(f"{prefix}.W{gate}", uniform_init((in_dim, h_dim), in_dim, rng))
        store.add(f"{prefix}.U{gate}", uniform_init((h_dim, h_dim), h_dim, rng))
        store.add(f"{prefix}.b{gate}", uniform_init((1, h_dim), h_dim, rng))


# -- layers --------------------------------------------------------------------


def linear(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    out = ad.matmul(x, W)
    if b is not None:
        out = ad.add(out, b)
    return out


def apply_linear(store, prefix: str, x: Tensor) -> Tensor:
    return linear(x, store[f"{prefix}.W"], store[f"{prefix}.b"])


def mlp_relu_1h(store, prefix: str, x: Tensor) -> Tensor:
    hidden = ad.relu(apply_linear(store, f"{prefix}.h", x))
    return apply_linear(store, f"{prefix}.out", hidden)


def gru_cell(store, prefix: str, x: Tensor, h: Tensor) -> Tensor:
    """Gated recurrent update: h' = (1-z)*h + z*n with reset gate r."""
    p = store
    r = ad.sigmoid(
        ad.add(ad.add(ad.matmul(x, p[f"{prefix}.Wr"]), ad.matmul(h, p[f"{prefix}.Ur"])),
               p[f"{prefix}.br"])
    )
    z = ad.sigmoid(
        ad.add(ad.add(ad.matmul(x, p[f"{prefix}.Wz"]), ad.matmul(h, p[f"{prefix}.Uz"])),
               p[f"{prefix}.bz"])
    )
    n = ad.tanh(
        ad.add(
            ad.add(ad.matmul(x, p[f"{prefix}.Wn"]), ad.matmul(ad.mul(r, h), p[f"{prefix}.Un"])),
            p[f"{prefix}.bn"],
        )
    )
    one_minus_z = ad.sub(1.0, z)
    return ad.add(ad.mul(one_minus_z, h), ad.mul(z, n))


EDGE_TYPES = ("single", "double", "triple", "aromatic")


def init_ggnn(store, prefix: str, feat_dim: int, node_dim: int, rng):
    init_linear(store, f"{prefix}.proj", feat_dim, node_dim, rng)
    for et in EDGE_TYPES:
        store.add(f"{prefix}.msg.{et}", uniform_init((node_dim, node_dim), node_dim, rng))
    init_gru(store, f"{prefix}.gru", node_dim, node_dim, rng)


def ggnn_propagate(store, prefix: str, feats: Tensor, adjacency: dict, steps: int) -> Tensor:
    """Gated graph propagation.

    ``adjacency`` maps edge type to an (n, n) symmetric matrix.  Each round
    sends a per-type linear message along edges, sums over neighbors, and
    updates node states with a gated recurrent cell.  steps=0 returns the
    projected inputs.
    """
    if steps < 0:
        raise NumericsError("steps must be non-negative")
    h = apply_linear(store, f"{prefix}.proj", feats)
    n = h.shape[0]
    adj_tensors = {}
    for et, mat in adjacency.items():
        if et not in EDGE_TYPES:
            raise NumericsError(f"unknown edge type {et!r}")
        mat = np.asarray(mat, dtype=np.float32)
        if mat.shape != (n, n):
            raise NumericsError(f"adjacency for {et} has shape {mat.shape}, want {(n, n)}")
        if mat.any():
            adj_tensors[et] = Tensor(mat)
    for _ in range(steps):
        message = None
        for et, adj in adj_tensors.items():
            contrib = ad.matmul(adj, ad.matmul(h, store[f"{prefix}.msg.{et}"]))
            message = contrib if message is None else ad.add(message, contrib)
        if message is None:
            message = Tensor(np.zeros_like(h.data))
        h = gru_cell(store, f"{prefix}.gru", message, h)
    return h


def init_readout(store, prefix: str, node_dim: int, out_dim: int, rng):
    init_linear(store, f"{prefix}.proj", node_dim, out_dim, rng)
    init_linear(store, f"{prefix}.gate", out_dim, out_dim, rng)
    init_linear(store, f"{prefix}.value", out_dim, out_dim, rng)


def gated_readout(store, prefix: str, node_states: Tensor) -> Tensor:
    """Permutation-invariant graph embedding: sum of gate * value per node."""
    if node_states.shape[0] == 0:
        raise NumericsError("cannot read out an empty graph")
    z = apply_linear(store, f"{prefix}.proj", node_states)
    gate = ad.sigmoid(apply_linear(store, f"{prefix}.gate", z))
    value = ad.tanh(apply_linear(store, f"{prefix}.value", z))
    return ad.tsum(ad.mul(gate, value), axis=0, keepdims=True)


# -- masked categorical --------------------------------------------------------


def _masked_log_probs_np(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        raise MaskError("all actions masked")
    valid = logits[mask]
    peak = valid.max()
    logz = peak + np.log(np.exp(valid - peak).sum())
    out = np.full_like(logits, -np.inf)
    out[mask] = logits[mask] - logz
    return out


def masked_probs(logits, mask) -> np.ndarray:
    """Probabilities with masked entries exactly zero (numpy, no grad)."""
    logits = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    logits = logits.reshape(-1)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    logp = _masked_log_probs_np(logits, mask)
    probs = np.zeros_like(logits)
    probs[mask] = np.exp(logp[mask])
    return probs


def masked_log_prob(logits: Tensor, mask, target: int) -> Tensor:
    """Scalar log-probability of the target entry under the masked softmax."""
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    flat = logits if logits.data.ndim == 1 else ad.reshape(logits, (-1,))
    if target < 0 or target >= flat.data.size:
        raise MaskError(f"target {target} out of range")
    if not mask[target]:
        raise MaskError(f"target {target} is masked")
    logp = _masked_log_probs_np(flat.data, mask)

    def backward(out):
        probs = np.zeros_like(flat.data)
        probs[mask] = np.exp(logp[mask])
        grad = -probs
        grad[target] += 1.0
        ad._accum(flat, out.grad.reshape(()) * grad)

    return ad._make(np.asarray(logp[target], dtype=flat.dtype).reshape(()), (flat,), backward)


def masked_softmax_ce(logits: Tensor, mask, target: int) -> Tensor:
    """Cross-entropy -log p(target) over the unmasked entries."""
    return ad.neg(masked_log_prob(logits, mask, target))


def sample_masked(logits, mask, rng) -> int:
    """Draw an index from the masked softmax; masked entries never appear."""
    probs = masked_probs(logits, mask)
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def dropout(x: Tensor, rate: float, rng, train: bool) -> Tensor:
    """Inverted dropout; identity when not training or rate is zero."""
    if not train or rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(np.float32) / (1.0 - rate)
    return ad.mul(x, Tensor(keep))
