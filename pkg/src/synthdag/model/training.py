"""Training loops and evaluation helpers for the route models."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dag import SynthesisDAG, serialize
from ..nn import adam_step, backward, no_grad, save_checkpoint
from ..rng import child_rng
from .core import ModelError, RouteModel


@dataclass
class TrainSchedule:
    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 64
    lr_drops: dict[int, float] = field(default_factory=dict)  # epoch -> factor
    lam: float = 10.0
    seed: int = 0
    checkpoint_every: int = 0  # additionally save every N epochs when > 0
    out_dir: str | None = None


def effective_lr(schedule: TrainSchedule, epoch: int) -> float:
    lr = schedule.lr
    for boundary, factor in sorted(schedule.lr_drops.items()):
        if epoch > boundary:
            lr *= factor
    return lr


def _batches(n: int, batch_size: int, order) -> list[list[int]]:
    idx = [int(i) for i in order]
    return [idx[i : i + batch_size] for i in range(0, n, batch_size)]


def run_epoch(model: RouteModel, dags: list[SynthesisDAG], lr: float,
              batch_size: int, rng, lam: float = 10.0) -> dict[str, float]:
    """One optimisation epoch; routes are re-serialized with the given
    stream so the model sees fresh construction orders each time."""
    seqs = [serialize(d, rng) for d in dags]
    order = rng.permutation(len(dags))
    nll_total, mmd_total, count = 0.0, 0.0, 0
    for batch_idx in _batches(len(dags), batch_size, order):
        model.store.zero_grad()
        batch_seqs = [seqs[i] for i in batch_idx]
        if model.config.mode == "ae":
            batch = [dags[i] for i in batch_idx]
            if len(batch_idx) >= 2:
                loss, parts = model.wae_loss(batch, rng, lam=lam, train=True,
                                             seqs=batch_seqs)
            else:
                # A lone route cannot estimate the penalty term.
                loss = model.reconstruction_nll(batch, rng, seqs=batch_seqs, train=True)
                parts = {"nll": loss.item(), "mmd": 0.0}
            nll_total += parts["nll"] * len(batch_idx)
            mmd_total += parts["mmd"] * len(batch_idx)
        else:
            loss = model.nll_loss(batch_seqs, train=True, dropout_rng=rng)
            nll_total += loss.item() * len(batch_idx)
        count += len(batch_idx)
        backward(loss)
        adam_step(model.store, lr=lr)
    return {"nll": nll_total / max(count, 1), "mmd": mmd_total / max(count, 1)}


def evaluate_nll(model: RouteModel, dags: list[SynthesisDAG], rng) -> dict[str, float]:
    """Held-out NLL (and MMD for the autoencoder) without weight updates.

    The autoencoder is scored at the posterior mean so numbers are
    comparable across epochs."""
    if not dags:
        return {"nll": float("nan"), "mmd": 0.0}
    seqs = [serialize(d, rng) for d in dags]
    nll, mmd = 0.0, 0.0
    with no_grad():
        if model.config.mode == "ae":
            memo: dict = {}
            zs = []
            for d, seq in zip(dags, seqs):
                mu, _logvar = model.encode(d, memo)
                zs.append(mu)
                nll += -model.log_prob(seq, z=mu).item()
            import numpy as _np

            from ..nn import mmd_imq

            if len(zs) >= 2:
                agg = _np.concatenate([z.data for z in zs], axis=0)
                prior = rng.standard_normal(agg.shape).astype(_np.float32)
                mmd = float(mmd_imq(agg, prior).item())
        else:
            for seq in seqs:
                nll += -model.log_prob(seq).item()
    return {"nll": nll / len(dags), "mmd": mmd}


def train(model: RouteModel, train_dags: list[SynthesisDAG],
          valid_dags: list[SynthesisDAG] | None, schedule: TrainSchedule,
          log=None) -> list[dict]:
    """Full training run; returns the metric rows that also land in the CSV."""
    if not train_dags:
        raise ModelError("empty training corpus")
    rows: list[dict] = []
    out_dir = Path(schedule.out_dir) if schedule.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for epoch in range(1, schedule.epochs + 1):
        lr = effective_lr(schedule, epoch)
        epoch_rng = child_rng(schedule.seed, f"train-epoch-{epoch}")
        stats = run_epoch(model, train_dags, lr, schedule.batch_size, epoch_rng,
                          lam=schedule.lam)
        rows.append({"epoch": epoch, "split": "train", "nll": stats["nll"],
                     "mmd": stats["mmd"], "lr": lr})
        if valid_dags:
            vstats = evaluate_nll(model, valid_dags,
                                  child_rng(schedule.seed, "valid-serialize"))
            rows.append({"epoch": epoch, "split": "valid", "nll": vstats["nll"],
                         "mmd": vstats["mmd"], "lr": lr})
        if log is not None:
            log(rows[-1])
        if out_dir and schedule.checkpoint_every and epoch % schedule.checkpoint_every == 0:
            save_model(model, out_dir / f"checkpoint_epoch{epoch}.json")
    if out_dir:
        save_model(model, out_dir / "checkpoint.json")
        write_metrics_csv(rows, out_dir / "log.csv")
    return rows


def write_metrics_csv(rows: list[dict], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "split", "nll", "mmd", "lr"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def save_model(model: RouteModel, path):
    save_checkpoint(path, model.store, hyper={"mode": model.config.mode},
                    extra={"model": model.config.to_dict()})


def load_model(path, catalog) -> RouteModel:
    from ..nn import load_checkpoint
    from .config import ModelConfig

    store, doc = load_checkpoint(path)
    config = ModelConfig.from_dict(doc["model"])
    return RouteModel(config, catalog, store=store)


# -- evaluation ----------------------------------------------------------------


def reconstruct_rate(model: RouteModel, dags: list[SynthesisDAG], oracle,
                     mode: str = "greedy", rng=None, samples: int = 100,
                     level: str = "dag") -> float:
    """Fraction of routes reproduced from their own encoding.

    greedy: decode once from the posterior mean.  sample-rank: decode
    ``samples`` times from posterior draws and keep the most probable.
    ``level`` compares whole DAGs or only final molecules.
    """
    if mode not in ("greedy", "sample-rank"):
        raise ModelError(f"unknown reconstruction mode {mode!r}")
    if level not in ("dag", "final"):
        raise ModelError(f"unknown comparison level {level!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    hits = 0
    with no_grad():
        for d in dags:
            mu, logvar = model.encode(d)
            if mode == "greedy":
                decoded, _, _ = model.greedy_decode(oracle, z=mu)
                best = decoded
            else:
                best, best_lp = None, -np.inf
                for _ in range(samples):
                    z = model.reparameterize(mu, logvar, rng)
                    decoded, _, lp = model.sample_dag(oracle, rng, z=z)
                    if lp > best_lp:
                        best, best_lp = decoded, lp
            if level == "dag":
                hits += int(best.signature() == d.signature())
            else:
                hits += int(best.final_smiles() == d.final_smiles())
    return hits / len(dags)


def union_graph(dags: list[SynthesisDAG]) -> dict:
    """Union of several routes as one renderable reaction network."""
    kinds: dict[str, str] = {}
    edges: set[tuple[str, str]] = set()
    for d in dags:
        for node in d.nodes:
            prev = kinds.get(node.smiles)
            kinds[node.smiles] = "product" if prev == "product" else node.kind
        for a, b in d.edges:
            edges.add((d.nodes[a].smiles, d.nodes[b].smiles))
    return {
        "nodes": [{"smiles": s, "kind": k} for s, k in sorted(kinds.items())],
        "edges": sorted(edges),
        "finals": sorted({d.final_smiles() for d in dags}),
    }


def latent_walk(model: RouteModel, z0, step_size: float, n: int, oracle, rng,
                max_tries: int = 200):
    """Random-walk the latent space until n distinct routes have decoded."""
    if model.config.mode != "ae":
        raise ModelError("latent_walk requires an autoencoder-mode model")
    z = np.asarray(z0, dtype=np.float32).reshape(1, -1).copy()
    found: list[SynthesisDAG] = []
    seen = set()
    for _ in range(max_tries):
        dag, _, _ = model.greedy_decode(oracle, z=z)
        sig = dag.signature()
        if sig not in seen:
            seen.add(sig)
            found.append(dag)
            if len(found) >= n:
                return found, union_graph(found)
        z = z + step_size * rng.standard_normal(z.shape).astype(np.float32)
    raise ModelError(f"step budget exhausted after {max_tries} decodes "
                     f"({len(found)}/{n} distinct routes)")
