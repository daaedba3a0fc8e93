"""Hill-climb fine-tuning toward a scalar molecular objective.

Repeatedly sample routes, score their final products, keep a cumulative
pool of everything seen, and retrain for two epochs on the current top-K.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .chem import (
    ChemError,
    MolGraph,
    canonical_smiles,
    morgan_fingerprint,
    parse_smiles,
    tanimoto,
)
from .dag import SynthesisDAG
from .model import RouteModel, run_epoch
from .rng import fnv1a64


class ObjectiveError(RuntimeError):
    pass


@dataclass(frozen=True)
class TanimotoToTarget:
    """Fingerprint similarity to a fixed target molecule."""

    target: str
    radius: int = 2
    width: int = 2048

    @property
    def name(self) -> str:
        return f"tanimoto:{self.target}"

    def score(self, mol: MolGraph) -> float:
        target_fp = morgan_fingerprint(parse_smiles(self.target), self.radius, self.width)
        return tanimoto(morgan_fingerprint(mol, self.radius, self.width), target_fp)


@dataclass(frozen=True)
class HeavyAtomTarget:
    """1 - |count - n|/n, clamped to [0, 1]."""

    n: int

    @property
    def name(self) -> str:
        return f"heavy_atoms:{self.n}"

    def score(self, mol: MolGraph) -> float:
        return max(0.0, 1.0 - abs(mol.heavy_atom_count() - self.n) / self.n)


@dataclass(frozen=True)
class ContainsRing:
    """1.0 when the molecule has a simple ring of the given size."""

    size: int

    @property
    def name(self) -> str:
        return f"ring:{self.size}"

    def score(self, mol: MolGraph) -> float:
        adj = {i: [u for u, _ in mol.neighbors(i)] for i in range(mol.num_atoms)}

        def cycle_from(start: int) -> bool:
            # DFS over simple paths of length <= size looking for a cycle
            # back to start; molecules are small enough for this.
            stack = [(start, [start])]
            while stack:
                node, path = stack.pop()
                for nxt in adj[node]:
                    if nxt == start and len(path) == self.size:
                        return True
                    if nxt not in path and len(path) < self.size:
                        stack.append((nxt, path + [nxt]))
            return False

        return 1.0 if any(cycle_from(i) for i in range(mol.num_atoms)) else 0.0


@dataclass(frozen=True)
class ExternalCommand:
    """Scores via a child process: SMILES in on stdin, one float per line out."""

    command: str

    @property
    def name(self) -> str:
        return f"external:{self.command}"

    def score(self, mol: MolGraph) -> float:
        return self.score_many([canonical_smiles(mol)])[0]

    def score_many(self, smiles: list[str]) -> list[float]:
        proc = subprocess.run(
            shlex.split(self.command),
            input="\n".join(smiles) + "\n",
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            raise ObjectiveError(
                f"scorer exited with {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        lines = proc.stdout.strip().splitlines()
        if len(lines) != len(smiles):
            raise ObjectiveError(
                f"scorer returned {len(lines)} lines for {len(smiles)} molecules"
            )
        try:
            return [float(line) for line in lines]
        except ValueError as exc:
            raise ObjectiveError(f"non-numeric scorer output: {exc}") from exc


def objective_from_spec(spec: str):
    """Parse an objective spec: tanimoto:<smiles> | heavy_atoms:<n> |
    ring:<size> | external:<command>."""
    kind, _, arg = spec.partition(":")
    if kind == "tanimoto" and arg:
        return TanimotoToTarget(arg)
    if kind == "heavy_atoms" and arg:
        return HeavyAtomTarget(int(arg))
    if kind == "ring" and arg:
        return ContainsRing(int(arg))
    if kind == "external" and arg:
        return ExternalCommand(arg)
    raise ObjectiveError(f"bad objective spec {spec!r}")


def score_molecules(objective, smiles: list[str], workers: int = 1) -> list[float]:
    """Score canonical SMILES; fans out across processes when workers > 1."""
    if isinstance(objective, ExternalCommand):
        return objective.score_many(smiles)
    if workers > 1 and len(smiles) > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_score_one, [(objective, s) for s in smiles]))
    return [objective.score(parse_smiles(s)) for s in smiles]


def _score_one(args) -> float:
    objective, smiles = args
    return objective.score(parse_smiles(smiles))


def wiring_hash(d: SynthesisDAG) -> int:
    return fnv1a64(json.dumps(d.signature(), sort_keys=True).encode("utf-8"))


@dataclass
class PoolEntry:
    dag: SynthesisDAG
    final: str
    score: float
    round_added: int

    def key(self) -> tuple[str, int]:
        return (self.final, wiring_hash(self.dag))


@dataclass
class Pool:
    """Cumulative deduplicated set of scored routes; nothing is evicted."""

    entries: list[PoolEntry] = field(default_factory=list)
    _keys: set = field(default_factory=set)
    trajectory: list[float] = field(default_factory=list)

    def add(self, dag: SynthesisDAG, score: float, round_added: int) -> bool:
        entry = PoolEntry(dag, dag.final_smiles(), score, round_added)
        key = entry.key()
        if key in self._keys:
            return False
        self._keys.add(key)
        self.entries.append(entry)
        return True

    def __len__(self) -> int:
        return len(self.entries)

    def ranked(self) -> list[PoolEntry]:
        return sorted(
            self.entries, key=lambda e: (-e.score, e.final, wiring_hash(e.dag))
        )

    def top(self, k: int) -> list[PoolEntry]:
        return self.ranked()[:k]

    def max_score(self) -> float:
        return max(e.score for e in self.entries)

    def record_round(self):
        self.trajectory.append(self.max_score())


def hill_climb(
    model: RouteModel,
    objective,
    oracle,
    train_dags: list[SynthesisDAG],
    rounds: int,
    samples_per_round: int,
    top_k: int,
    rng,
    lr: float = 1e-3,
    batch_size: int = 64,
    max_steps: int | None = None,
    workers: int = 1,
    log=None,
) -> tuple[RouteModel, Pool]:
    """Iterated sample-rank-retrain optimisation.

    The pool is seeded with the scored training routes; each round samples
    new routes, scores their final products, merges them in, and runs
    exactly two training epochs on the current top-K.  Optimizer state
    persists across rounds.
    """
    if min(rounds, samples_per_round, top_k) < 0 or samples_per_round == 0 or top_k == 0:
        raise ObjectiveError("rounds, samples and top-k must be positive (rounds may be 0)")
    pool = Pool()
    seed_scores = score_molecules(
        objective, [d.final_smiles() for d in train_dags], workers
    )
    for d, s in zip(train_dags, seed_scores):
        pool.add(d, s, round_added=0)
    pool.record_round()
    for round_no in range(1, rounds + 1):
        sampled = [
            model.sample_dag(oracle, rng, max_steps=max_steps)[0]
            for _ in range(samples_per_round)
        ]
        scores = score_molecules(objective, [d.final_smiles() for d in sampled], workers)
        for d, s in zip(sampled, scores):
            pool.add(d, s, round_added=round_no)
        pool.record_round()
        chosen = [e.dag for e in pool.top(top_k)]
        for _ in range(2):
            run_epoch(model, chosen, lr=lr, batch_size=batch_size, rng=rng)
        if log is not None:
            log({"round": round_no, "pool": len(pool), "best": pool.max_score()})
    return model, pool


def report(pool: Pool, top_n: int = 100) -> dict:
    """Summary of a fine-tuning run: best score, mean of the top-N, and the
    per-round best trajectory (non-decreasing by construction)."""
    if not pool.entries:
        raise ObjectiveError("empty pool")
    ranked = pool.top(top_n)
    return {
        "best_score": pool.max_score(),
        "top_n": len(ranked),
        "mean_top": sum(e.score for e in ranked) / len(ranked),
        "trajectory": list(pool.trajectory),
    }
