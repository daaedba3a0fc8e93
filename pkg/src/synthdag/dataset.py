"""Reaction corpus pipeline: parse, filter, network closure, DAG extraction.

Reactions arrive one per line as ``reactants>reagents>products`` SMILES.
Building blocks seed a reaction network that grows by fixed-point
iteration; every reachable product molecule then yields one synthesis DAG
by walking first-inserted producing reactions backwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chem import ChemError, MolGraph, canonical_smiles, parse_smiles
from .dag import (
    BUILDING_BLOCK,
    PRODUCT,
    BuildingBlockCatalog,
    DagNode,
    SynthesisDAG,
    validate,
)
from .rng import child_rng


class DatasetError(ValueError):
    pass


@dataclass
class ReactionRecord:
    reactants: list[MolGraph]
    reagents: list[MolGraph]
    products: list[MolGraph]
    line_no: int = 0

    @property
    def multi_product(self) -> bool:
        return len(self.products) > 1

    def reactant_keys(self) -> tuple[str, ...]:
        return tuple(sorted(canonical_smiles(m) for m in self.reactants))

    def product_key(self) -> str:
        return canonical_smiles(self.products[0])


def _parse_field(text: str) -> list[MolGraph]:
    text = text.strip()
    if not text:
        return []
    return [parse_smiles(part) for part in text.split(".")]


def parse_reactions(path) -> tuple[list[ReactionRecord], list[dict]]:
    """Read a reaction file; bad lines land in the rejects report, not errors."""
    records: list[ReactionRecord] = []
    rejects: list[dict] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                parts = line.split(">")
                if len(parts) != 3:
                    raise DatasetError("expected reactants>reagents>products")
                reactants = _parse_field(parts[0])
                reagents = _parse_field(parts[1])
                products = _parse_field(parts[2])
                if not reactants or not products:
                    raise DatasetError("need at least one reactant and one product")
                records.append(ReactionRecord(reactants, reagents, products, line_no))
            except (ChemError, DatasetError) as exc:
                rejects.append({"line": line_no, "text": line, "error": str(exc)})
    return records, rejects


def _map_numbers(mol: MolGraph) -> set[int]:
    return {a.atom_map for a in mol.atoms if a.atom_map > 0}


def filter_reactions(records: list[ReactionRecord]) -> list[ReactionRecord]:
    """Drop multi-product records and demote non-contributing reactants.

    With atom maps present, a reactant none of whose mapped atoms appears
    in the product contributes nothing and is moved to the reagents;
    unmapped records pass through untouched.
    """
    out: list[ReactionRecord] = []
    for rec in records:
        if rec.multi_product:
            continue
        product_maps = _map_numbers(rec.products[0])
        if not product_maps:
            out.append(rec)
            continue
        keep: list[MolGraph] = []
        reagents = list(rec.reagents)
        for mol in rec.reactants:
            if _map_numbers(mol) & product_maps:
                keep.append(mol)
            else:
                reagents.append(mol)
        if keep:
            out.append(ReactionRecord(keep, reagents, rec.products, rec.line_no))
    return out


@dataclass
class NetReaction:
    index: int
    reactants: tuple[str, ...]
    product: str
    line_no: int


@dataclass
class ReactionNetwork:
    molecules: list[str] = field(default_factory=list)  # insertion order
    is_block: dict[str, bool] = field(default_factory=dict)
    reactions: list[NetReaction] = field(default_factory=list)
    producers: dict[str, list[int]] = field(default_factory=dict)

    def add_molecule(self, key: str, block: bool):
        if key not in self.is_block:
            self.molecules.append(key)
            self.is_block[key] = block

    def product_molecules(self) -> list[str]:
        return [m for m in self.molecules if not self.is_block[m]]


def build_network(records: list[ReactionRecord], blocks: BuildingBlockCatalog) -> ReactionNetwork:
    """Grow the network to a fixed point.

    A reaction is admitted once every reactant is already a molecule node
    and its product is not a building block; passes repeat in file order
    until nothing more can be added.
    """
    net = ReactionNetwork()
    for key in blocks:
        net.add_molecule(key, block=True)
    pending = [(rec.reactant_keys(), rec.product_key(), rec.line_no) for rec in records]
    changed = True
    while changed:
        changed = False
        remaining = []
        for reactants, product, line_no in pending:
            if product in blocks:
                continue  # never re-create a building block
            if all(r in net.is_block for r in reactants):
                idx = len(net.reactions)
                net.add_molecule(product, block=False)
                net.reactions.append(NetReaction(idx, reactants, product, line_no))
                net.producers.setdefault(product, []).append(idx)
                changed = True
            else:
                remaining.append((reactants, product, line_no))
        pending = remaining
    return net


def extract_dags(net: ReactionNetwork) -> list[SynthesisDAG]:
    """One DAG per product molecule, following first-inserted producers.

    First-inserted producers form a well-founded choice (their reactants
    always predate the product), so the backwards walk cannot loop and
    molecules shared by branches merge into a single node.
    """
    order_of = {key: i for i, key in enumerate(net.molecules)}
    dags = []
    for target in net.product_molecules():
        needed: set[str] = set()
        chosen: list[NetReaction] = []
        frontier = [target]
        while frontier:
            key = frontier.pop()
            if key in needed:
                continue
            needed.add(key)
            if net.is_block[key]:
                continue
            producer = net.reactions[min(net.producers[key])]
            chosen.append(producer)
            frontier.extend(producer.reactants)
        members = sorted(needed, key=lambda k: order_of[k])
        ids = {key: i for i, key in enumerate(members)}
        nodes = tuple(
            DagNode(ids[key], BUILDING_BLOCK if net.is_block[key] else PRODUCT, key)
            for key in members
        )
        edges = []
        for rx in chosen:
            for r in dict.fromkeys(rx.reactants):
                edges.append((ids[r], ids[rx.product]))
        dag = SynthesisDAG(nodes, tuple(sorted(set(edges))), ids[target])
        issues = validate(dag)
        if issues:
            raise DatasetError(f"extracted DAG for {target} invalid: {issues}")
        dags.append(dag)
    return dags


def write_dags_jsonl(dags: list[SynthesisDAG], path):
    with open(path, "w", encoding="utf-8") as fh:
        for d in dags:
            fh.write(d.to_json() + "\n")


def load_dags_jsonl(path) -> list[SynthesisDAG]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(SynthesisDAG.from_json(line))
    return out


def split_corpus(dags: list, fractions, seed: int) -> dict[str, list]:
    """Seeded shuffle then partition into train/valid/test."""
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError("fractions must be three values summing to 1")
    rng = child_rng(seed, "split")
    order = list(rng.permutation(len(dags)))
    n = len(dags)
    n_train = int(n * fractions[0])
    n_valid = int(n * fractions[1])
    train = [dags[i] for i in order[:n_train]]
    valid = [dags[i] for i in order[n_train : n_train + n_valid]]
    test = [dags[i] for i in order[n_train + n_valid :]]
    return {"train": train, "valid": valid, "test": test}
