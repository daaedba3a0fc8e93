"""Sample-quality metrics and the route synthesizability score."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .chem import (
    ChemError,
    Fingerprint,
    canonical_smiles,
    parse_smiles,
    reaction_fingerprint,
    tanimoto,
)
from .dag import SynthesisDAG


class MetricsError(ValueError):
    pass


@dataclass
class SampleReport:
    sample_size: int
    validity: float
    uniqueness: float
    novelty: float
    synth_mean: float | None = None
    synth_median_steps: float | None = None

    def to_dict(self) -> dict:
        return {
            "sample_size": self.sample_size,
            "validity": self.validity,
            "uniqueness": self.uniqueness,
            "novelty": self.novelty,
            "synth_mean": self.synth_mean,
            "synth_median_steps": self.synth_median_steps,
        }


def sample_metrics(samples: list[str], train_set, dags=None, index=None,
                   radius: int = 2, width: int = 2048) -> SampleReport:
    """Validity / uniqueness / novelty of sampled final molecules.

    Validity is the fraction our own parser accepts; uniqueness and novelty
    are computed over the valid subset only (novelty over the distinct
    canonicals absent from the training set).
    """
    if not samples:
        raise MetricsError("no samples")
    train_keys = {canonical_smiles(parse_smiles(s)) if isinstance(s, str) else canonical_smiles(s)
                  for s in train_set}
    valid_keys: list[str] = []
    for s in samples:
        try:
            valid_keys.append(canonical_smiles(parse_smiles(s)))
        except ChemError:
            continue
    validity = len(valid_keys) / len(samples)
    distinct = sorted(set(valid_keys))
    uniqueness = len(distinct) / len(valid_keys) if valid_keys else 0.0
    novel = [k for k in distinct if k not in train_keys]
    novelty = len(novel) / len(distinct) if distinct else 0.0
    report = SampleReport(len(samples), validity, uniqueness, novelty)
    if dags is not None and index is not None:
        scores = [synth_score(d, index, radius=radius, width=width) for d in dags]
        steps = [step_count(d) for d in dags]
        report.synth_mean = sum(scores) / len(scores)
        report.synth_median_steps = float(statistics.median(steps))
    return report


@dataclass
class ReactionCorpusIndex:
    """Reference reaction fingerprints with exact linear-scan lookup."""

    fingerprints: list[Fingerprint] = field(default_factory=list)
    radius: int = 2
    width: int = 2048

    @staticmethod
    def from_records(records, radius: int = 2, width: int = 2048) -> "ReactionCorpusIndex":
        index = ReactionCorpusIndex(radius=radius, width=width)
        for rec in records:
            if hasattr(rec, "reactants"):
                reactants, product = rec.reactants, rec.products[0]
            else:
                reactants, product = rec
            mols = [parse_smiles(r) if isinstance(r, str) else r for r in reactants]
            pmol = parse_smiles(product) if isinstance(product, str) else product
            index.fingerprints.append(reaction_fingerprint(mols, pmol, radius, width))
        return index

    @staticmethod
    def from_reaction_file(path, radius: int = 2, width: int = 2048) -> "ReactionCorpusIndex":
        from .dataset import parse_reactions

        records, _ = parse_reactions(path)
        return ReactionCorpusIndex.from_records(records, radius, width)

    def __len__(self) -> int:
        return len(self.fingerprints)

    def nearest_similarity(self, fp: Fingerprint) -> float:
        if not self.fingerprints:
            raise MetricsError("empty reaction corpus index")
        return max(tanimoto(fp, other) for other in self.fingerprints)


def synth_score(d: SynthesisDAG, index: ReactionCorpusIndex,
                radius: int = 2, width: int = 2048) -> float:
    """Geometric mean over the route's reactions of each reaction's
    similarity to its nearest corpus neighbor."""
    reactions = d.reactions()
    if not reactions:
        raise MetricsError("route has no reactions")
    product = 1.0
    for reactant_keys, product_key in reactions:
        fp = reaction_fingerprint(
            [parse_smiles(r) for r in reactant_keys], parse_smiles(product_key),
            radius, width,
        )
        product *= index.nearest_similarity(fp)
    return product ** (1.0 / len(reactions))


def step_count(d: SynthesisDAG) -> int:
    """Number of reactions (product nodes) in the route."""
    return len(d.product_nodes())
