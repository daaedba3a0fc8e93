"""Circular substructure fingerprints and Tanimoto similarity.

Each atom environment (out to the requested radius) is rendered as a
canonical string, hashed with 64-bit FNV-1a, and folded modulo the
fingerprint width, giving bit-identical fingerprints across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..rng import fnv1a64
from .mol import MolGraph

_ORDER_LABEL = {"single": "1", "double": "2", "triple": "3", "aromatic": "a"}

DEFAULT_RADIUS = 2
DEFAULT_WIDTH = 2048


class FingerprintError(ValueError):
    pass


@dataclass(frozen=True)
class Fingerprint:
    bits: frozenset[int]
    width: int = DEFAULT_WIDTH
    radius: int = DEFAULT_RADIUS

    def __post_init__(self):
        if self.width <= 0 or self.width & (self.width - 1) != 0:
            raise FingerprintError(f"width {self.width} is not a power of two")
        if self.bits and (min(self.bits) < 0 or max(self.bits) >= self.width):
            raise FingerprintError("bit position out of range")

    def popcount(self) -> int:
        return len(self.bits)


def atom_environments(g: MolGraph, radius: int) -> list[str]:
    """Canonical environment strings for every atom at every radius 0..radius.

    Radius 0 is the atom's own invariant; radius r+1 nests the sorted
    (bond, neighbor environment) list inside the previous string.
    """
    if radius < 0:
        raise FingerprintError("radius must be non-negative")
    current = []
    for idx, atom in enumerate(g.atoms):
        current.append(
            "|".join(
                [
                    atom.element,
                    str(atom.formal_charge),
                    str(atom.explicit_h),
                    "a" if atom.aromatic else "-",
                    str(g.degree(idx)),
                ]
            )
        )
    envs = list(current)
    for _ in range(radius):
        nxt = []
        for idx in range(g.num_atoms):
            nbr = sorted(
                f"{_ORDER_LABEL[order]}:{current[u]}" for u, order in g.neighbors(idx)
            )
            nxt.append("(" + current[idx] + "){" + ",".join(nbr) + "}")
        envs.extend(nxt)
        current = nxt
    return envs


def _env_bits(g: MolGraph, radius: int, width: int) -> frozenset[int]:
    return frozenset(fnv1a64(env.encode("utf-8")) % width for env in atom_environments(g, radius))


def morgan_fingerprint(
    g: MolGraph, radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH
) -> Fingerprint:
    return Fingerprint(_env_bits(g, radius, width), width, radius)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; two empty fingerprints count as identical."""
    if a.width != b.width:
        raise FingerprintError(f"fingerprint widths differ ({a.width} vs {b.width})")
    union = len(a.bits | b.bits)
    if union == 0:
        return 1.0
    return len(a.bits & b.bits) / union


def reaction_fingerprint(
    reactants: list[MolGraph] | tuple[MolGraph, ...],
    product: MolGraph,
    radius: int = DEFAULT_RADIUS,
    width: int = DEFAULT_WIDTH,
) -> Fingerprint:
    """Binary changed-environment vector of a reaction.

    Bits present in the product XOR the union of reactant environment bits:
    environments that appear on exactly one side of the reaction.  The
    construction is invariant to reactant ordering and duplication.
    """
    if not reactants:
        raise FingerprintError("reaction needs at least one reactant")
    reactant_bits: frozenset[int] = frozenset()
    for mol in reactants:
        reactant_bits |= _env_bits(mol, radius, width)
    product_bits = _env_bits(product, radius, width)
    return Fingerprint(product_bits ^ reactant_bits, width, radius)
