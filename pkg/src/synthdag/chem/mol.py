"""Attributed molecular graphs.

Molecules are immutable: atoms, bonds and derived properties never change
after construction, so graphs can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .errors import MolGraphError, UnknownElementError, ValenceError

SINGLE = "single"
DOUBLE = "double"
TRIPLE = "triple"
AROMATIC = "aromatic"

BOND_ORDERS = (SINGLE, DOUBLE, TRIPLE, AROMATIC)

# Numeric order used for valence accounting; aromatic bonds count 1.5.
ORDER_VALUE = {SINGLE: 1.0, DOUBLE: 2.0, TRIPLE: 3.0, AROMATIC: 1.5}

# Allowed total valences for the organic subset (used both for implicit-H
# assignment and as the per-element maximum in the valence check).
VALENCES = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
    "H": (1,),
}

# Elements outside the table get a permissive cap (metals, noble gases...).
DEFAULT_MAX_VALENCE = 8

PERIODIC_TABLE = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb",
    "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U", "Np", "Pu",
]
ATOMIC_NUMBER = {symbol: i + 1 for i, symbol in enumerate(PERIODIC_TABLE)}


def max_valence(element: str, formal_charge: int = 0) -> int:
    base = max(VALENCES.get(element, (DEFAULT_MAX_VALENCE,)))
    return base + abs(formal_charge)


def implied_hydrogens(element: str, order_sum: float) -> int:
    """Hydrogen count an organic-subset atom written without brackets gets.

    Smallest allowed valence that covers the (rounded-up) bond order sum;
    atoms already over their largest valence get zero.
    """
    need = math.ceil(order_sum - 1e-9)
    for valence in VALENCES.get(element, ()):
        if valence >= need:
            return valence - need
    return 0


@dataclass(frozen=True)
class Atom:
    element: str
    formal_charge: int = 0
    explicit_h: int = 0
    aromatic: bool = False
    atom_map: int = 0  # transient annotation; ignored by identity


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str = SINGLE

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True)
class MolGraph:
    """Immutable molecular graph; invariants checked at construction."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        if n == 0:
            raise MolGraphError("molecule has no atoms")
        for atom in self.atoms:
            if atom.element not in ATOMIC_NUMBER:
                raise UnknownElementError(f"unknown element {atom.element!r}")
            if atom.explicit_h < 0:
                raise MolGraphError("negative hydrogen count")
        seen_pairs = set()
        for bond in self.bonds:
            if bond.a == bond.b:
                raise MolGraphError(f"bond {bond.a}-{bond.b} joins an atom to itself")
            if not (0 <= bond.a < n and 0 <= bond.b < n):
                raise MolGraphError(f"bond {bond.a}-{bond.b} references a missing atom")
            if bond.order not in BOND_ORDERS:
                raise MolGraphError(f"unknown bond order {bond.order!r}")
            pair = (min(bond.a, bond.b), max(bond.a, bond.b))
            if pair in seen_pairs:
                raise MolGraphError(f"duplicate bond between atoms {pair[0]} and {pair[1]}")
            seen_pairs.add(pair)
            if bond.order == AROMATIC:
                if not (self.atoms[bond.a].aromatic and self.atoms[bond.b].aromatic):
                    raise MolGraphError(
                        f"aromatic bond {bond.a}-{bond.b} between non-aromatic atoms"
                    )
        for idx, atom in enumerate(self.atoms):
            used = math.floor(self.order_sum(idx) + 1e-9) + atom.explicit_h
            cap = max_valence(atom.element, atom.formal_charge)
            if used > cap:
                raise ValenceError(
                    f"atom {idx} ({atom.element}) exceeds valence {cap} (has {used})"
                )

    @cached_property
    def _adjacency(self) -> tuple[tuple[tuple[int, str], ...], ...]:
        nbrs: list[list[tuple[int, str]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            nbrs[bond.a].append((bond.b, bond.order))
            nbrs[bond.b].append((bond.a, bond.order))
        return tuple(tuple(x) for x in nbrs)

    def neighbors(self, idx: int) -> tuple[tuple[int, str], ...]:
        """(neighbor index, bond order) pairs of one atom."""
        return self._adjacency[idx]

    def degree(self, idx: int) -> int:
        return len(self._adjacency[idx])

    def order_sum(self, idx: int) -> float:
        return sum(ORDER_VALUE[order] for _, order in self._adjacency[idx])

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def heavy_atom_count(self) -> int:
        return sum(1 for atom in self.atoms if atom.element != "H")

    def heavy_bond_count(self) -> int:
        return sum(
            1
            for bond in self.bonds
            if self.atoms[bond.a].element != "H" and self.atoms[bond.b].element != "H"
        )

    def permuted(self, perm: list[int]) -> "MolGraph":
        """Relabel atoms so new index perm[i] holds old atom i."""
        if sorted(perm) != list(range(self.num_atoms)):
            raise MolGraphError("not a permutation")
        new_atoms = [None] * self.num_atoms
        for old, new in enumerate(perm):
            new_atoms[new] = self.atoms[old]
        new_bonds = tuple(Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds)
        return MolGraph(tuple(new_atoms), new_bonds, self.warnings)


def ring_bond_flags(num_atoms: int, bonds: list[tuple[int, int]]) -> list[bool]:
    """True for every bond that lies on a cycle (i.e. is not a bridge).

    Molecules are small, so the quadratic remove-edge-and-reconnect test is
    both fast enough and obviously correct.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(num_atoms)]
    for bidx, (a, b) in enumerate(bonds):
        adj[a].append((b, bidx))
        adj[b].append((a, bidx))

    def connected_without(src: int, dst: int, skip: int) -> bool:
        seen = {src}
        frontier = [src]
        while frontier:
            node = frontier.pop()
            for nxt, eidx in adj[node]:
                if eidx == skip or nxt in seen:
                    continue
                if nxt == dst:
                    return True
                seen.add(nxt)
                frontier.append(nxt)
        return False

    return [connected_without(a, b, i) for i, (a, b) in enumerate(bonds)]
