"""Per-atom feature vectors fed to the graph neural networks.

Layout per atom: element one-hot (72 slots, last one a wildcard for
anything outside the table), atomic number, hydrogen-bond acceptor flag,
hydrogen-bond donor flag, hybridization one-hot (SP, SP2, SP3), aromatic
ring flag, hydrogen count.
"""

from __future__ import annotations

import numpy as np

from .mol import ATOMIC_NUMBER, DOUBLE, MolGraph, TRIPLE

# 71 named elements plus a final wildcard slot = 72 one-hot positions.
ELEMENT_TABLE = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne",
    "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr",
    "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn",
    "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Nd", "Sm",
    "Gd", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb",
    "Bi", "*",
]
_ELEMENT_SLOT = {symbol: i for i, symbol in enumerate(ELEMENT_TABLE)}
_OTHER_SLOT = len(ELEMENT_TABLE) - 1

FEATURE_DIM = len(ELEMENT_TABLE) + 1 + 1 + 1 + 3 + 1 + 1


def _hybridization(g: MolGraph, idx: int) -> int:
    """0=SP, 1=SP2, 2=SP3 by bond pattern: triple or cumulated double bonds
    mean SP, any double bond or aromaticity means SP2, else SP3."""
    doubles = sum(1 for _, order in g.neighbors(idx) if order == DOUBLE)
    triples = sum(1 for _, order in g.neighbors(idx) if order == TRIPLE)
    if triples >= 1 or doubles >= 2:
        return 0
    if doubles == 1 or g.atoms[idx].aromatic:
        return 1
    return 2


def _is_donor(g: MolGraph, idx: int) -> bool:
    atom = g.atoms[idx]
    return atom.element in ("N", "O") and atom.explicit_h >= 1


def _is_acceptor(g: MolGraph, idx: int) -> bool:
    # N/O with a lone pair and no positive charge.
    atom = g.atoms[idx]
    return atom.element in ("N", "O") and atom.formal_charge <= 0


def atom_features(g: MolGraph) -> np.ndarray:
    """(num_atoms, FEATURE_DIM) float32 feature matrix."""
    out = np.zeros((g.num_atoms, FEATURE_DIM), dtype=np.float32)
    for idx, atom in enumerate(g.atoms):
        slot = _ELEMENT_SLOT.get(atom.element, _OTHER_SLOT)
        out[idx, slot] = 1.0
        col = len(ELEMENT_TABLE)
        out[idx, col] = float(ATOMIC_NUMBER[atom.element])
        out[idx, col + 1] = 1.0 if _is_acceptor(g, idx) else 0.0
        out[idx, col + 2] = 1.0 if _is_donor(g, idx) else 0.0
        out[idx, col + 3 + _hybridization(g, idx)] = 1.0
        out[idx, col + 6] = 1.0 if atom.aromatic else 0.0
        out[idx, col + 7] = float(atom.explicit_h)
    return out
