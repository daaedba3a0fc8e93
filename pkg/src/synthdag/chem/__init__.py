"""Molecular graphs, subset SMILES, features, and fingerprints."""

from .errors import (
    ChemError,
    DanglingRingClosureError,
    IsotopeError,
    MolGraphError,
    SmilesSyntaxError,
    UnbalancedParenthesisError,
    UnknownElementError,
    ValenceError,
)
from .features import ELEMENT_TABLE, FEATURE_DIM, atom_features
from .fingerprints import (
    DEFAULT_RADIUS,
    DEFAULT_WIDTH,
    Fingerprint,
    FingerprintError,
    atom_environments,
    morgan_fingerprint,
    reaction_fingerprint,
    tanimoto,
)
from .mol import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, MolGraph
from .smiles import canonical_key, canonical_smiles, parse_smiles, write_smiles


def read_smi_file(path) -> list[str]:
    """Read a .smi file: one molecule per line, '#' lines are comments."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            out.append(line.split()[0])
    return out


__all__ = [
    "AROMATIC",
    "Atom",
    "Bond",
    "ChemError",
    "DanglingRingClosureError",
    "DEFAULT_RADIUS",
    "DEFAULT_WIDTH",
    "DOUBLE",
    "ELEMENT_TABLE",
    "FEATURE_DIM",
    "Fingerprint",
    "FingerprintError",
    "IsotopeError",
    "MolGraph",
    "MolGraphError",
    "SINGLE",
    "SmilesSyntaxError",
    "TRIPLE",
    "UnbalancedParenthesisError",
    "UnknownElementError",
    "ValenceError",
    "atom_environments",
    "atom_features",
    "canonical_key",
    "canonical_smiles",
    "morgan_fingerprint",
    "parse_smiles",
    "reaction_fingerprint",
    "read_smi_file",
    "tanimoto",
    "write_smiles",
]
