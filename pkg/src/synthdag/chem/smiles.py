"""Subset SMILES reader/writer with Morgan-style canonicalization.

Supported grammar: organic-subset atoms, aromatic lowercase atoms, bracket
atoms with hydrogen count / charge / atom map, branches, ring closures
(including %nn), and the bond symbols - = # :.  Stereo markers (/ \\ @) are
accepted and dropped with a warning recorded on the molecule; isotopes are
rejected.
"""

from __future__ import annotations

import functools
import weakref

from .errors import (
    DanglingRingClosureError,
    IsotopeError,
    MolGraphError,
    SmilesSyntaxError,
    UnbalancedParenthesisError,
    UnknownElementError,
)
from .mol import (
    AROMATIC,
    ATOMIC_NUMBER,
    DOUBLE,
    ORDER_VALUE,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    MolGraph,
    implied_hydrogens,
    ring_bond_flags,
)

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_ORGANIC = {"b", "c", "n", "o", "p", "s"}
AROMATIC_BRACKET = {"b", "c", "n", "o", "p", "s", "se", "as", "te", "si"}

BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}

# Sort key for bond orders inside canonical invariants.
_ORDER_KEY = {SINGLE: 1, AROMATIC: 2, DOUBLE: 3, TRIPLE: 4}


class _PendingAtom:
    __slots__ = ("element", "aromatic", "charge", "explicit_h", "atom_map", "bare")

    def __init__(self, element, aromatic, charge, explicit_h, atom_map, bare):
        self.element = element
        self.aromatic = aromatic
        self.charge = charge
        self.explicit_h = explicit_h  # None means "infer" (bare organic atom)
        self.atom_map = atom_map
        self.bare = bare


def _parse_bracket(text: str, pos: int, warnings: list[str]):
    """Parse a bracket atom starting just after '['; returns (_PendingAtom, new pos)."""
    start = pos
    if pos < len(text) and text[pos].isdigit():
        raise IsotopeError(f"isotope label at position {start} is not supported")
    if pos >= len(text) or not text[pos].isalpha():
        raise SmilesSyntaxError(f"expected element symbol at position {pos}")
    # Element symbol: greedy two-letter match first; lowercase means aromatic.
    symbol = text[pos]
    pos += 1
    if pos < len(text) and text[pos].islower():
        two = symbol + text[pos]
        if (symbol.isupper() and two in ATOMIC_NUMBER) or (
            symbol.islower() and two in AROMATIC_BRACKET
        ):
            symbol = two
            pos += 1
    aromatic = symbol[0].islower()
    element = symbol.capitalize() if aromatic else symbol
    if aromatic and symbol not in AROMATIC_BRACKET:
        raise UnknownElementError(f"element {symbol!r} cannot be aromatic")
    if element not in ATOMIC_NUMBER:
        raise UnknownElementError(f"unknown element {symbol!r}")
    # Chirality markers (@, @@): accepted and discarded.
    while pos < len(text) and text[pos] == "@":
        pos += 1
        if "stereo" not in warnings:
            warnings.append("stereo")
    explicit_h = 0
    if pos < len(text) and text[pos] == "H":
        pos += 1
        explicit_h = 1
        digits = ""
        while pos < len(text) and text[pos].isdigit():
            digits += text[pos]
            pos += 1
        if digits:
            explicit_h = int(digits)
    charge = 0
    if pos < len(text) and text[pos] in "+-":
        sign = 1 if text[pos] == "+" else -1
        pos += 1
        if pos < len(text) and text[pos].isdigit():
            digits = ""
            while pos < len(text) and text[pos].isdigit():
                digits += text[pos]
                pos += 1
            charge = sign * int(digits)
        else:
            charge = sign
            while pos < len(text) and text[pos] in "+-" and (text[pos] == "+") == (sign == 1):
                charge += sign
                pos += 1
    atom_map = 0
    if pos < len(text) and text[pos] == ":":
        pos += 1
        digits = ""
        while pos < len(text) and text[pos].isdigit():
            digits += text[pos]
            pos += 1
        if not digits:
            raise SmilesSyntaxError(f"empty atom map at position {pos}")
        atom_map = int(digits)
    if pos >= len(text) or text[pos] != "]":
        raise SmilesSyntaxError(f"unterminated bracket atom starting at position {start - 1}")
    return _PendingAtom(element, aromatic, charge, explicit_h, atom_map, bare=False), pos + 1


def parse_smiles(text: str) -> MolGraph:
    """Parse SMILES text into a validated molecular graph.

    Graphs are immutable, so identical texts share one cached instance.
    """
    return _parse_cached(text)


@functools.lru_cache(maxsize=65536)
def _parse_cached(text: str) -> MolGraph:
    if not text or not text.strip():
        raise SmilesSyntaxError("empty SMILES")
    text = text.strip()
    if not text.isascii():
        raise SmilesSyntaxError("SMILES must be ASCII")

    atoms: list[_PendingAtom] = []
    raw_bonds: list[tuple[int, int, str | None]] = []
    warnings: list[str] = []
    prev: int | None = None
    branch_stack: list[int | None] = []
    pending_bond: str | None = None
    open_rings: dict[int, tuple[int, str | None]] = {}

    def add_atom(pending: _PendingAtom):
        nonlocal prev, pending_bond
        atoms.append(pending)
        idx = len(atoms) - 1
        if prev is not None:
            raw_bonds.append((prev, idx, pending_bond))
        pending_bond = None
        prev = idx

    def close_ring(number: int):
        nonlocal pending_bond
        if prev is None:
            raise SmilesSyntaxError("ring closure before any atom")
        if number in open_rings:
            other, sym_open = open_rings.pop(number)
            if other == prev:
                raise SmilesSyntaxError(f"ring closure {number} bonds an atom to itself")
            if sym_open is not None and pending_bond is not None and sym_open != pending_bond:
                raise SmilesSyntaxError(f"conflicting bond symbols on ring closure {number}")
            sym = sym_open if sym_open is not None else pending_bond
            raw_bonds.append((other, prev, sym))
        else:
            open_rings[number] = (prev, pending_bond)
        pending_bond = None

    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "[":
            pending, pos = _parse_bracket(text, pos + 1, warnings)
            add_atom(pending)
        elif ch.isupper():
            symbol = ch
            if pos + 1 < len(text) and ch + text[pos + 1] in ("Cl", "Br"):
                symbol = ch + text[pos + 1]
                pos += 1
            if symbol not in ORGANIC_SUBSET:
                raise UnknownElementError(
                    f"element {symbol!r} must be written as a bracket atom"
                )
            add_atom(_PendingAtom(symbol, False, 0, None, 0, bare=True))
            pos += 1
        elif ch in AROMATIC_ORGANIC:
            add_atom(_PendingAtom(ch.upper(), True, 0, None, 0, bare=True))
            pos += 1
        elif ch in BOND_SYMBOLS:
            if pending_bond is not None:
                raise SmilesSyntaxError(f"two bond symbols in a row at position {pos}")
            pending_bond = BOND_SYMBOLS[ch]
            pos += 1
        elif ch in "/\\":
            if "stereo" not in warnings:
                warnings.append("stereo")
            pending_bond = SINGLE
            pos += 1
        elif ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch before any atom")
            branch_stack.append(prev)
            pos += 1
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedParenthesisError(f"unmatched ')' at position {pos}")
            if pending_bond is not None:
                raise SmilesSyntaxError(f"dangling bond symbol before ')' at position {pos}")
            prev = branch_stack.pop()
            pos += 1
        elif ch.isdigit():
            close_ring(int(ch))
            pos += 1
        elif ch == "%":
            if pos + 2 >= len(text) or not text[pos + 1 : pos + 3].isdigit():
                raise SmilesSyntaxError(f"bad %nn ring closure at position {pos}")
            close_ring(int(text[pos + 1 : pos + 3]))
            pos += 3
        elif ch == ".":
            raise SmilesSyntaxError("multi-fragment SMILES ('.') is not supported here")
        else:
            raise SmilesSyntaxError(f"unexpected character {ch!r} at position {pos}")

    if branch_stack:
        raise UnbalancedParenthesisError(f"{len(branch_stack)} unclosed '('")
    if open_rings:
        raise DanglingRingClosureError(
            "dangling ring closure(s): " + ", ".join(str(n) for n in sorted(open_rings))
        )
    if pending_bond is not None:
        raise SmilesSyntaxError("dangling bond symbol at end of SMILES")

    # Resolve bond orders.  A written default bond between two aromatic atoms
    # is aromatic only when it lies on a ring; otherwise it is single
    # (e.g. the bond joining the two rings of biphenyl).
    pairs = [(a, b) for a, b, _ in raw_bonds]
    in_ring = ring_bond_flags(len(atoms), pairs)
    bonds = []
    for (a, b, sym), ring in zip(raw_bonds, in_ring):
        if sym is None:
            if atoms[a].aromatic and atoms[b].aromatic and ring:
                sym = AROMATIC
            else:
                sym = SINGLE
        bonds.append(Bond(a, b, sym))

    order_sums = [0.0] * len(atoms)
    for bond in bonds:
        order_sums[bond.a] += ORDER_VALUE[bond.order]
        order_sums[bond.b] += ORDER_VALUE[bond.order]

    final_atoms = []
    for idx, pending in enumerate(atoms):
        h = pending.explicit_h
        if h is None:
            h = implied_hydrogens(pending.element, order_sums[idx])
        final_atoms.append(
            Atom(pending.element, pending.charge, h, pending.aromatic, pending.atom_map)
        )
    return MolGraph(tuple(final_atoms), tuple(bonds), tuple(warnings))


# ---------------------------------------------------------------------------
# Canonicalization
# ---------------------------------------------------------------------------

_MAX_TIE_BRANCHES = 4096


def _initial_invariants(g: MolGraph) -> list[tuple]:
    inv = []
    for idx, atom in enumerate(g.atoms):
        orders = sorted(_ORDER_KEY[o] for _, o in g.neighbors(idx))
        inv.append(
            (atom.element, atom.formal_charge, atom.explicit_h, atom.aromatic, tuple(orders))
        )
    return inv


def _refine(g: MolGraph, ranks: list[int]) -> list[int]:
    """Iteratively refine ranks by neighborhood until the partition stabilizes."""
    n = g.num_atoms
    while True:
        keys = []
        for idx in range(n):
            nbr = sorted((_ORDER_KEY[o], ranks[u]) for u, o in g.neighbors(idx))
            keys.append((ranks[idx], tuple(nbr)))
        order = sorted(range(n), key=lambda i: keys[i])
        new_ranks = [0] * n
        rank = 0
        for pos, idx in enumerate(order):
            if pos > 0 and keys[idx] != keys[order[pos - 1]]:
                rank += 1
            new_ranks[idx] = rank
        if len(set(new_ranks)) == len(set(ranks)):
            return new_ranks
        ranks = new_ranks


def _rank_candidates(g: MolGraph) -> list[list[int]]:
    """Tie-broken total rankings, branching over every member of each tied
    cell so the chosen minimum is independent of the input atom order.

    The branch budget only matters for pathologically symmetric graphs;
    ordinary molecules resolve within a handful of leaves.
    """
    inv = _initial_invariants(g)
    order = sorted(range(g.num_atoms), key=lambda i: inv[i])
    ranks = [0] * g.num_atoms
    rank = 0
    for pos, idx in enumerate(order):
        if pos > 0 and inv[idx] != inv[order[pos - 1]]:
            rank += 1
        ranks[idx] = rank
    ranks = _refine(g, ranks)

    results: list[list[int]] = []

    def descend(current: list[int]):
        if len(set(current)) == len(current):
            results.append(current)
            return
        by_rank: dict[int, list[int]] = {}
        for idx, r in enumerate(current):
            by_rank.setdefault(r, []).append(idx)
        tied = min(r for r, members in by_rank.items() if len(members) > 1)
        for pick in by_rank[tied]:
            forced = [2 * r for r in current]
            forced[pick] -= 1
            descend(_refine(g, forced))
            if len(results) >= _MAX_TIE_BRANCHES:
                return

    descend(ranks)
    return results


def _atom_token(g: MolGraph, idx: int) -> str:
    atom = g.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bare_ok = (
        atom.element in ORGANIC_SUBSET
        and atom.formal_charge == 0
        and (not atom.aromatic or symbol in AROMATIC_ORGANIC)
        and atom.explicit_h == implied_hydrogens(atom.element, g.order_sum(idx))
    )
    if bare_ok:
        return symbol
    h = "" if atom.explicit_h == 0 else ("H" if atom.explicit_h == 1 else f"H{atom.explicit_h}")
    charge = ""
    if atom.formal_charge > 0:
        charge = "+" if atom.formal_charge == 1 else f"+{atom.formal_charge}"
    elif atom.formal_charge < 0:
        charge = "-" if atom.formal_charge == -1 else f"-{-atom.formal_charge}"
    return f"[{symbol}{h}{charge}]"


def _bond_token(order: str, a_atom: Atom, b_atom: Atom, ring: bool) -> str:
    if order == SINGLE:
        return "-" if (a_atom.aromatic and b_atom.aromatic) else ""
    if order == AROMATIC:
        return "" if ring else ":"
    return "=" if order == DOUBLE else "#"


def write_smiles(g: MolGraph, ranks: list[int]) -> str:
    """Emit SMILES visiting atoms in the order induced by distinct ranks."""
    n = g.num_atoms
    pairs = [(b.a, b.b) for b in g.bonds]
    ring = ring_bond_flags(n, pairs)
    bond_of = {}
    for i, bond in enumerate(g.bonds):
        bond_of[(bond.a, bond.b)] = (bond.order, ring[i])
        bond_of[(bond.b, bond.a)] = (bond.order, ring[i])

    root = min(range(n), key=lambda i: ranks[i])
    visited = [False] * n
    disc: dict[int, int] = {}
    tree_children: dict[int, list[int]] = {i: [] for i in range(n)}
    back_edges: list[tuple[int, int]] = []  # (opened at, closed at)

    stack = [(root, -1)]
    seen_edges = set()
    while stack:
        node, parent = stack.pop()
        if visited[node]:
            continue
        visited[node] = True
        disc[node] = len(disc)
        if parent >= 0:
            tree_children[parent].append(node)
        nbrs = sorted((u for u, _ in g.neighbors(node)), key=lambda u: ranks[u])
        for u in reversed(nbrs):
            edge = (min(node, u), max(node, u))
            if visited[u]:
                if u != parent and edge not in seen_edges:
                    back_edges.append((u, node))
                    seen_edges.add(edge)
            else:
                stack.append((u, node))
        if parent >= 0:
            seen_edges.add((min(node, parent), max(node, parent)))

    if len(disc) != n:
        raise MolGraphError("cannot write SMILES for a disconnected graph")

    opens: dict[int, list[tuple[int, int]]] = {}
    closes: dict[int, list[tuple[int, int]]] = {}
    for open_at, close_at in back_edges:
        opens.setdefault(open_at, []).append((close_at, 0))
        closes.setdefault(close_at, []).append((open_at, 0))

    digit_of: dict[tuple[int, int], int] = {}
    free_digits = list(range(1, 100))
    out: list[str] = []

    def ring_token(digit: int, bond: str) -> str:
        d = str(digit) if digit < 10 else f"%{digit:02d}"
        return bond + d

    def emit(node: int):
        out.append(_atom_token(g, node))
        for close_at, _ in sorted(opens.get(node, []), key=lambda t: disc[t[0]]):
            digit = free_digits.pop(0)
            digit_of[(node, close_at)] = digit
            order, is_ring = bond_of[(node, close_at)]
            out.append(ring_token(digit, _bond_token(order, g.atoms[node], g.atoms[close_at], is_ring)))
        for open_at, _ in sorted(
            closes.get(node, []), key=lambda t: digit_of[(t[0], node)]
        ):
            digit = digit_of.pop((open_at, node))
            free_digits.insert(0, digit)
            free_digits.sort()
            out.append(ring_token(digit, ""))
        children = sorted(tree_children[node], key=lambda u: ranks[u])
        for i, child in enumerate(children):
            order, is_ring = bond_of[(node, child)]
            token = _bond_token(order, g.atoms[node], g.atoms[child], is_ring)
            if i < len(children) - 1:
                out.append("(")
                out.append(token)
                emit(child)
                out.append(")")
            else:
                out.append(token)
                emit(child)

    emit(root)
    return "".join(out)


_canonical_memo: "weakref.WeakKeyDictionary[MolGraph, str]" = weakref.WeakKeyDictionary()


def canonical_smiles(g: MolGraph) -> str:
    """Deterministic, atom-order-invariant SMILES for a molecular graph."""
    hit = _canonical_memo.get(g)
    if hit is not None:
        return hit
    best = None
    for ranks in _rank_candidates(g):
        s = write_smiles(g, ranks)
        if best is None or s < best:
            best = s
    _canonical_memo[g] = best
    return best


def canonical_key(text_or_mol) -> str:
    """Canonical string of either SMILES text or an already-built graph."""
    if isinstance(text_or_mol, MolGraph):
        return canonical_smiles(text_or_mol)
    return canonical_smiles(parse_smiles(text_or_mol))
