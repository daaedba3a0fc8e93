"""Synthesis DAGs: structure, serialization, and the decode state machine.

A synthesis DAG has one node per distinct molecule (building block or
product), edges from reactants into the product they form, and a unique
final product.  Construction is serialized as a sequence of actions of
three kinds: node addition ('B'/'P'), building-block identity selection,
and connectivity choices ending in an intermediate or final stop.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .chem import MolGraph, canonical_smiles, parse_smiles, read_smi_file


class DagError(ValueError):
    pass


class IllegalActionError(DagError):
    """Action type/value pair not permitted by the transition rules."""


class MaskedActionError(DagError):
    """Action is well-typed but masked out in the current state."""


class MaxStepsExceededError(DagError):
    pass


class DegenerateSynthesisError(DagError):
    """Loop removal collapsed the route onto a bare building block."""


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------


class ActionType(Enum):
    ADD_NODE = "add_node"          # choose 'B' or 'P'
    PICK_BLOCK = "pick_block"      # choose a building-block molecule
    CONNECT = "connect"            # choose a reactant or stop
    FINISHED = "finished"


@dataclass(frozen=True)
class Action:
    kind: str  # B | P | MOL | REF | STOP_I | STOP_F
    smiles: str | None = None
    # Product filled in by serialize() so teacher forcing needs no oracle.
    product: str | None = field(default=None, compare=False)

    def token(self) -> str:
        if self.kind == "MOL":
            return f"M:{self.smiles}"
        if self.kind == "REF":
            return f"R:{self.smiles}"
        return self.kind

    @staticmethod
    def from_token(token: str) -> "Action":
        if token in ("B", "P", "STOP_I", "STOP_F"):
            return Action(token)
        if token.startswith("M:"):
            return Action("MOL", token[2:])
        if token.startswith("R:"):
            return Action("REF", token[2:])
        raise DagError(f"bad action token {token!r}")


def block_node() -> Action:
    return Action("B")


def product_node() -> Action:
    return Action("P")


def pick_block(smiles: str) -> Action:
    return Action("MOL", smiles)


def connect(smiles: str) -> Action:
    return Action("REF", smiles)


def stop_intermediate(product: str | None = None) -> Action:
    return Action("STOP_I", product=product)


def stop_final(product: str | None = None) -> Action:
    return Action("STOP_F", product=product)


def transition(prev_type: ActionType, prev_action: Action) -> ActionType:
    """Next action type implied by the previous (type, value) pair."""
    if prev_type == ActionType.ADD_NODE:
        if prev_action.kind == "B":
            return ActionType.PICK_BLOCK
        if prev_action.kind == "P":
            return ActionType.CONNECT
    elif prev_type == ActionType.PICK_BLOCK:
        if prev_action.kind == "MOL":
            return ActionType.ADD_NODE
    elif prev_type == ActionType.CONNECT:
        if prev_action.kind == "REF":
            return ActionType.CONNECT
        if prev_action.kind == "STOP_I":
            return ActionType.ADD_NODE
        if prev_action.kind == "STOP_F":
            return ActionType.FINISHED
    raise IllegalActionError(f"illegal pair ({prev_type.value}, {prev_action.kind})")


@dataclass(frozen=True)
class ActionSeq:
    actions: tuple[Action, ...]

    def __post_init__(self):
        if not self.actions:
            raise DagError("empty action sequence")
        if self.actions[-1].kind != "STOP_F":
            raise DagError("action sequence must end with STOP_F")
        self.types()  # raises on any illegal pair

    def types(self) -> list[ActionType]:
        out = [ActionType.ADD_NODE]
        for action in self.actions[:-1]:
            out.append(transition(out[-1], action))
        return out

    def __len__(self) -> int:
        return len(self.actions)

    def to_text(self) -> str:
        return " ".join(a.token() for a in self.actions)

    @staticmethod
    def from_text(text: str) -> "ActionSeq":
        return ActionSeq(tuple(Action.from_token(t) for t in text.split()))


# ---------------------------------------------------------------------------
# Building-block catalog
# ---------------------------------------------------------------------------


class BuildingBlockCatalog:
    """Ordered set of starting molecules, keyed by canonical SMILES."""

    def __init__(self, smiles_list):
        self.order: list[str] = []
        self.mols: dict[str, MolGraph] = {}
        for s in smiles_list:
            mol = parse_smiles(s) if isinstance(s, str) else s
            key = canonical_smiles(mol)
            if key not in self.mols:
                self.order.append(key)
                self.mols[key] = mol

    @staticmethod
    def from_file(path) -> "BuildingBlockCatalog":
        return BuildingBlockCatalog(read_smi_file(path))

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, key: str) -> bool:
        return key in self.mols

    def __iter__(self):
        return iter(self.order)


# ---------------------------------------------------------------------------
# The DAG itself
# ---------------------------------------------------------------------------

BUILDING_BLOCK = "building_block"
PRODUCT = "product"


@dataclass(frozen=True)
class DagNode:
    id: int
    kind: str
    smiles: str  # canonical


@dataclass(frozen=True)
class SynthesisDAG:
    nodes: tuple[DagNode, ...]
    edges: tuple[tuple[int, int], ...]
    final_id: int

    def node(self, node_id: int) -> DagNode:
        return self.nodes[node_id]

    def in_neighbors(self, node_id: int) -> list[int]:
        return [src for src, dst in self.edges if dst == node_id]

    def out_neighbors(self, node_id: int) -> list[int]:
        return [dst for src, dst in self.edges if src == node_id]

    def product_nodes(self) -> list[DagNode]:
        return [n for n in self.nodes if n.kind == PRODUCT]

    def reactions(self) -> list[tuple[list[str], str]]:
        """(reactant canonicals, product canonical) per product node."""
        return [
            (sorted(self.nodes[src].smiles for src in self.in_neighbors(n.id)), n.smiles)
            for n in self.product_nodes()
        ]

    def final_smiles(self) -> str:
        return self.nodes[self.final_id].smiles

    def signature(self):
        """Hashable identity: molecule/kind set plus wiring plus final."""
        node_sig = tuple(sorted((n.smiles, n.kind) for n in self.nodes))
        edge_sig = tuple(
            sorted((self.nodes[a].smiles, self.nodes[b].smiles) for a, b in self.edges)
        )
        return (node_sig, edge_sig, self.final_smiles())

    def to_json(self) -> str:
        doc = {
            "nodes": [{"id": n.id, "kind": n.kind, "smiles": n.smiles} for n in self.nodes],
            "edges": [[a, b] for a, b in self.edges],
            "final": self.final_id,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "SynthesisDAG":
        doc = json.loads(text)
        nodes = tuple(DagNode(n["id"], n["kind"], n["smiles"]) for n in doc["nodes"])
        edges = tuple((a, b) for a, b in doc["edges"])
        return SynthesisDAG(nodes, edges, doc["final"])


def validate(d: SynthesisDAG) -> list[str]:
    """Empty list when every invariant holds; otherwise named violations."""
    issues: list[str] = []
    n = len(d.nodes)
    if n == 0:
        return ["empty DAG"]
    for i, node in enumerate(d.nodes):
        if node.id != i:
            issues.append(f"node {i}: id mismatch ({node.id})")
        if node.kind not in (BUILDING_BLOCK, PRODUCT):
            issues.append(f"node {i}: unknown kind {node.kind!r}")
    seen_edges = set()
    for a, b in d.edges:
        if not (0 <= a < n and 0 <= b < n):
            issues.append(f"edge {a}->{b}: endpoint out of range")
            continue
        if a == b:
            issues.append(f"edge {a}->{b}: self loop")
        if (a, b) in seen_edges:
            issues.append(f"edge {a}->{b}: duplicate")
        seen_edges.add((a, b))
    if issues:
        return issues

    if not (0 <= d.final_id < n):
        return [f"final id {d.final_id} out of range"]

    canon: dict[str, int] = {}
    for node in d.nodes:
        try:
            key = canonical_smiles(parse_smiles(node.smiles))
        except Exception as exc:  # noqa: BLE001 - report, do not raise
            issues.append(f"node {node.id}: bad molecule ({exc})")
            continue
        if key in canon:
            issues.append(f"node {node.id}: duplicate molecule of node {canon[key]}")
        else:
            canon[key] = node.id

    indeg = [0] * n
    outdeg = [0] * n
    for a, b in d.edges:
        outdeg[a] += 1
        indeg[b] += 1
    sinks = [i for i in range(n) if outdeg[i] == 0]
    if sinks != [d.final_id]:
        issues.append(f"sinks {sinks} != [final {d.final_id}]")
    if d.nodes[d.final_id].kind != PRODUCT:
        issues.append(f"final node {d.final_id} is not a product")
    for i in range(n):
        if d.nodes[i].kind == BUILDING_BLOCK and indeg[i] != 0:
            issues.append(f"node {i}: building block with incoming edges")
        if d.nodes[i].kind == PRODUCT and indeg[i] == 0:
            issues.append(f"node {i}: product with no reactants")

    # Cycle check via Kahn's algorithm.
    remaining = dict(enumerate(indeg))
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in d.edges:
        adj[a].append(b)
    queue = [i for i, deg in remaining.items() if deg == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for nxt in adj[node]:
            remaining[nxt] -= 1
            if remaining[nxt] == 0:
                queue.append(nxt)
    if seen != n:
        issues.append("cycle detected")
    return issues


# ---------------------------------------------------------------------------
# Raw decoded graphs and loop removal
# ---------------------------------------------------------------------------


class RawDecodeGraph:
    """Mutable graph produced while decoding; may contain cycles or folds."""

    def __init__(self):
        self.smiles: list[str] = []
        self.kinds: list[str] = []
        self.node_of: dict[str, int] = {}
        self.edges: list[tuple[int, int]] = []
        self.final_idx: int | None = None

    @staticmethod
    def from_dag(d: SynthesisDAG) -> "RawDecodeGraph":
        raw = RawDecodeGraph()
        for node in d.nodes:
            raw.add_node(node.smiles, node.kind)
        for a, b in d.edges:
            raw.add_edge(a, b)
        raw.final_idx = d.final_id
        return raw

    def add_node(self, smiles: str, kind: str) -> int:
        """New node for a molecule; folds onto the first node if it exists."""
        if smiles in self.node_of:
            return self.node_of[smiles]
        self.smiles.append(smiles)
        self.kinds.append(kind)
        self.node_of[smiles] = len(self.smiles) - 1
        return len(self.smiles) - 1

    def add_edge(self, src: int, dst: int):
        self.edges.append((src, dst))

    def add_block(self, smiles: str):
        self.add_node(smiles, BUILDING_BLOCK)

    def add_reaction(self, reactant_smiles: list[str], product_smiles: str) -> bool:
        """Record an intermediate reaction.

        A product molecule that already exists keeps its first-created path:
        the re-creating reaction is dropped entirely.  Returns True when a
        new node was created.
        """
        if product_smiles in self.node_of:
            return False
        idx = self.add_node(product_smiles, PRODUCT)
        for r in dict.fromkeys(reactant_smiles):
            self.add_edge(self.node_of[r], idx)
        return True

    def _descendants(self, start: int) -> set[int]:
        adj: dict[int, list[int]] = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append(b)
        out: set[int] = set()
        frontier = [start]
        while frontier:
            node = frontier.pop()
            for nxt in adj.get(node, ()):
                if nxt not in out:
                    out.add(nxt)
                    frontier.append(nxt)
        return out

    def set_final(self, participant_smiles: list[str], product_smiles: str):
        """Record the final product.

        Participants are the working reactant set plus every unused
        molecule.  A new molecule gets a fresh node fed by every
        participant.  A final molecule that already exists as a product
        keeps its first-created path (the re-creating reaction is dropped,
        like any duplicate).  One that exists as a building block has no
        synthesis of its own, so the participants are still connected in
        (skipping loop-closing edges); if nothing can connect, the failed
        final reaction resolves to the deepest product the route actually
        made, and a route that made no products at all is degenerate.
        """
        participants = [s for s in dict.fromkeys(participant_smiles) if s != product_smiles]
        if product_smiles not in self.node_of:
            idx = self.add_node(product_smiles, PRODUCT)
            for s in participants:
                self.add_edge(self.node_of[s], idx)
            self.final_idx = idx
            return
        idx = self.node_of[product_smiles]
        if self.kinds[idx] == PRODUCT:
            self.final_idx = idx
            return
        blocked = self._descendants(idx)
        added = False
        for s in sorted(participants, key=lambda s: self.node_of[s]):
            src = self.node_of[s]
            if src == idx or src in blocked:
                continue
            self.add_edge(src, idx)
            added = True
        if added:
            self.kinds[idx] = PRODUCT
            self.final_idx = idx
            return
        product_nodes = [i for i, kind in enumerate(self.kinds) if kind == PRODUCT]
        if not product_nodes:
            raise DegenerateSynthesisError(
                f"route collapsed onto building block {product_smiles!r}"
            )
        self.final_idx = max(product_nodes)


def remove_loops(raw: RawDecodeGraph) -> SynthesisDAG:
    """Resolve a raw decoded graph into a valid synthesis DAG.

    Edges are admitted in creation order, dropping self edges, duplicates
    and any edge that would close a cycle (the first path to every node
    wins).  The graph is then restricted to ancestors of the final node;
    kinds follow in-degree.  A route that collapses onto a bare building
    block has no valid DAG form and raises DegenerateSynthesisError.
    """
    if raw.final_idx is None:
        raise DagError("raw graph has no final node")
    n = len(raw.smiles)
    kept: list[tuple[int, int]] = []
    adj: dict[int, set[int]] = {i: set() for i in range(n)}

    def reaches(src: int, dst: int) -> bool:
        frontier = [src]
        seen = {src}
        while frontier:
            node = frontier.pop()
            if node == dst:
                return True
            for nxt in adj[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return False

    seen_edges = set()
    for a, b in raw.edges:
        if a == b or (a, b) in seen_edges:
            continue
        if reaches(b, a):
            continue  # first path wins; this edge would close a loop
        seen_edges.add((a, b))
        kept.append((a, b))
        adj[a].add(b)

    # Restrict to ancestors of the final node.
    rev: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in kept:
        rev[b].append(a)
    keep_nodes = {raw.final_idx}
    frontier = [raw.final_idx]
    while frontier:
        node = frontier.pop()
        for prev in rev[node]:
            if prev not in keep_nodes:
                keep_nodes.add(prev)
                frontier.append(prev)

    order = sorted(keep_nodes)
    new_id = {old: i for i, old in enumerate(order)}
    edges = tuple((new_id[a], new_id[b]) for a, b in kept if a in keep_nodes and b in keep_nodes)
    indeg = [0] * len(order)
    for _, b in edges:
        indeg[b] += 1
    nodes = tuple(
        DagNode(new_id[old], PRODUCT if indeg[new_id[old]] > 0 else BUILDING_BLOCK,
                raw.smiles[old])
        for old in order
    )
    final_id = new_id[raw.final_idx]
    if nodes[final_id].kind != PRODUCT:
        raise DegenerateSynthesisError(
            f"route collapsed onto building block {raw.smiles[raw.final_idx]!r}"
        )
    d = SynthesisDAG(nodes, edges, final_id)
    issues = validate(d)
    if issues:
        raise DagError(f"loop removal produced an invalid DAG: {issues}")
    return d


# ---------------------------------------------------------------------------
# Decode state machine
# ---------------------------------------------------------------------------

# Fewest further actions needed to complete a sequence from each state:
# ADD_NODE -> 'P' then STOP_F; PICK_BLOCK -> block, 'P', STOP_F; CONNECT -> STOP_F.
_MIN_FINISH = {
    ActionType.ADD_NODE: 2,
    ActionType.PICK_BLOCK: 3,
    ActionType.CONNECT: 1,
    ActionType.FINISHED: 0,
}

DEFAULT_MAX_STEPS = 64
MIN_MAX_STEPS = 6


class DecodeState:
    """Single-owner mutable state for one decode/replay run."""

    def __init__(self, catalog: BuildingBlockCatalog, max_steps: int = DEFAULT_MAX_STEPS):
        if max_steps < MIN_MAX_STEPS:
            raise DagError(f"max_steps must be at least {MIN_MAX_STEPS}")
        self.catalog = catalog
        self.max_steps = max_steps
        self.steps = 0
        self.expected = ActionType.ADD_NODE
        self.molecules: list[str] = []      # creation order (the M set)
        self.mol_graphs: dict[str, MolGraph] = {}
        self.unused: set[str] = set()       # the U set
        self.working: list[str] = []        # the R set, in selection order
        self.raw = RawDecodeGraph()
        self.result: SynthesisDAG | None = None

    def clone(self) -> "DecodeState":
        other = DecodeState.__new__(DecodeState)
        other.catalog = self.catalog
        other.max_steps = self.max_steps
        other.steps = self.steps
        other.expected = self.expected
        other.molecules = list(self.molecules)
        other.mol_graphs = dict(self.mol_graphs)
        other.unused = set(self.unused)
        other.working = list(self.working)
        other.raw = RawDecodeGraph()
        other.raw.smiles = list(self.raw.smiles)
        other.raw.kinds = list(self.raw.kinds)
        other.raw.node_of = dict(self.raw.node_of)
        other.raw.edges = list(self.raw.edges)
        other.raw.final_idx = self.raw.final_idx
        other.result = self.result
        return other

    @property
    def finished(self) -> bool:
        return self.expected == ActionType.FINISHED

    def _budget_ok(self, next_type: ActionType) -> bool:
        return self.steps + 1 + _MIN_FINISH[next_type] <= self.max_steps

    def _register(self, smiles: str, mol: MolGraph):
        if smiles not in self.mol_graphs:
            self.molecules.append(smiles)
            self.mol_graphs[smiles] = mol
        self.unused.add(smiles)

    def participants(self) -> list[str]:
        """R plus U, deduplicated, in molecule creation order."""
        chosen = set(self.working) | self.unused
        return [s for s in self.molecules if s in chosen]


def legal_actions(state: DecodeState, catalog: BuildingBlockCatalog | None = None) -> list[Action]:
    """Permitted actions in deterministic candidate order.

    Masks follow the construction rules: the first step can only open a
    building-block node; an existing building block cannot be selected
    again; an intermediate stop needs at least one chosen reactant; and
    every action must leave enough step budget to finish the sequence.
    """
    catalog = catalog if catalog is not None else state.catalog
    out: list[Action] = []
    if state.expected == ActionType.ADD_NODE:
        if any(key not in state.mol_graphs for key in catalog) and state._budget_ok(
            ActionType.PICK_BLOCK
        ):
            out.append(block_node())
        if state.molecules and state._budget_ok(ActionType.CONNECT):
            out.append(product_node())
    elif state.expected == ActionType.PICK_BLOCK:
        if state._budget_ok(ActionType.ADD_NODE):
            out.extend(pick_block(key) for key in catalog if key not in state.mol_graphs)
    elif state.expected == ActionType.CONNECT:
        if state._budget_ok(ActionType.CONNECT):
            working = set(state.working)
            out.extend(connect(s) for s in state.molecules if s not in working)
        if state.working and state._budget_ok(ActionType.ADD_NODE):
            out.append(stop_intermediate())
        out.append(stop_final())
    return out


def apply_action(state: DecodeState, action: Action, oracle, rng) -> None:
    """Execute one action (Alg.-style state update), mutating the state."""
    if state.finished:
        raise IllegalActionError("sequence already finished")
    legal = legal_actions(state)
    if action not in legal:
        raise MaskedActionError(
            f"action {action.token()} masked at step {state.steps + 1} "
            f"(type {state.expected.value})"
        )
    if action.kind == "MOL":
        mol = state.catalog.mols[action.smiles]
        state._register(action.smiles, mol)
        state.raw.add_block(action.smiles)
    elif action.kind == "REF":
        state.working.append(action.smiles)
        state.unused.discard(action.smiles)
    elif action.kind == "P":
        state.working = []
    elif action.kind == "STOP_I":
        if action.product is not None:
            product = parse_smiles(action.product)
        else:
            product = oracle.predict([state.mol_graphs[s] for s in state.working], rng)
        key = canonical_smiles(product)
        state.raw.add_reaction(list(state.working), key)
        state._register(key, product)  # re-created molecules become reusable again
    elif action.kind == "STOP_F":
        participants = state.participants()
        if action.product is not None:
            product = parse_smiles(action.product)
        else:
            product = oracle.predict([state.mol_graphs[s] for s in participants], rng)
        key = canonical_smiles(product)
        state.raw.set_final(participants, key)
        state.result = remove_loops(state.raw)
    state.steps += 1
    state.expected = transition(state.expected, action)


def replay(
    seq,
    oracle,
    catalog: BuildingBlockCatalog,
    rng=None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> SynthesisDAG:
    """Deterministically rebuild the DAG described by an action sequence."""
    actions = seq.actions if isinstance(seq, ActionSeq) else tuple(seq)
    if len(actions) > max_steps:
        raise MaxStepsExceededError(f"sequence length {len(actions)} exceeds {max_steps}")
    if rng is None:
        rng = np.random.default_rng(0)
    state = DecodeState(catalog, max_steps)
    for action in actions:
        apply_action(state, action, oracle, rng)
    if not state.finished or state.result is None:
        raise DagError("sequence ended before STOP_F")
    return state.result


# ---------------------------------------------------------------------------
# Serialization of existing DAGs
# ---------------------------------------------------------------------------


def _distance_to_final(d: SynthesisDAG) -> list[int]:
    """Shortest-path edge distance from every node to the final product."""
    dist = [-1] * len(d.nodes)
    dist[d.final_id] = 0
    frontier = [d.final_id]
    rev: dict[int, list[int]] = {i: [] for i in range(len(d.nodes))}
    for a, b in d.edges:
        rev[b].append(a)
    while frontier:
        nxt: list[int] = []
        for node in frontier:
            for prev in rev[node]:
                if dist[prev] < 0:
                    dist[prev] = dist[node] + 1
                    nxt.append(prev)
        frontier = nxt
    return dist


def serialize(d: SynthesisDAG, rng) -> ActionSeq:
    """Emit a construction sequence for a valid DAG.

    Convention: start from the building block furthest (in shortest-path
    edge distance) from the final product, breaking distance ties with the
    supplied random stream; a product is emitted once all of its reactants
    exist; the final stop implicitly connects every still-unused molecule.
    """
    issues = validate(d)
    if issues:
        raise DagError(f"cannot serialize invalid DAG: {issues}")
    dist = _distance_to_final(d)
    in_nbrs = {n.id: set(d.in_neighbors(n.id)) for n in d.nodes}

    emitted: list[int] = []
    emitted_set: set[int] = set()
    used: set[int] = set()  # nodes already consumed as reactants
    actions: list[Action] = []

    def emit_product(node_id: int, final: bool):
        actions.append(product_node())
        reactants = [n for n in emitted if n in in_nbrs[node_id]]
        if final:
            # Unused reactants are connected implicitly by STOP_F.
            reactants = [n for n in reactants if n in used]
        for r in reactants:
            actions.append(connect(d.nodes[r].smiles))
        for r in in_nbrs[node_id]:
            used.add(r)
        stop = stop_final if final else stop_intermediate
        actions.append(stop(product=d.nodes[node_id].smiles))

    while len(emitted) < len(d.nodes):
        available = [
            n.id
            for n in d.nodes
            if n.id not in emitted_set
            and n.id != d.final_id
            and in_nbrs[n.id] <= emitted_set
        ]
        if not available:
            break
        best = max(dist[i] for i in available)
        tied = [i for i in available if dist[i] == best]
        choice = tied[int(rng.integers(len(tied)))] if len(tied) > 1 else tied[0]
        if d.nodes[choice].kind == BUILDING_BLOCK:
            actions.append(block_node())
            actions.append(pick_block(d.nodes[choice].smiles))
        else:
            emit_product(choice, final=False)
        emitted.append(choice)
        emitted_set.add(choice)

    emit_product(d.final_id, final=True)
    return ActionSeq(tuple(actions))


# ---------------------------------------------------------------------------
# Corpus statistics
# ---------------------------------------------------------------------------


def dag_stats(corpus: list[SynthesisDAG]) -> dict[str, float]:
    """Mean node count, final-molecule heavy atoms/bonds, and action length.

    Action length is independent of serialization tie-breaks, so a fixed
    stream is used internally.
    """
    if not corpus:
        raise DagError("empty corpus")
    nodes = heavy = bonds = length = 0
    for d in corpus:
        nodes += len(d.nodes)
        final = parse_smiles(d.final_smiles())
        heavy += final.heavy_atom_count()
        bonds += final.heavy_bond_count()
        length += len(serialize(d, np.random.default_rng(0)))
    n = len(corpus)
    return {
        "mean_nodes": nodes / n,
        "mean_heavy_atoms": heavy / n,
        "mean_bonds": bonds / n,
        "mean_action_length": length / n,
    }
