"""The route generator/decoder and the hierarchical route encoder.

The decoder is a shared recurrent stack producing a context vector per
step, three action heads (node addition, block identity, connectivity)
scoring candidates by dot product with their embeddings, and learned
embeddings for the abstract actions.  Molecule embeddings come from a
gated graph network shared with the encoder.
"""

from __future__ import annotations

import numpy as np

from ..chem import AROMATIC, DOUBLE, MolGraph, SINGLE, TRIPLE, atom_features, canonical_smiles
from ..chem.features import FEATURE_DIM
from ..dag import (
    Action,
    ActionSeq,
    ActionType,
    BuildingBlockCatalog,
    DecodeState,
    DegenerateSynthesisError,
    MaskedActionError,
    SynthesisDAG,
    apply_action,
    legal_actions,
    serialize,
)
from ..nn import (
    ParamStore,
    Tensor,
    autodiff as ad,
    dropout,
    gated_readout,
    ggnn_propagate,
    gru_cell,
    init_ggnn,
    init_gru,
    init_linear,
    init_mlp,
    init_readout,
    masked_log_prob,
    masked_probs,
    mlp_relu_1h,
    mmd_imq,
    no_grad,
)
from .config import ModelConfig

_BOND_KEY = {SINGLE: "single", DOUBLE: "double", TRIPLE: "triple", AROMATIC: "aromatic"}

ABSTRACT_ACTIONS = ("B", "P", "STOP_I", "STOP_F")

SIGMA_MIN, SIGMA_MAX = 1e-3, 10.0


def molecule_adjacency(mol: MolGraph) -> dict[str, np.ndarray]:
    n = mol.num_atoms
    adj = {}
    for bond in mol.bonds:
        key = _BOND_KEY[bond.order]
        mat = adj.setdefault(key, np.zeros((n, n), dtype=np.float32))
        mat[bond.a, bond.b] = mat[bond.b, bond.a] = 1.0
    return adj


class ModelError(RuntimeError):
    pass


class RouteModel:
    """Generative model over synthesis routes (decoder + optional encoder)."""

    def __init__(self, config: ModelConfig, catalog: BuildingBlockCatalog,
                 store: ParamStore | None = None, seed: int = 0):
        self.config = config
        self.catalog = catalog
        self.store = store if store is not None else self._init_params(seed)
        self._cache_version = -1
        self._embed_cache: dict[str, np.ndarray] = {}
        self._mol_by_key: dict[str, MolGraph] = dict(catalog.mols)

    # -- parameters ---------------------------------------------------------

    def _init_params(self, seed: int) -> ParamStore:
        cfg = self.config
        rng = np.random.default_rng(seed)
        store = ParamStore()
        init_ggnn(store, "mol", FEATURE_DIM, cfg.node_dim, rng)
        init_readout(store, "mol.read", cfg.node_dim, cfg.embed_dim, rng)
        for name in ABSTRACT_ACTIONS:
            store.add(f"act.{name}",
                      rng.normal(scale=0.1, size=(1, cfg.embed_dim)).astype(np.float32))
        for layer in range(cfg.context_layers):
            in_dim = cfg.embed_dim if layer == 0 else cfg.context_dim
            init_gru(store, f"ctx.l{layer}", in_dim, cfg.context_dim, rng)
            init_linear(store, f"zproj.l{layer}", cfg.latent_dim, cfg.context_dim, rng)
        for head in ("add", "pick", "connect"):
            init_mlp(store, f"head.{head}", cfg.context_dim, cfg.action_hidden,
                     cfg.embed_dim, rng)
        init_linear(store, "enc.msg", cfg.embed_dim, cfg.embed_dim, rng)
        init_gru(store, "enc.gru", cfg.embed_dim, cfg.embed_dim, rng)
        init_linear(store, "enc.mu", cfg.embed_dim, cfg.latent_dim, rng)
        init_linear(store, "enc.logvar", cfg.embed_dim, cfg.latent_dim, rng)
        return store

    # -- molecule embeddings --------------------------------------------------

    def _mol(self, key: str) -> MolGraph:
        mol = self._mol_by_key.get(key)
        if mol is None:
            from ..chem import parse_smiles

            mol = parse_smiles(key)
            self._mol_by_key[key] = mol
        return mol

    def embed_molecule(self, mol_or_key, memo: dict | None = None) -> Tensor:
        """Graph embedding of one molecule: features -> GGNN -> gated readout."""
        if isinstance(mol_or_key, MolGraph):
            key = canonical_smiles(mol_or_key)
            self._mol_by_key.setdefault(key, mol_or_key)
        else:
            key = mol_or_key
        if memo is not None and key in memo:
            return memo[key]
        mol = self._mol(key)
        if mol.num_atoms == 0:
            raise ModelError("cannot embed an empty molecule")
        feats = Tensor(atom_features(mol))
        states = ggnn_propagate(self.store, "mol", feats, molecule_adjacency(mol),
                                self.config.ggnn_steps)
        emb = gated_readout(self.store, "mol.read", states)
        if memo is not None:
            memo[key] = emb
        return emb

    def _embed_cached(self, key: str) -> np.ndarray:
        """Version-checked numpy embedding cache for inference paths."""
        if self._cache_version != self.store.version:
            self._embed_cache.clear()
            self._cache_version = self.store.version
        hit = self._embed_cache.get(key)
        if hit is None:
            with no_grad():
                hit = self.embed_molecule(key).data
            self._embed_cache[key] = hit
        return hit

    def _action_embedding(self, action: Action, memo: dict | None) -> Tensor:
        if action.kind in ("MOL", "REF"):
            if memo is None:
                return Tensor(self._embed_cached(action.smiles))
            return self.embed_molecule(action.smiles, memo)
        name = action.kind
        return self.store[f"act.{name}"]

    # -- latent handling ------------------------------------------------------

    def zero_latent(self) -> np.ndarray:
        return np.zeros((1, self.config.latent_dim), dtype=np.float32)

    def _initial_hidden(self, z) -> list[Tensor]:
        if self.config.mode == "gen" or z is None:
            z = Tensor(self.zero_latent())  # the generator ignores any latent
        elif not isinstance(z, Tensor):
            z = Tensor(np.asarray(z, dtype=np.float32).reshape(1, -1))
        if z.shape[1] != self.config.latent_dim:
            raise ModelError(f"latent dim {z.shape[1]} != {self.config.latent_dim}")
        return [
            ad.add(ad.matmul(z, self.store[f"zproj.l{i}.W"]), self.store[f"zproj.l{i}.b"])
            for i in range(self.config.context_layers)
        ]

    # -- decoding -------------------------------------------------------------

    def session(self, z=None, train: bool = False, memo: dict | None = None,
                rng=None, max_steps: int | None = None) -> "DecodeSession":
        return DecodeSession(self, z, train=train, memo=memo, dropout_rng=rng,
                             max_steps=max_steps)

    def decode_logits(self, context: Tensor, action_type: ActionType,
                      state: DecodeState, memo: dict | None = None):
        """(candidates, logits, mask) for one step: w = head(context), one
        logit per candidate embedding, legality as a boolean mask."""
        if action_type == ActionType.ADD_NODE:
            head, candidates = "add", [Action("B"), Action("P")]
        elif action_type == ActionType.PICK_BLOCK:
            head, candidates = "pick", [Action("MOL", key) for key in self.catalog]
        elif action_type == ActionType.CONNECT:
            head = "connect"
            candidates = [Action("REF", s) for s in state.molecules]
            candidates += [Action("STOP_I"), Action("STOP_F")]
        else:
            raise ModelError(f"no logits for state {action_type}")
        legal = set(legal_actions(state))
        mask = np.array([c in legal for c in candidates], dtype=bool)
        if not mask.any():
            raise MaskedActionError(f"every {head} candidate is masked")
        w = mlp_relu_1h(self.store, f"head.{head}", context)  # (1, embed)
        stack = ad.concat([self._action_embedding(c, memo) for c in candidates], axis=0)
        logits = ad.reshape(ad.matmul(stack, ad.transpose(w)), (-1,))
        return candidates, logits, mask

    def log_prob(self, seq, z=None, oracle=None, train: bool = False,
                 dropout_rng=None, max_steps: int | None = None) -> Tensor:
        """Teacher-forced log-probability of a full action sequence."""
        actions = seq.actions if isinstance(seq, ActionSeq) else tuple(seq)
        memo: dict = {}
        session = self.session(z, train=train, memo=memo, rng=dropout_rng,
                               max_steps=max_steps)
        total = None
        for action in actions:
            logp = session.score(action)
            total = logp if total is None else ad.add(total, logp)
            session.advance(action, oracle=oracle)
        if not session.state.finished:
            raise ModelError("sequence did not finish with STOP_F")
        return total

    def sample_dag(self, oracle, rng, z=None, max_steps: int | None = None,
                   greedy: bool = False):
        """Decode one route; returns (dag, seq, log_prob).

        Routes whose final reaction would collapse onto a bare building
        block are rolled back: the offending choice is masked and the walk
        backtracks through the (finite, budget-bounded) action tree until a
        structurally valid route completes.  The reported log-probability
        is that of the returned sequence under the static masks, matching
        ``log_prob``.
        """

        class _Frame:
            __slots__ = ("pre", "candidates", "logits", "mask", "tried", "chosen")

            def __init__(self, pre, candidates, logits, mask):
                self.pre = pre
                self.candidates = candidates
                self.logits = logits
                self.mask = mask
                self.tried = np.zeros(len(candidates), dtype=bool)
                self.chosen = -1

        def new_frame(sess) -> _Frame:
            candidates, logits, mask = sess.logits()
            return _Frame(sess, candidates, logits.data.copy(), mask)

        with no_grad():
            frames = [new_frame(self.session(z, max_steps=max_steps))]
            final_state = None
            while True:
                frame = frames[-1]
                avail = frame.mask & ~frame.tried
                if not avail.any():
                    frames.pop()
                    if not frames:
                        raise DegenerateSynthesisError(
                            "no structurally valid route reachable in this world"
                        )
                    parent = frames[-1]
                    parent.tried[parent.chosen] = True
                    continue
                if greedy:
                    idx = int(np.argmax(np.where(avail, frame.logits, -np.inf)))
                else:
                    probs = masked_probs(frame.logits, avail)
                    idx = int(rng.choice(len(probs), p=probs / probs.sum()))
                action = frame.candidates[idx]
                work = frame.pre.fork()
                if action.kind == "STOP_F":
                    try:
                        apply_action(work.state, action, oracle, rng)
                    except DegenerateSynthesisError:
                        frame.tried[idx] = True
                        continue
                    frame.chosen = idx
                    final_state = work.state
                    break
                work.advance(action, oracle=oracle, oracle_rng=rng)
                frame.chosen = idx
                frames.append(new_frame(work))

            taken = tuple(f.candidates[f.chosen] for f in frames)
            total = sum(
                float(np.log(masked_probs(f.logits, f.mask)[f.chosen])) for f in frames
            )
            return final_state.result, ActionSeq(taken), total

    def greedy_decode(self, oracle, z=None, max_steps: int | None = None):
        return self.sample_dag(oracle, np.random.default_rng(0), z=z,
                               max_steps=max_steps, greedy=True)

    # -- encoder --------------------------------------------------------------

    def encode(self, d: SynthesisDAG, memo: dict | None = None):
        """Two-step hierarchical encoding: molecule embeddings initialise DAG
        node states, messages then flow forward along edges for a fixed
        number of rounds; mean and log-variance are linear maps of the final
        product node's state."""
        if self.config.mode != "ae":
            raise ModelError("encode requires an autoencoder-mode model")
        states = ad.concat(
            [self.embed_molecule(node.smiles, memo) for node in d.nodes], axis=0
        )
        n = len(d.nodes)
        pred = np.zeros((n, n), dtype=np.float32)
        for a, b in d.edges:
            pred[b, a] = 1.0  # messages flow from reactants into products
        pred_t = Tensor(pred)
        for _ in range(self.config.encoder_steps):
            msg = ad.matmul(
                pred_t,
                ad.add(ad.matmul(states, self.store["enc.msg.W"]), self.store["enc.msg.b"]),
            )
            states = gru_cell(self.store, "enc.gru", msg, states)
        final = ad.take_row(states, d.final_id)
        mu = ad.add(ad.matmul(final, self.store["enc.mu.W"]), self.store["enc.mu.b"])
        logvar = ad.add(ad.matmul(final, self.store["enc.logvar.W"]),
                        self.store["enc.logvar.b"])
        return mu, logvar

    def reparameterize(self, mu: Tensor, logvar: Tensor, rng):
        sigma = ad.clamp(ad.exp(ad.mul(logvar, 0.5)), SIGMA_MIN, SIGMA_MAX)
        eps = Tensor(rng.standard_normal(mu.shape).astype(np.float32))
        return ad.add(mu, ad.mul(sigma, eps))

    def wae_loss(self, batch, rng, lam: float = 10.0, train: bool = True,
                 seqs=None, prior_sigma2: float = 1.0):
        """Reconstruction NLL plus lambda * MMD^2 against the prior."""
        if len(batch) < 2:
            raise ModelError("wae_loss needs a batch of at least 2 routes")
        memo: dict = {}
        if seqs is None:
            seqs = [serialize(d, rng) for d in batch]
        zs = []
        nll = None
        for d, seq in zip(batch, seqs):
            mu, logvar = self.encode(d, memo)
            z = self.reparameterize(mu, logvar, rng)
            zs.append(z)
            item = ad.neg(self.log_prob(seq, z=z, train=train, dropout_rng=rng))
            nll = item if nll is None else ad.add(nll, item)
        nll = ad.mul(nll, 1.0 / len(batch))
        aggregate = ad.concat(zs, axis=0)
        prior = Tensor(
            (rng.standard_normal((len(batch), self.config.latent_dim))
             * np.sqrt(prior_sigma2)).astype(np.float32)
        )
        penalty = mmd_imq(aggregate, prior, prior_sigma2=prior_sigma2)
        loss = ad.add(nll, ad.mul(penalty, lam))
        return loss, {"nll": float(nll.item()), "mmd": float(penalty.item())}

    def reconstruction_nll(self, batch, rng, seqs=None, train: bool = True) -> Tensor:
        """Mean encode-then-decode NLL without the distribution penalty."""
        memo: dict = {}
        if seqs is None:
            seqs = [serialize(d, rng) for d in batch]
        total = None
        for d, seq in zip(batch, seqs):
            mu, logvar = self.encode(d, memo)
            z = self.reparameterize(mu, logvar, rng)
            item = ad.neg(self.log_prob(seq, z=z, train=train, dropout_rng=rng))
            total = item if total is None else ad.add(total, item)
        return ad.mul(total, 1.0 / len(batch))

    def nll_loss(self, seqs, train: bool = True, dropout_rng=None) -> Tensor:
        """Mean negative log-likelihood of serialized routes (generator mode)."""
        total = None
        for seq in seqs:
            item = ad.neg(self.log_prob(seq, train=train, dropout_rng=dropout_rng))
            total = item if total is None else ad.add(total, item)
        return ad.mul(total, 1.0 / len(seqs))


class DecodeSession:
    """One in-flight decode: recurrent hidden stack plus masked state."""

    def __init__(self, model: RouteModel, z=None, train: bool = False,
                 memo: dict | None = None, dropout_rng=None,
                 max_steps: int | None = None):
        self.model = model
        self.train = train
        self.memo = memo
        self.dropout_rng = dropout_rng
        self.hidden = model._initial_hidden(z)
        self.state = DecodeState(model.catalog,
                                 max_steps or model.config.max_steps)

    def fork(self) -> "DecodeSession":
        other = DecodeSession.__new__(DecodeSession)
        other.model = self.model
        other.train = self.train
        other.memo = self.memo
        other.dropout_rng = self.dropout_rng
        other.hidden = [Tensor(h.data.copy()) for h in self.hidden]
        other.state = self.state.clone()
        return other

    def context(self) -> Tensor:
        ctx = self.hidden[-1]
        if self.train and self.model.config.dropout > 0 and self.dropout_rng is not None:
            ctx = dropout(ctx, self.model.config.dropout, self.dropout_rng, True)
        return ctx

    def logits(self):
        return self.model.decode_logits(self.context(), self.state.expected,
                                        self.state, self.memo)

    def score(self, action: Action) -> Tensor:
        """Log-probability of one action under the current masked softmax."""
        candidates, logits, mask = self.logits()
        try:
            idx = candidates.index(action)
        except ValueError:
            raise MaskedActionError(f"action {action.token()} not a candidate") from None
        return masked_log_prob(logits, mask, idx)

    def advance(self, action: Action, oracle=None, oracle_rng=None):
        """Apply the action to the decode state and feed its embedding in."""
        apply_action(self.state, action, oracle,
                     oracle_rng if oracle_rng is not None else np.random.default_rng(0))
        if self.state.finished:
            return
        x = self.model._action_embedding(action, self.memo)
        new_hidden = []
        for layer, h in enumerate(self.hidden):
            h_new = gru_cell(self.model.store, f"ctx.l{layer}", x, h)
            new_hidden.append(h_new)
            x = h_new
        self.hidden = new_hidden
