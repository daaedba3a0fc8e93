"""Reaction predictors behind a single Product(...) interface.

Every oracle maps a reactant set to one major product; when a prediction
is unavailable or invalid the fallback picks one of the reactants at
random from the caller's seeded stream, so predictions are total.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Protocol

from .chem import ChemError, MolGraph, canonical_smiles, parse_smiles

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 10000


class OracleError(RuntimeError):
    pass


class ReactionOracle(Protocol):
    deterministic: bool
    remote: bool

    def predict(self, reactants, rng) -> MolGraph: ...


def normalize_key(smiles_iterable) -> str:
    """Sorted, deduplicated canonical reactant strings joined by '.'."""
    keys = sorted({canonical_smiles(parse_smiles(s)) if isinstance(s, str) else canonical_smiles(s)
                   for s in smiles_iterable})
    return ".".join(keys)


def _fallback(reactants: list[MolGraph], rng) -> MolGraph:
    candidates = sorted(reactants, key=canonical_smiles)
    return candidates[int(rng.integers(len(candidates)))]


@dataclass
class ReactionTable:
    """Exact-match reaction lookup keyed by normalized reactant multiset."""

    products: dict[str, str] = field(default_factory=dict)
    duplicate_warnings: int = 0

    def get(self, key: str) -> str | None:
        return self.products.get(key)

    def __len__(self) -> int:
        return len(self.products)


def build_table(reactions) -> ReactionTable:
    """Build a lookup table from (reactants, product) pairs or records.

    Accepts ReactionRecord-like objects (with .reactants/.products) or
    plain (list-of-smiles, product-smiles) tuples.  The first product seen
    for a reactant set wins; later duplicates are dropped with a warning.
    """
    table = ReactionTable()
    for rec in reactions:
        if hasattr(rec, "reactants"):
            reactants = rec.reactants
            product = rec.products[0] if hasattr(rec, "products") else rec.product
        else:
            reactants, product = rec
        key = normalize_key(reactants)
        value = canonical_smiles(parse_smiles(product)) if isinstance(product, str) else canonical_smiles(product)
        if key in table.products:
            if table.products[key] != value:
                table.duplicate_warnings += 1
                logger.warning("duplicate reaction key %s; keeping first product", key)
            continue
        table.products[key] = value
    return table


class LookupOracle:
    """Table-backed oracle with the random-reactant fallback on misses."""

    deterministic = True
    remote = False

    def __init__(self, table: ReactionTable):
        self.table = table

    @staticmethod
    def from_reaction_file(path) -> "LookupOracle":
        from .dataset import parse_reactions

        records, _rejects = parse_reactions(path)
        return LookupOracle(build_table(records))

    def predict(self, reactants, rng) -> MolGraph:
        reactants = list(reactants)
        if not reactants:
            raise OracleError("empty reactant set")
        key = normalize_key(reactants)
        hit = self.table.get(key)
        if hit is not None:
            return parse_smiles(hit)
        return _fallback(reactants, rng)


class HttpOracle:
    """Client for an external predictor service speaking the /react protocol.

    POST {endpoint}/react with {"reactants": [smiles...]} and expect
    {"product": smiles}.  Invalid or unparseable products trigger the
    fallback rule; transport errors follow the configured policy.
    Responses are cached by normalized reactant key.
    """

    deterministic = False
    remote = True

    def __init__(
        self,
        endpoint: str,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        on_error: str = "fail",  # or "fallback"
    ):
        if on_error not in ("fail", "fallback"):
            raise ValueError("on_error must be 'fail' or 'fallback'")
        self.endpoint = endpoint.rstrip("/")
        self.timeout_ms = timeout_ms
        self.on_error = on_error
        self._cache: dict[str, str] = {}
        self._lock = threading.Lock()
        self.network_calls = 0

    def predict(self, reactants, rng) -> MolGraph:
        import requests

        reactants = list(reactants)
        if not reactants:
            raise OracleError("empty reactant set")
        key = normalize_key(reactants)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return parse_smiles(cached)
        payload = {"reactants": sorted(canonical_smiles(m) for m in reactants)}
        try:
            self.network_calls += 1
            resp = requests.post(
                f"{self.endpoint}/react",
                data=json.dumps(payload).encode("utf-8"),
                headers={"Content-Type": "application/json"},
                timeout=self.timeout_ms / 1000.0,
            )
            resp.raise_for_status()
            product_text = resp.json().get("product", "")
        except Exception as exc:
            if self.on_error == "fail":
                raise OracleError(f"oracle request failed: {exc}") from exc
            logger.warning("oracle request failed (%s); falling back", exc)
            return _fallback(reactants, rng)
        try:
            product = parse_smiles(product_text)
        except ChemError:
            logger.warning("oracle returned invalid product %r; falling back", product_text)
            return _fallback(reactants, rng)
        with self._lock:
            self._cache[key] = canonical_smiles(product)
        return product


def oracle_from_spec(spec: str, timeout_ms: int = DEFAULT_TIMEOUT_MS, on_error: str = "fail"):
    """Build an oracle from a CLI spec: lookup:<path> or http:<url>."""
    if spec.startswith("lookup:"):
        return LookupOracle.from_reaction_file(spec[len("lookup:"):])
    if spec.startswith(("http://", "https://")):
        return HttpOracle(spec, timeout_ms=timeout_ms, on_error=on_error)
    if spec.startswith("http:"):
        return HttpOracle("http://" + spec[len("http:"):], timeout_ms=timeout_ms, on_error=on_error)
    raise ValueError(f"bad oracle spec {spec!r} (expected lookup:<path> or http:<url>)")
