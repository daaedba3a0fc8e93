"""Reference reaction-predictor service speaking the /react protocol.

Serves a lookup table over HTTP so that many decode workers (or other
machines) can share one predictor, mirroring how a heavyweight model would
be deployed.  Request/response schema:

    POST /react   {"reactants": ["<smiles>", ...]} -> {"product": "<smiles>"}

A reactant set missing from the table falls back to a random reactant,
drawn from a stream seeded per normalized reactant key so the service
stays deterministic across restarts.
"""

from __future__ import annotations

import numpy as np

try:
    from fastapi import FastAPI, HTTPException
    from pydantic import BaseModel, Field
except ImportError as exc:  # pragma: no cover - exercised only without extras
    raise ImportError(
        "the oracle service needs the 'service' extra (pip install synthdag[service])"
    ) from exc

from .chem import ChemError, canonical_smiles, parse_smiles
from .oracle import LookupOracle, normalize_key
from .rng import fnv1a64


class ReactRequest(BaseModel):
    reactants: list[str] = Field(min_length=1)


class ReactResponse(BaseModel):
    product: str


class TableInfo(BaseModel):
    reactions: int


def create_app(oracle: LookupOracle) -> FastAPI:
    app = FastAPI(title="synthdag reaction oracle")

    @app.get("/health", response_model=TableInfo)
    def health() -> TableInfo:
        return TableInfo(reactions=len(oracle.table))

    @app.post("/react", response_model=ReactResponse)
    def react(request: ReactRequest) -> ReactResponse:
        try:
            mols = [parse_smiles(s) for s in request.reactants]
        except ChemError as exc:
            raise HTTPException(status_code=400, detail=f"bad reactant: {exc}") from exc
        key = normalize_key(request.reactants)
        rng = np.random.default_rng(fnv1a64(key.encode("utf-8")))
        product = oracle.predict(mols, rng)
        return ReactResponse(product=canonical_smiles(product))

    return app


def serve(oracle: LookupOracle, host: str = "127.0.0.1", port: int = 8321):
    import uvicorn

    uvicorn.run(create_app(oracle), host=host, port=port, log_level="warning")
