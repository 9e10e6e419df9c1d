"""FastAPI application serving the distribution wire protocol.

    GET  /health         -> {"vocab_size": c, "backend": "<id>"}
    POST /distribution   -> {"probs": [float, ...]}
    POST /distributions  -> {"results": [[float, ...], ...]}

Malformed queries answer 400; 503 is returned while no model is loaded.
Responses carry float32 values; a batch response preserves request order.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .model import MaskedLmModel


class DistributionRequest(BaseModel):
    tokens: list[int]
    masked_index: int

    model_config = {"extra": "forbid"}


class BatchRequest(BaseModel):
    queries: list[DistributionRequest] = Field(max_length=4096)

    model_config = {"extra": "forbid"}


class DistributionResponse(BaseModel):
    probs: list[float]


class BatchResponse(BaseModel):
    results: list[list[float]]


class HealthResponse(BaseModel):
    vocab_size: int
    backend: str


def create_app(model: MaskedLmModel | None) -> FastAPI:
    app = FastAPI(title="mlm-server")
    app.state.model = model

    def require_model() -> MaskedLmModel:
        if app.state.model is None:
            raise HTTPException(status_code=503, detail="model not loaded")
        return app.state.model

    def checked(model: MaskedLmModel, query: DistributionRequest) -> tuple[list[int], int]:
        error = model.validate_query(query.tokens, query.masked_index)
        if error is not None:
            raise HTTPException(status_code=400, detail=error)
        return (query.tokens, query.masked_index)

    @app.get("/health", response_model=HealthResponse)
    def health():
        model = require_model()
        return HealthResponse(vocab_size=model.vocab_size, backend=model.backend_id)

    @app.post("/distribution", response_model=DistributionResponse)
    def distribution(query: DistributionRequest):
        model = require_model()
        vec = model.distributions([checked(model, query)])[0]
        return DistributionResponse(probs=[float(x) for x in vec])

    @app.post("/distributions", response_model=BatchResponse)
    def distributions(batch: BatchRequest):
        model = require_model()
        queries = [checked(model, q) for q in batch.queries]
        vectors = model.distributions(queries) if queries else []
        return BatchResponse(results=[[float(x) for x in vec] for vec in vectors])

    return app
