"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"


class ModelEntry(BaseModel):
    types: list[str]
    format: str
    path: str
    meta: dict


class ModelListResponse(BaseModel):
    models: list[ModelEntry]


class RecommendRequest(BaseModel):
    types: list[str] = Field(min_length=1)
    seq: list[str] = Field(default_factory=list)
    hole: int | None = None
    k: int = Field(default=10, ge=1)
    model: str = Field(default="hapi", pattern="^(hapi|ngram)$")


class RankedCall(BaseModel):
    method: str
    score: float


class RecommendResponse(BaseModel):
    types: list[str]
    hole: int
    ranked: list[RankedCall]


class ExtractRequest(BaseModel):
    inputs: list[str] = Field(min_length=1)
    output: str
    seed: int | None = None


class ExtractResponse(BaseModel):
    output: str
    stats: dict


class TrainRequest(BaseModel):
    corpus: str
    seed: int | None = None


class TrainResponse(BaseModel):
    trained: list[dict]
    skipped: list[dict]


class EvalRequest(BaseModel):
    corpus: str
    output: str | None = None
    macro: bool = False
    seed: int | None = None


class EvalResponse(BaseModel):
    rows: list[dict]
    output: str | None = None
