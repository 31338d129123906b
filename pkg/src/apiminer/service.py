"""FastAPI service wrapping the core package over one model store.

The service owns a store directory: queries (/recommend, /inspect, /models)
read trained models from it, while the batch endpoints (/extract, /train,
/eval) run the pipeline on server-local paths given in the request body.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse

from . import schemas
from .config import PipelineConfig
from .errors import (ApiMinerError, OutOfVocabularyError, ParseError,
                     UnknownModelError)
from .pipeline import (evaluate_corpus, extract_files, render_model,
                       rows_to_csv, train_corpus, write_text)
from .recommend import next_api_call, next_api_call_ngram
from .sequences import Corpus, ObjectKey
from .store import FORMAT_HMM, ModelStore


def create_app(store_dir: str | Path,
               config: PipelineConfig | None = None) -> FastAPI:
    store = ModelStore(store_dir)
    base_config = config or PipelineConfig()
    app = FastAPI(title="apiminer", version="0.1.0")

    def _config(seed: int | None) -> PipelineConfig:
        if seed is None:
            return base_config
        return dataclasses.replace(base_config, seed=seed)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse()

    @app.get("/models", response_model=schemas.ModelListResponse)
    def models():
        return schemas.ModelListResponse(
            models=[schemas.ModelEntry(**entry) for entry in store.entries()])

    @app.post("/recommend", response_model=schemas.RecommendResponse)
    def recommend(request: schemas.RecommendRequest):
        key = ObjectKey.of(request.types)
        try:
            if request.model == FORMAT_HMM:
                rec = next_api_call(store.load_hmm(key), request.seq,
                                    request.hole)
            else:
                rec = next_api_call_ngram(store.load_ngram(key), request.seq,
                                          request.hole)
        except UnknownModelError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except (OutOfVocabularyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        ranked = [schemas.RankedCall(method=m, score=s)
                  for m, s in rec.ranked[:request.k]]
        return schemas.RecommendResponse(types=list(key.types),
                                         hole=rec.hole_position,
                                         ranked=ranked)

    @app.get("/inspect", response_class=PlainTextResponse)
    def inspect(types: str, model: str = FORMAT_HMM):
        key = ObjectKey.of(t.strip() for t in types.split(",") if t.strip())
        try:
            return render_model(store, key, model)
        except UnknownModelError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/extract", response_model=schemas.ExtractResponse)
    def extract(request: schemas.ExtractRequest):
        config = _config(request.seed)
        try:
            corpus, stats, _ = extract_files(request.inputs, config)
        except (ParseError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        corpus.write_jsonl(request.output)
        return schemas.ExtractResponse(output=request.output,
                                       stats=dataclasses.asdict(stats))

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(request: schemas.TrainRequest):
        config = _config(request.seed)
        try:
            corpus = Corpus.read_jsonl(request.corpus)
        except (ParseError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        stats = train_corpus(corpus, store, config)
        return schemas.TrainResponse(trained=stats.trained,
                                     skipped=stats.skipped)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(request: schemas.EvalRequest):
        config = _config(request.seed)
        try:
            corpus = Corpus.read_jsonl(request.corpus)
        except (ParseError, OSError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        try:
            rows, _ = evaluate_corpus(corpus, config, macro=request.macro)
        except ApiMinerError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if request.output:
            write_text(request.output, rows_to_csv(rows))
        return schemas.EvalResponse(rows=rows, output=request.output)

    return app
