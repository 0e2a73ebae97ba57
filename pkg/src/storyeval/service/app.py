"""Evaluation frontend: suggestion generation, edit collection, and dashboards.

The frontend mediates between authors and model backends. A suggestion
request builds the story's context bundle, packs it under the active policy,
sends it through the backend's preprocess/generate methods, truncates the
output to the sentence cap, and persists the record. Publishing recomputes
the edit metrics on the stored texts, so every stored score is reproducible
from the log alone.
"""

from __future__ import annotations

import os
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from ..dataset import IndexOutOfRange, NarratorTarget, build_generation_example, load_corpus
from ..metrics import EmptyInput, rouge_l, rouge_w, user_score
from ..packing import PackingError, PackingPolicy, builtin_policy, pack
from ..textproc import TokenizerMode, default_stopwords, tokenize, truncate_sentences
from .backends import BackendProtocolError, BackendRegistry, BackendUnreachable, NotReady
from .diffspans import diff_spans
from .mock_backend import context_digest
from .schemas import (
    DashboardResponse,
    DiffResponse,
    PublishedView,
    PublishRequest,
    RecordView,
    RegisterRequest,
    RegisterResponse,
    SuggestionView,
    SuggestRequest,
)
from .store import AlreadyPublished, RatingOutOfRange, RecordStore, UnknownSuggestion

ROUGE_W_ALPHA = 1.2


def _fail(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(
    data_dir: str | Path | None = None,
    backend_transport_factory=None,
    policy: PackingPolicy | None = None,
) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("STORYEVAL_DATA_DIR", "storyeval-data"))
    timeout = float(os.environ.get("STORYEVAL_BACKEND_TIMEOUT", "30"))

    corpus = {story.id: story for story in load_corpus(data_dir)} if data_dir.exists() else {}
    store = RecordStore(data_dir / "records.log")
    registry = BackendRegistry(timeout=timeout, transport_factory=backend_transport_factory)
    packing_policy = policy or builtin_policy("default")
    stopwords = default_stopwords()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        await registry.shutdown_all()

    app = FastAPI(title="storyeval frontend", lifespan=lifespan)
    # the browser workbench is served statically from elsewhere
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.store = store
    app.state.registry = registry
    app.state.corpus = corpus

    @app.post("/models/register", response_model=RegisterResponse)
    async def register(request: RegisterRequest) -> RegisterResponse:
        try:
            descriptor = await registry.register(request.model, request.endpoint)
        except BackendUnreachable as exc:
            raise _fail(502, "backend_unreachable", str(exc)) from exc
        except BackendProtocolError as exc:
            raise _fail(502, "backend_error", str(exc)) from exc
        return RegisterResponse(
            model=descriptor.model, endpoint=descriptor.endpoint, status=descriptor.status
        )

    @app.post("/suggest", response_model=SuggestionView)
    async def suggest(request: SuggestRequest) -> SuggestionView:
        story = corpus.get(request.story_id)
        if story is None:
            raise _fail(404, "unknown_story", f"no story {request.story_id!r}")
        try:
            registry.require_ready(request.model)
        except NotReady as exc:
            raise _fail(409, "not_ready", f"model not ready: {request.model}") from exc
        try:
            example = build_generation_example(story, request.scene_index, request.entry_index)
        except IndexOutOfRange as exc:
            raise _fail(422, "bad_coordinates", str(exc)) from exc
        except NarratorTarget as exc:
            raise _fail(422, "narrator_target", str(exc)) from exc

        names = {spec.name for spec, _ in example.bundle}
        constraints = [
            c
            for c in packing_policy.constraints
            if all(segment in names for segment, _ in c.terms)
        ]
        separators = {spec.name: f"<{spec.name}>" for spec, _ in example.bundle}
        try:
            packed = pack(
                example.bundle, constraints, packing_policy.effective_budget, separators
            )
        except PackingError as exc:
            raise _fail(500, "packing_failed", str(exc)) from exc
        wire = [
            {
                "token": str(item.token),
                "position": item.position,
                "segments": sorted(item.segment_ids),
            }
            for item in packed.items
        ]
        digest = context_digest(wire)

        try:
            prepared = await registry.preprocess(request.model, wire)
            raw_text = await registry.generate(
                request.model, prepared, request.config.model_dump()
            )
        except NotReady as exc:
            raise _fail(409, "not_ready", f"model not ready: {request.model}") from exc
        except BackendUnreachable as exc:
            raise _fail(502, "backend_unreachable", str(exc)) from exc
        except BackendProtocolError as exc:
            raise _fail(502, "backend_error", str(exc)) from exc

        record = {
            "id": uuid.uuid4().hex,
            "model": request.model,
            "story_id": request.story_id,
            "scene_index": request.scene_index,
            "entry_index": request.entry_index,
            "context_digest": digest,
            "generated_text": truncate_sentences(raw_text, request.config.max_sentences),
            "config": request.config.model_dump(),
            "created_at": datetime.now(timezone.utc).isoformat(),
        }
        store.add_suggestion(record)
        return SuggestionView(**record)

    @app.post("/publish", response_model=PublishedView)
    async def publish(request: PublishRequest) -> PublishedView:
        try:
            suggestion = store.suggestion(request.suggestion_id)
        except UnknownSuggestion as exc:
            raise _fail(404, "unknown_suggestion", str(exc)) from exc
        if store.published(request.suggestion_id) is not None:
            raise _fail(409, "already_published", request.suggestion_id)

        generated = tokenize(suggestion["generated_text"], TokenizerMode.METRIC)
        final = tokenize(request.final_text, TokenizerMode.METRIC)
        try:
            user = user_score(generated, final, stopwords)
            lcs = rouge_l(generated, final)
            weighted = rouge_w(generated, final, alpha=ROUGE_W_ALPHA)
        except EmptyInput as exc:
            raise _fail(422, "empty_input", str(exc)) from exc

        def triple(report) -> dict:
            return {"precision": report.precision, "recall": report.recall, "f1": report.f1}

        record = {
            "suggestion_id": request.suggestion_id,
            "final_text": request.final_text,
            "ratings": request.ratings.model_dump(),
            "comment": request.comment,
            "scores": {"user": triple(user), "rouge_l": triple(lcs), "rouge_w": triple(weighted)},
            "spans": [
                {"start_x": s.start_x, "start_y": s.start_y, "length": s.length, "counted": s.counted}
                for s in user.spans
            ],
            "published_at": datetime.now(timezone.utc).isoformat(),
        }
        try:
            store.add_published(record)
        except AlreadyPublished as exc:
            raise _fail(409, "already_published", str(exc)) from exc
        except RatingOutOfRange as exc:
            raise _fail(422, "rating_out_of_range", str(exc)) from exc
        return PublishedView(**record)

    @app.get("/dashboard", response_model=DashboardResponse)
    async def dashboard(model: str | None = Query(default=None)) -> DashboardResponse:
        return DashboardResponse(**store.dashboard(model))

    @app.get("/records/{suggestion_id}", response_model=RecordView)
    async def record(suggestion_id: str) -> RecordView:
        try:
            suggestion = store.suggestion(suggestion_id)
        except UnknownSuggestion as exc:
            raise _fail(404, "unknown_suggestion", str(exc)) from exc
        published = store.published(suggestion_id)
        return RecordView(
            suggestion=SuggestionView(**suggestion),
            published=PublishedView(**published) if published else None,
        )

    @app.get("/diff/{suggestion_id}", response_model=DiffResponse)
    async def diff(suggestion_id: str, edited: str | None = Query(default=None)) -> DiffResponse:
        try:
            suggestion = store.suggestion(suggestion_id)
        except UnknownSuggestion as exc:
            raise _fail(404, "unknown_suggestion", str(exc)) from exc
        if edited is None:
            published = store.published(suggestion_id)
            edited = published["final_text"] if published else suggestion["generated_text"]
        spans = diff_spans(suggestion["generated_text"], edited)
        return DiffResponse(suggestion_id=suggestion_id, spans=spans)

    return app
