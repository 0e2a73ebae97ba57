"""A deterministic in-tree backend so the whole suite runs with no real model.

Generation is a pure function of the prepared-context digest and the sampling
config: same request, same text. Sampling settings are otherwise ignored
except for being echoed (as a fingerprint) into the output.
"""

from __future__ import annotations

import hashlib
import json

from fastapi import FastAPI
from pydantic import BaseModel


class PreprocessRequest(BaseModel):
    context: list[dict]


class GenerateRequest(BaseModel):
    prepared: dict
    config: dict


def context_digest(items: list[dict]) -> str:
    blob = json.dumps(items, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def mock_generation(digest: str, config: dict) -> str:
    fingerprint = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")
    ).hexdigest()[:8]
    desired = int(config.get("desired_length") or 150)
    n_sentences = max(1, desired // 25)
    sentences = [
        f"Continuation {i + 1} drawn from context {digest[:8]} with settings {fingerprint}."
        for i in range(n_sentences)
    ]
    return " ".join(sentences)


def create_mock_backend(model_name: str = "mock") -> FastAPI:
    app = FastAPI(title="storyeval mock backend")

    @app.post("/startup")
    async def startup(payload: dict) -> dict:
        return {"ok": True, "model": model_name}

    @app.post("/shutdown")
    async def shutdown(payload: dict) -> dict:
        return {"ok": True}

    @app.post("/preprocess")
    async def preprocess(request: PreprocessRequest) -> dict:
        return {
            "prepared": {
                "digest": context_digest(request.context),
                "length": len(request.context),
            }
        }

    @app.post("/generate")
    async def generate(request: GenerateRequest) -> dict:
        digest = request.prepared.get("digest", "")
        return {"text": mock_generation(digest, request.config)}

    return app
