"""Append-only record log with in-memory aggregates rebuilt at boot.

Every suggestion and publication is one JSON line. Replaying the log after a
restart reproduces the exact pre-crash state, so the dashboard is a pure
function of the file. A single lock serializes writers; records are written
as whole lines so concurrent requests never interleave.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from ..metrics import DegenerateInput, pearson_r


class StoreError(Exception):
    pass


class UnknownSuggestion(StoreError):
    pass


class AlreadyPublished(StoreError):
    pass


class RatingOutOfRange(StoreError):
    pass


RATING_KEYS = ("relevance", "fluency", "coherence", "likability")
METRIC_KEYS = ("user", "rouge_l", "rouge_w")


class RecordStore:
    def __init__(self, log_path):
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self._suggestions: dict[str, dict] = {}
        self._published: dict[str, dict] = {}
        self._order: list[str] = []
        if self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.log_path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                kind = record.pop("type")
                if kind == "suggestion":
                    self._suggestions[record["id"]] = record
                    self._order.append(record["id"])
                elif kind == "published":
                    self._published[record["suggestion_id"]] = record

    def _append(self, kind: str, record: dict) -> None:
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps({"type": kind, **record}, ensure_ascii=False, sort_keys=True)
        with open(self.log_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
            handle.flush()

    def add_suggestion(self, record: dict) -> None:
        with self._lock:
            self._append("suggestion", record)
            self._suggestions[record["id"]] = record
            self._order.append(record["id"])

    def suggestion(self, suggestion_id: str) -> dict:
        try:
            return self._suggestions[suggestion_id]
        except KeyError:
            raise UnknownSuggestion(suggestion_id) from None

    def published(self, suggestion_id: str) -> dict | None:
        return self._published.get(suggestion_id)

    def add_published(self, record: dict) -> None:
        with self._lock:
            sid = record["suggestion_id"]
            if sid not in self._suggestions:
                raise UnknownSuggestion(sid)
            if sid in self._published:
                raise AlreadyPublished(sid)
            for key in RATING_KEYS:
                value = record["ratings"].get(key)
                if not isinstance(value, int) or not 1 <= value <= 5:
                    raise RatingOutOfRange(f"{key}={value!r}")
            self._append("published", record)
            self._published[sid] = record

    # ------------------------------------------------------------------
    # Dashboard aggregation
    # ------------------------------------------------------------------

    def dashboard(self, model: str | None = None) -> dict:
        """Per-model counts, means, and correlation cells over published records."""
        models = sorted(
            {r["model"] for r in self._suggestions.values() if model in (None, r["model"])}
        )
        out = []
        for name in models:
            suggestion_ids = [
                sid for sid in self._order if self._suggestions[sid]["model"] == name
            ]
            published = [
                self._published[sid] for sid in suggestion_ids if sid in self._published
            ]
            ratings_series = {
                key: [float(p["ratings"][key]) for p in published] for key in RATING_KEYS
            }
            score_series = {
                key: [float(p["scores"][key]["precision"]) for p in published]
                for key in METRIC_KEYS
            }

            def mean(series: list[float]) -> float | None:
                return sum(series) / len(series) if series else None

            correlations: dict[str, dict | None] = {}

            def cell(label: str, a: list[float], b: list[float]) -> None:
                try:
                    result = pearson_r(a, b)
                    correlations[label] = {"r": result.r, "n": result.n}
                except DegenerateInput:
                    correlations[label] = None

            for metric in METRIC_KEYS:
                for rating in RATING_KEYS:
                    cell(f"{metric}~{rating}", score_series[metric], ratings_series[rating])
            for i, a in enumerate(RATING_KEYS):
                for b in RATING_KEYS[i + 1 :]:
                    cell(f"{a}~{b}", ratings_series[a], ratings_series[b])

            out.append(
                {
                    "model": name,
                    "suggestions": len(suggestion_ids),
                    "published": len(published),
                    "mean_ratings": {k: mean(v) for k, v in ratings_series.items()},
                    "mean_scores": {k: mean(v) for k, v in score_series.items()},
                    "correlations": correlations,
                }
            )
        return {"models": out}
