"""Request/response models for the evaluation frontend."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class GenerationConfig(BaseModel):
    """Sampling settings passed through to the backend.

    Exactly one of top_k / top_p must end up set; when the client provides
    neither, nucleus sampling with p=0.9 is the default. Sampling semantics
    are the backend's responsibility.
    """

    top_k: int | None = Field(default=None, ge=1)
    top_p: float | None = Field(default=None, gt=0, le=1)
    temperature: float = Field(default=0.9, gt=0)
    repetition_penalty: float = Field(default=1.2, gt=0)
    desired_length: int = Field(default=150, ge=1)
    max_sentences: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _one_sampler(self) -> "GenerationConfig":
        if self.top_k is not None and self.top_p is not None:
            raise ValueError("set exactly one of top_k and top_p")
        if self.top_k is None and self.top_p is None:
            self.top_p = 0.9
        return self


class RegisterRequest(BaseModel):
    model: str
    endpoint: str


class RegisterResponse(BaseModel):
    model: str
    endpoint: str
    status: str


class SuggestRequest(BaseModel):
    story_id: str
    scene_index: int = Field(ge=0)
    entry_index: int = Field(ge=0)
    model: str
    config: GenerationConfig = Field(default_factory=GenerationConfig)


class SuggestionView(BaseModel):
    id: str
    model: str
    story_id: str
    scene_index: int
    entry_index: int
    context_digest: str
    generated_text: str
    config: GenerationConfig
    created_at: str


class Ratings(BaseModel):
    relevance: int = Field(ge=1, le=5)
    fluency: int = Field(ge=1, le=5)
    coherence: int = Field(ge=1, le=5)
    likability: int = Field(ge=1, le=5)


class PublishRequest(BaseModel):
    suggestion_id: str
    final_text: str
    ratings: Ratings
    comment: str | None = None


class ScoreTriple(BaseModel):
    precision: float
    recall: float
    f1: float


class SpanView(BaseModel):
    start_x: int
    start_y: int
    length: int
    counted: bool


class PublishedView(BaseModel):
    suggestion_id: str
    final_text: str
    ratings: Ratings
    comment: str | None
    scores: dict[str, ScoreTriple]
    spans: list[SpanView]
    published_at: str


class RecordView(BaseModel):
    suggestion: SuggestionView
    published: PublishedView | None


class DiffSpan(BaseModel):
    text: str
    kind: str  # matched | added | deleted


class DiffResponse(BaseModel):
    suggestion_id: str
    spans: list[DiffSpan]


class CorrelationCell(BaseModel):
    r: float
    n: int


class ModelSummary(BaseModel):
    model: str
    suggestions: int
    published: int
    mean_ratings: dict[str, float | None]
    mean_scores: dict[str, float | None]
    correlations: dict[str, CorrelationCell | None]


class DashboardResponse(BaseModel):
    models: list[ModelSummary]
