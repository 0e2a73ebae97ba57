/** Typed client for the evaluation service. The UI never computes metrics
 * itself: every span and score rendered comes from these endpoints. */

export interface GenerationConfig {
  top_k?: number | null;
  top_p?: number | null;
  temperature?: number;
  repetition_penalty?: number;
  desired_length?: number;
  max_sentences?: number;
}

export interface EntryCoordinates {
  story_id: string;
  scene_index: number;
  entry_index: number;
}

export interface Suggestion {
  id: string;
  model: string;
  story_id: string;
  scene_index: number;
  entry_index: number;
  context_digest: string;
  generated_text: string;
  config: GenerationConfig;
  created_at: string;
}

export type SpanKind = "matched" | "added" | "deleted";

export interface DiffSpan {
  text: string;
  kind: SpanKind;
}

export interface ScoreTriple {
  precision: number;
  recall: number;
  f1: number;
}

export interface Ratings {
  relevance: number;
  fluency: number;
  coherence: number;
  likability: number;
}

export interface PublishedRecord {
  suggestion_id: string;
  final_text: string;
  ratings: Ratings;
  comment: string | null;
  scores: Record<string, ScoreTriple>;
  published_at: string;
}

export interface CorrelationCell {
  r: number;
  n: number;
}

export interface ModelSummary {
  model: string;
  suggestions: number;
  published: number;
  mean_ratings: Record<string, number | null>;
  mean_scores: Record<string, number | null>;
  correlations: Record<string, CorrelationCell | null>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = `http_${response.status}`;
  let message = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === "object" && body.detail !== null) {
      code = body.detail.code ?? code;
      message = body.detail.message ?? JSON.stringify(body.detail);
    } else if (body && body.detail !== undefined) {
      message = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(response.status, code, message);
}

/** The surface the workbench needs; tests substitute stubs. */
export interface ServiceApi {
  requestSuggestion(
    coordinates: EntryCoordinates,
    model: string,
    config?: GenerationConfig,
  ): Promise<Suggestion>;
  liveDiff(suggestionId: string, edited: string, signal?: AbortSignal): Promise<DiffSpan[]>;
  publish(
    suggestionId: string,
    finalText: string,
    ratings: Ratings,
    comment?: string,
  ): Promise<PublishedRecord>;
  dashboard(model?: string): Promise<ModelSummary[]>;
}

export class ApiClient implements ServiceApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, { signal });
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  requestSuggestion(
    coordinates: EntryCoordinates,
    model: string,
    config?: GenerationConfig,
  ): Promise<Suggestion> {
    const payload: Record<string, unknown> = { ...coordinates, model };
    if (config) payload.config = config;
    return this.post<Suggestion>("/suggest", payload);
  }

  async liveDiff(suggestionId: string, edited: string, signal?: AbortSignal): Promise<DiffSpan[]> {
    const query = new URLSearchParams({ edited });
    const body = await this.get<{ spans: DiffSpan[] }>(
      `/diff/${encodeURIComponent(suggestionId)}?${query}`,
      signal,
    );
    return body.spans;
  }

  publish(
    suggestionId: string,
    finalText: string,
    ratings: Ratings,
    comment?: string,
  ): Promise<PublishedRecord> {
    return this.post<PublishedRecord>("/publish", {
      suggestion_id: suggestionId,
      final_text: finalText,
      ratings,
      comment: comment ?? null,
    });
  }

  async dashboard(model?: string): Promise<ModelSummary[]> {
    const suffix = model ? `?${new URLSearchParams({ model })}` : "";
    const body = await this.get<{ models: ModelSummary[] }>(`/dashboard${suffix}`);
    return body.models;
  }

  registerModel(model: string, endpoint: string): Promise<{ model: string; status: string }> {
    return this.post("/models/register", { model, endpoint });
  }
}
