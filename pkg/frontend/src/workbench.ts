/** Author workbench: request a continuation, edit it with live diff
 * highlighting, rate it, publish. At most one diff request is in flight;
 * newer edits abort older requests (latest wins). */

import { ServiceError } from "./api.js";
import type { ServiceApi } from "./api.js";
import type { EntryCoordinates, GenerationConfig, PublishedRecord, Suggestion } from "./api.js";
import { renderDiff, renderPlain } from "./diff.js";
import { RATING_KEYS, RatingDraft, emptyRatings, isComplete, setRating } from "./ratings.js";

export interface WorkbenchOptions {
  /** Debounce for live diff requests, milliseconds. */
  debounceMs?: number;
}

export class Workbench {
  readonly editor: HTMLTextAreaElement;
  readonly diffView: HTMLElement;
  readonly banner: HTMLElement;
  readonly ratingForm: HTMLElement;
  readonly publishButton: HTMLButtonElement;
  readonly scoresView: HTMLElement;

  private suggestion: Suggestion | null = null;
  private ratings: RatingDraft = emptyRatings();
  private comment = "";
  private debounceMs: number;
  private debounceHandle: ReturnType<typeof setTimeout> | null = null;
  private inflight: AbortController | null = null;
  private published = false;

  constructor(
    private readonly api: ServiceApi,
    readonly root: HTMLElement,
    options: WorkbenchOptions = {},
  ) {
    this.debounceMs = options.debounceMs ?? 400;
    const doc = root.ownerDocument;

    this.banner = doc.createElement("div");
    this.banner.className = "banner";
    this.editor = doc.createElement("textarea");
    this.editor.className = "entry-editor";
    this.editor.addEventListener("input", () => this.onEdit(this.editor.value));
    this.diffView = doc.createElement("div");
    this.diffView.className = "diff-view";
    this.ratingForm = doc.createElement("div");
    this.ratingForm.className = "rating-form";
    this.publishButton = doc.createElement("button");
    this.publishButton.className = "publish-button";
    this.publishButton.textContent = "Publish";
    this.publishButton.disabled = true;
    this.publishButton.addEventListener("click", () => void this.publish());
    this.scoresView = doc.createElement("div");
    this.scoresView.className = "scores";

    this.buildRatingForm();
    root.replaceChildren(
      this.banner,
      this.editor,
      this.diffView,
      this.ratingForm,
      this.publishButton,
      this.scoresView,
    );
  }

  private buildRatingForm(): void {
    const doc = this.root.ownerDocument;
    for (const key of RATING_KEYS) {
      const group = doc.createElement("fieldset");
      group.dataset.rating = key;
      const legend = doc.createElement("legend");
      legend.textContent = key;
      group.appendChild(legend);
      for (let value = 1; value <= 5; value += 1) {
        const label = doc.createElement("label");
        const radio = doc.createElement("input");
        radio.type = "radio";
        radio.name = `rating-${key}`;
        radio.value = String(value);
        radio.addEventListener("change", () => this.setRating(key, value));
        label.append(radio, doc.createTextNode(String(value)));
        group.appendChild(label);
      }
      this.ratingForm.appendChild(group);
    }
    const comment = doc.createElement("textarea");
    comment.className = "comment";
    comment.placeholder = "Optional comment";
    comment.addEventListener("input", () => {
      this.comment = comment.value;
    });
    this.ratingForm.appendChild(comment);
  }

  private showBanner(kind: "info" | "error", message: string): void {
    this.banner.textContent = message;
    this.banner.className = `banner banner-${kind}`;
  }

  private clearBanner(): void {
    this.banner.textContent = "";
    this.banner.className = "banner";
  }

  get currentSuggestion(): Suggestion | null {
    return this.suggestion;
  }

  get canPublish(): boolean {
    return this.suggestion !== null && !this.published && isComplete(this.ratings);
  }

  setRating(key: (typeof RATING_KEYS)[number], value: number): void {
    this.ratings = setRating(this.ratings, key, value);
    this.publishButton.disabled = !this.canPublish;
  }

  async requestSuggestion(
    coordinates: EntryCoordinates,
    model: string,
    config?: GenerationConfig,
  ): Promise<Suggestion | null> {
    this.clearBanner();
    try {
      const suggestion = await this.api.requestSuggestion(coordinates, model, config);
      this.suggestion = suggestion;
      this.published = false;
      this.ratings = emptyRatings();
      this.publishButton.disabled = true;
      this.scoresView.replaceChildren();
      this.editor.value = suggestion.generated_text;
      renderDiff(this.diffView, [{ text: suggestion.generated_text, kind: "matched" }]);
      return suggestion;
    } catch (error) {
      if (error instanceof ServiceError) {
        this.showBanner("error", `${error.code}: ${error.message}`);
        return null;
      }
      throw error;
    }
  }

  /** Debounced editor hook; exposed for tests and programmatic edits. */
  onEdit(text: string): void {
    if (this.suggestion === null) return;
    if (this.debounceHandle !== null) clearTimeout(this.debounceHandle);
    this.debounceHandle = setTimeout(() => {
      this.debounceHandle = null;
      void this.refreshDiff(text);
    }, this.debounceMs);
  }

  async refreshDiff(text: string): Promise<void> {
    if (this.suggestion === null) return;
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const spans = await this.api.liveDiff(this.suggestion.id, text, controller.signal);
      if (!controller.signal.aborted) renderDiff(this.diffView, spans);
    } catch (error) {
      if (controller.signal.aborted) return; // superseded by a newer edit
      renderPlain(this.diffView, text); // degraded view on failure
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  async publish(): Promise<PublishedRecord | null> {
    if (!this.canPublish || this.suggestion === null || !isComplete(this.ratings)) {
      return null;
    }
    this.clearBanner();
    try {
      const record = await this.api.publish(
        this.suggestion.id,
        this.editor.value,
        this.ratings,
        this.comment || undefined,
      );
      this.published = true;
      this.publishButton.disabled = true;
      this.renderScores(record);
      this.showBanner("info", "Published.");
      return record;
    } catch (error) {
      if (error instanceof ServiceError) {
        this.showBanner("error", `${error.code}: ${error.message}`);
        return null;
      }
      throw error;
    }
  }

  private renderScores(record: PublishedRecord): void {
    const doc = this.root.ownerDocument;
    this.scoresView.replaceChildren();
    const list = doc.createElement("dl");
    for (const [metric, triple] of Object.entries(record.scores)) {
      const term = doc.createElement("dt");
      term.textContent = metric;
      const detail = doc.createElement("dd");
      detail.textContent =
        `precision ${triple.precision.toFixed(3)}, ` +
        `recall ${triple.recall.toFixed(3)}, f1 ${triple.f1.toFixed(3)}`;
      list.append(term, detail);
    }
    this.scoresView.appendChild(list);
  }
}
