/** Diff rendering. Spans come from the server; this module only displays
 * them and checks the reconstruction invariants:
 *   matched + deleted spans concatenate to the generated text,
 *   matched + added spans concatenate to the edited text. */

import type { DiffSpan } from "./api.js";

export function reconstructGenerated(spans: DiffSpan[]): string {
  return spans
    .filter((span) => span.kind === "matched" || span.kind === "deleted")
    .map((span) => span.text)
    .join("");
}

export function reconstructEdited(spans: DiffSpan[]): string {
  return spans
    .filter((span) => span.kind === "matched" || span.kind === "added")
    .map((span) => span.text)
    .join("");
}

export function reconstructionHolds(spans: DiffSpan[], generated: string, edited: string): boolean {
  return reconstructGenerated(spans) === generated && reconstructEdited(spans) === edited;
}

export function renderDiff(container: HTMLElement, spans: DiffSpan[]): void {
  container.replaceChildren();
  for (const span of spans) {
    const node = container.ownerDocument.createElement("span");
    node.className = `diff-${span.kind}`;
    node.textContent = span.text;
    container.appendChild(node);
  }
}

/** Fallback when the diff request fails: plain text, no highlighting. */
export function renderPlain(container: HTMLElement, text: string): void {
  container.replaceChildren();
  const node = container.ownerDocument.createElement("span");
  node.className = "diff-plain";
  node.textContent = text;
  container.appendChild(node);
}
