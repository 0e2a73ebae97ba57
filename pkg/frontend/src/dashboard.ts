/** Reviewer dashboard: per-model aggregates and correlations, sortable by
 * column. Rendering is a pure projection of the service payload. */

import type { ModelSummary } from "./api.js";
import { RATING_KEYS } from "./ratings.js";

export const METRIC_KEYS = ["user", "rouge_l", "rouge_w"] as const;

export interface SortState {
  column: string; // "model" | "suggestions" | "published" | rating:* | score:* | corr:*
  descending: boolean;
}

export function columnValue(summary: ModelSummary, column: string): number | string | null {
  if (column === "model") return summary.model;
  if (column === "suggestions") return summary.suggestions;
  if (column === "published") return summary.published;
  const [group, key] = column.split(":", 2);
  if (group === "rating") return summary.mean_ratings[key] ?? null;
  if (group === "score") return summary.mean_scores[key] ?? null;
  if (group === "corr") return summary.correlations[key]?.r ?? null;
  return null;
}

/** Stable sort; null cells always sink to the bottom. */
export function sortModels(models: ModelSummary[], state: SortState): ModelSummary[] {
  const decorated = models.map((summary, index) => ({ summary, index }));
  decorated.sort((a, b) => {
    const va = columnValue(a.summary, state.column);
    const vb = columnValue(b.summary, state.column);
    if (va === null && vb === null) return a.index - b.index;
    if (va === null) return 1;
    if (vb === null) return -1;
    let order = 0;
    if (typeof va === "string" || typeof vb === "string") {
      order = String(va) < String(vb) ? -1 : String(va) > String(vb) ? 1 : 0;
    } else {
      order = va - vb;
    }
    if (state.descending) order = -order;
    return order !== 0 ? order : a.index - b.index;
  });
  return decorated.map((item) => item.summary);
}

function formatCell(value: number | string | null, digits = 3): string {
  if (value === null) return "–";
  if (typeof value === "string") return value;
  return Number.isInteger(value) ? String(value) : value.toFixed(digits);
}

export function dashboardColumns(): { id: string; label: string }[] {
  const columns = [
    { id: "model", label: "model" },
    { id: "suggestions", label: "suggestions" },
    { id: "published", label: "published" },
  ];
  for (const key of RATING_KEYS) columns.push({ id: `rating:${key}`, label: key });
  for (const key of METRIC_KEYS) columns.push({ id: `score:${key}`, label: key });
  for (const key of METRIC_KEYS) {
    columns.push({ id: `corr:${key}~relevance`, label: `${key}~relevance r` });
  }
  return columns;
}

export function renderDashboard(
  container: HTMLElement,
  models: ModelSummary[],
  state: SortState,
  onSort: (column: string) => void,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (models.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "dashboard-empty";
    empty.textContent = "No published records yet.";
    container.appendChild(empty);
    return;
  }
  const table = doc.createElement("table");
  table.className = "dashboard-table";
  const head = doc.createElement("tr");
  for (const column of dashboardColumns()) {
    const cell = doc.createElement("th");
    cell.textContent = column.label + (state.column === column.id ? (state.descending ? " ↓" : " ↑") : "");
    cell.dataset.column = column.id;
    cell.addEventListener("click", () => onSort(column.id));
    head.appendChild(cell);
  }
  table.appendChild(head);
  for (const summary of sortModels(models, state)) {
    const row = doc.createElement("tr");
    row.dataset.model = summary.model;
    for (const column of dashboardColumns()) {
      const cell = doc.createElement("td");
      cell.textContent = formatCell(columnValue(summary, column.id));
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  container.appendChild(table);
}
