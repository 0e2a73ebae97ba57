/** Page bootstrap: wires the workbench and a polling dashboard to the
 * service named by ?service=<base-url> (same origin by default). */

import { ApiClient } from "./api.js";
import { renderDashboard, SortState } from "./dashboard.js";
import { Workbench } from "./workbench.js";

const DASHBOARD_POLL_MS = 5000;

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("service") ?? "");

  const workbenchRoot = document.getElementById("workbench");
  const dashboardRoot = document.getElementById("dashboard");
  const requestForm = document.getElementById("request-form") as HTMLFormElement | null;
  if (!workbenchRoot || !dashboardRoot || !requestForm) {
    throw new Error("workbench page skeleton is missing");
  }

  const workbench = new Workbench(api, workbenchRoot, {
    debounceMs: Number(params.get("debounce") ?? 400),
  });

  requestForm.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(requestForm);
    void workbench.requestSuggestion(
      {
        story_id: String(data.get("story_id") ?? ""),
        scene_index: Number(data.get("scene_index") ?? 0),
        entry_index: Number(data.get("entry_index") ?? 0),
      },
      String(data.get("model") ?? "mock"),
    );
  });

  const sort: SortState = { column: "model", descending: false };
  const refreshDashboard = async () => {
    try {
      const models = await api.dashboard();
      renderDashboard(dashboardRoot, models, sort, (column) => {
        if (sort.column === column) {
          sort.descending = !sort.descending;
        } else {
          sort.column = column;
          sort.descending = false;
        }
        void refreshDashboard();
      });
    } catch {
      // leave the previous table when a poll fails
    }
  };
  void refreshDashboard();
  window.setInterval(() => void refreshDashboard(), DASHBOARD_POLL_MS);
}

bootstrap();
