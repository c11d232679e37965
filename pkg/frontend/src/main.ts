/** Wires the builder, search requests, and results panes together. */

import { ApiClient } from "./api.js";
import { BuilderView } from "./builder.js";
import { ResultsView } from "./results.js";
import { BuilderState, buildQueryJson, emptyState } from "./query.js";

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const builderRoot = document.getElementById("builder")!;
  const gridRoot = document.getElementById("results")!;
  const viewerRoot = document.getElementById("viewer")!;
  const results = new ResultsView(gridRoot, viewerRoot, api);

  let inflight: AbortController | null = null;

  const submit = async (state: BuilderState) => {
    inflight?.abort(); // cancel a superseded search
    inflight = new AbortController();
    try {
      const response = await api.search(buildQueryJson(state), inflight.signal);
      results.show(response);
    } catch (err) {
      if ((err as Error).name !== "AbortError") {
        results.showError(String(err));
      }
    }
  };

  try {
    const patterns = await api.patterns();
    const builder = new BuilderView(builderRoot, api, patterns, emptyState(), {
      onChange: () => {},
      onSubmit: (state) => void submit(state),
    });
    await builder.render();
  } catch (err) {
    builderRoot.textContent = `search service unavailable: ${String(err)}`;
    builderRoot.className = "error";
  }
}

void boot();
