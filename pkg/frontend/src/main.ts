// Browser entry point: wires the scenario controller to a minimal DOM shell.
// Serve the profiling service with CORS enabled, e.g.
//   groupprofiler serve --checkpoint model.ckpt --cors-origin http://localhost:8080
// then open index.html with ?api=http://127.0.0.1:8000

import { ApiClient, fetchTransport } from "./api";
import { renderErrorBanner, renderProfile } from "./render";
import { DEFAULT_SHIFT_THRESHOLD, ScenarioController } from "./state";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id} in the host page`);
  }
  return node as T;
}

async function boot(): Promise<void> {
  const baseUrl =
    new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8000";
  const api = new ApiClient(fetchTransport(baseUrl));
  const schema = await api.getSchema();

  const profileRoot = el<HTMLDivElement>("profile");
  const bannerRoot = el<HTMLDivElement>("banner");
  const facetSelect = el<HTMLSelectElement>("facet");
  const valueSelect = el<HTMLSelectElement>("value");
  const fixButton = el<HTMLButtonElement>("fix");
  const thresholdInput = el<HTMLInputElement>("threshold");

  const controller = new ScenarioController(api, schema, {
    onRender: () => {
      bannerRoot.innerHTML = "";
      if (controller.current) {
        profileRoot.innerHTML = renderProfile(
          controller.current,
          controller.shifts,
        );
        for (const chip of profileRoot.querySelectorAll<HTMLElement>(".chip")) {
          chip.addEventListener("click", () =>
            controller.unfixFacet(chip.dataset.facet ?? ""),
          );
        }
      }
    },
    onError: (message) => {
      bannerRoot.innerHTML = renderErrorBanner(message);
    },
  });

  facetSelect.innerHTML = schema.facets
    .map((f) => `<option value="${f.name}">${f.name}</option>`)
    .join("");
  const syncValues = () => {
    const facet = schema.facets.find((f) => f.name === facetSelect.value);
    valueSelect.innerHTML = (facet?.values ?? [])
      .map((v) => `<option value="${v}">${v}</option>`)
      .join("");
  };
  facetSelect.addEventListener("change", syncValues);
  syncValues();

  fixButton.addEventListener("click", () =>
    controller.fixFacet(facetSelect.value, valueSelect.value),
  );
  thresholdInput.value = String(DEFAULT_SHIFT_THRESHOLD);
  thresholdInput.addEventListener("change", () =>
    controller.setShiftThreshold(Number(thresholdInput.value)),
  );

  await controller.refresh(); // empty-query priors
}

boot().catch((err) => {
  document.body.insertAdjacentHTML(
    "afterbegin",
    renderErrorBanner(`failed to start: ${err}`),
  );
});
