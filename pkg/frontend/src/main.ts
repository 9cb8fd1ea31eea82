import { ApiClient } from "./api.js";
import { selectionsNearAverages, WhatIfStore } from "./store.js";
import { WhatIfView } from "./view.js";

async function boot(root: HTMLElement): Promise<void> {
  const api = new ApiClient("");
  let controls, model;
  try {
    [controls, model] = await Promise.all([api.getControls(), api.getModel()]);
  } catch (err) {
    const banner = document.createElement("div");
    banner.className = "offline";
    banner.setAttribute("role", "alert");
    banner.textContent = `Cannot load the model API (${String(err)}). Is 'scrambench serve-model' running?`;
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void boot(root));
    root.replaceChildren(banner, retry);
    return;
  }

  const store = new WhatIfStore(controls, model, (m) => api.postForecast(m), selectionsNearAverages(controls, model));
  new WhatIfView(root, store).mount();
  store.refresh();
}

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
void boot(root);
