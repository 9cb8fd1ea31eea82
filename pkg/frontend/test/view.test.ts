// @vitest-environment happy-dom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import type { ForecastResponse } from "../src/api.js";
import { DEBOUNCE_MS, WhatIfStore } from "../src/store.js";
import { WhatIfView } from "../src/view.js";
import {
  allPartial,
  CONTROLS,
  deferred,
  flush,
  FORECAST_1A_NOT,
  FORECAST_5B_FULL,
  FORECAST_ALL_PARTIAL,
  MODEL,
  scriptedForecasts,
} from "./helpers.js";

function mountWithPlan(plan: Parameters<typeof scriptedForecasts>[0]) {
  const script = scriptedForecasts(plan);
  const store = new WhatIfStore(CONTROLS, MODEL, script.fn, allPartial());
  const root = document.createElement("div");
  document.body.append(root);
  new WhatIfView(root, store).mount();
  return { root, store, ...script };
}

function text(root: HTMLElement, field: string): string {
  const node = root.querySelector(`[data-field="${field}"]`);
  expect(node, `field '${field}'`).not.toBeNull();
  return (node as HTMLElement).textContent ?? "";
}

function pickLevel(root: HTMLElement, controlId: string, level: string): void {
  const input = root.querySelector(`#level-${controlId}-${level}`) as HTMLInputElement | null;
  expect(input, `radio ${controlId}/${level}`).not.toBeNull();
  input!.checked = true;
  input!.dispatchEvent(new Event("change", { bubbles: true }));
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
  document.body.replaceChildren();
});

describe("initial render", () => {
  it("shows the cohort-average annual risk for the all-average selection", async () => {
    const { root, store } = mountWithPlan([FORECAST_ALL_PARTIAL]);
    store.refresh();
    await flush();
    expect(text(root, "annual")).toBe("$2,523");
    expect(text(root, "annual")).toContain("2,523");
    expect(text(root, "size")).toBe("$157,052");
    expect(text(root, "x")).toBe("0.000");
    expect(text(root, "dgi")).toBe("1.000");
    expect(text(root, "baseline")).toContain("$2,523");
  });

  it("renders the ranking panel in exactly the API's order", async () => {
    const { root, store } = mountWithPlan([FORECAST_ALL_PARTIAL]);
    store.refresh();
    await flush();
    const rendered = [...root.querySelectorAll('[data-field="ranking"] li')].map(
      (li) => li.getAttribute("data-control"),
    );
    const expected = FORECAST_ALL_PARTIAL.ranking.slice(0, 5).map((r) => r.control_id);
    expect(rendered).toEqual(expected);
    const first = root.querySelector('[data-field="ranking"] li') as HTMLElement;
    expect(first.textContent).toContain(FORECAST_ALL_PARTIAL.ranking[0].label);
    expect(first.textContent).toContain("save $");
  });

  it("draws the sweep with a visible marker once a forecast lands", async () => {
    const { root, store } = mountWithPlan([FORECAST_ALL_PARTIAL]);
    const marker = root.querySelector('[data-field="marker"]') as SVGElement;
    expect(marker.getAttribute("visibility")).toBe("hidden");
    store.refresh();
    await flush();
    expect(marker.getAttribute("visibility")).toBe("visible");
    expect(root.querySelector(".sweep-curve")?.getAttribute("d")).toMatch(/^M/);
  });
});

describe("selector accessibility", () => {
  it("offers all 22 controls as four-way radio groups reachable by keyboard", () => {
    const { root } = mountWithPlan([]);
    const fieldsets = [...root.querySelectorAll("fieldset.control")];
    expect(fieldsets).toHaveLength(22);
    const names = new Set<string>();
    for (const fieldset of fieldsets) {
      const radios = [...fieldset.querySelectorAll('input[type="radio"]')] as HTMLInputElement[];
      expect(radios).toHaveLength(4);
      expect(new Set(radios.map((r) => r.name)).size).toBe(1);
      names.add(radios[0].name);
      for (const radio of radios) {
        expect(radio.disabled).toBe(false);
        // radios are natively focusable; just make sure nothing opts out
        expect(radio.getAttribute("tabindex")).not.toBe("-1");
        const label = fieldset.querySelector(`label[for="${radio.id}"]`);
        expect(label, `label for ${radio.id}`).not.toBeNull();
      }
      expect(radios.map((r) => r.value)).toEqual(["not", "partial", "large", "full"]);
    }
    expect(names.size).toBe(22); // distinct group per control
  });

  it("labels each level with its display name from the catalog", () => {
    const { root } = mountWithPlan([]);
    const label = root.querySelector('label[for="level-1a-partial"]') as HTMLElement;
    expect(label.textContent).toContain("Partially implemented");
  });
});

describe("editing", () => {
  it("a level change issues one debounced request and updates the readouts", async () => {
    const { root, store, calls } = mountWithPlan([FORECAST_ALL_PARTIAL, FORECAST_5B_FULL]);
    store.refresh();
    await flush();
    expect(text(root, "annual")).toBe("$2,523");

    pickLevel(root, "5b", "full");
    expect(calls).toHaveLength(1); // debounce still open
    const readouts = root.querySelector(".readouts") as HTMLElement;
    expect(readouts.getAttribute("aria-busy")).toBe("true");

    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    expect(calls).toHaveLength(2);
    expect(calls[1]["5b"]).toBe("full");
    expect(text(root, "annual")).toBe("$1,362");
    expect(readouts.getAttribute("aria-busy")).toBe("false");
  });

  it("lowering a control below average moves the marker left and raises risk", async () => {
    const { root, store } = mountWithPlan([FORECAST_ALL_PARTIAL, FORECAST_1A_NOT]);
    store.refresh();
    await flush();
    const marker = root.querySelector('[data-field="marker"]') as SVGElement;
    const cxBefore = Number(marker.getAttribute("cx"));
    const annualBefore = Number(text(root, "annual").replace(/[$,]/g, ""));

    pickLevel(root, "1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    const cxAfter = Number(marker.getAttribute("cx"));
    const annualAfter = Number(text(root, "annual").replace(/[$,]/g, ""));
    expect(cxAfter).toBeLessThan(cxBefore);
    expect(annualAfter).toBeGreaterThan(annualBefore);
  });

  it("never shows a forecast for a superseded selection", async () => {
    const slow = deferred<ForecastResponse>();
    const { root, store, calls } = mountWithPlan([FORECAST_ALL_PARTIAL, slow, FORECAST_5B_FULL]);
    store.refresh();
    await flush();

    const seen: string[] = [];
    store.subscribe(() => seen.push(text(root, "annual")));

    pickLevel(root, "1a", "not"); // edit 1: response will arrive late
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    pickLevel(root, "5b", "full"); // edit 2 supersedes it
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    expect(calls).toHaveLength(3);
    expect(text(root, "annual")).toBe("$1,362");

    slow.resolve(FORECAST_1A_NOT); // $2,592 — must be discarded
    await flush();
    expect(text(root, "annual")).toBe("$1,362");
    expect(seen).not.toContain("$2,592");
  });
});

describe("offline", () => {
  it("shows the banner on connection loss and keeps the controls editable", async () => {
    const boom = deferred<ForecastResponse>();
    const { root, store, calls } = mountWithPlan([boom, FORECAST_5B_FULL]);
    const banner = root.querySelector('[data-field="offline"]') as HTMLElement;
    expect(banner.hasAttribute("hidden")).toBe(true);

    store.refresh();
    boom.reject(new Error("connection refused"));
    await flush();
    expect(banner.hasAttribute("hidden")).toBe(false);
    expect(text(root, "annual")).toBe("—");

    // still editable: a fresh selection goes out and recovers the view
    pickLevel(root, "5b", "full");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    expect(calls).toHaveLength(2);
    expect(banner.hasAttribute("hidden")).toBe(true);
    expect(text(root, "annual")).toBe("$1,362");
  });
});
