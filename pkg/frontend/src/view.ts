import type { ControlInfo, WireLevel } from "./api.js";
import { buildCurve, markerFor, type CurveGeometry } from "./curve.js";
import { formatDecimal, formatSignedDecimal, formatUsd } from "./format.js";
import type { UiState, WhatIfStore } from "./store.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const RANKING_ROWS = 5;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

// ---------------------------------------------------------------------------
// maturity selectors
// ---------------------------------------------------------------------------

function buildSelector(store: WhatIfStore, control: ControlInfo): HTMLFieldSetElement {
  const { controls, model, selections } = store.state;
  const fieldset = el("fieldset", { class: "control", "data-control": control.id });
  const legend = el("legend");
  legend.append(
    el("span", { class: "control-id" }, control.id),
    el("span", { class: "control-label" }, ` ${control.label}`),
  );
  fieldset.append(legend);

  const average = model.group_averages[control.id];
  if (average !== undefined) {
    fieldset.append(el("p", { class: "cohort-avg" }, `cohort average ${Math.round(average * 100)}%`));
  }

  const group = el("div", { class: "levels", role: "radiogroup", "aria-label": `${control.id} maturity` });
  for (const level of controls.levels) {
    const input = el("input", {
      type: "radio",
      name: `level-${control.id}`,
      value: level,
      id: `level-${control.id}-${level}`,
    }) as HTMLInputElement;
    input.checked = selections[control.id] === level;
    input.addEventListener("change", () => {
      if (input.checked) {
        store.setLevel(control.id, level as WireLevel);
      }
    });
    const label = el("label", { for: input.id, class: "level" });
    label.append(input, el("span", {}, controls.level_display[level]));
    group.append(label);
  }
  fieldset.append(group);
  return fieldset;
}

// ---------------------------------------------------------------------------
// readouts, sweep, ranking
// ---------------------------------------------------------------------------

function buildReadouts(): HTMLElement {
  const panel = el("section", { class: "readouts", "aria-live": "polite" });
  const dl = el("dl");
  for (const [field, title] of [
    ["x", "Deviation x"],
    ["dgi", "Defense Gap Index"],
    ["annual", "Annual risk"],
    ["size", "Forecast incident size"],
  ] as const) {
    dl.append(el("dt", {}, title), el("dd", { "data-field": field }, "—"));
  }
  panel.append(dl);
  panel.append(el("p", { class: "baseline", "data-field": "baseline" }, ""));
  panel.append(el("p", { class: "extrapolated", "data-field": "extrapolated", hidden: "" }, "outside the fitted band — extrapolated"));
  return panel;
}

function buildSweep(geometry: CurveGeometry, band: number): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${geometry.width} ${geometry.height}`);
  svg.setAttribute("class", "sweep");
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", "annual risk across the deviation band, current position marked");

  const path = document.createElementNS(SVG_NS, "path");
  path.setAttribute("d", geometry.pathD);
  path.setAttribute("class", "sweep-curve");
  path.setAttribute("fill", "none");

  const zero = document.createElementNS(SVG_NS, "line");
  zero.setAttribute("x1", String(geometry.zeroX));
  zero.setAttribute("x2", String(geometry.zeroX));
  zero.setAttribute("y1", "0");
  zero.setAttribute("y2", String(geometry.height));
  zero.setAttribute("class", "sweep-zero");

  const marker = document.createElementNS(SVG_NS, "circle");
  marker.setAttribute("r", "5");
  marker.setAttribute("class", "sweep-marker");
  marker.setAttribute("data-field", "marker");
  marker.setAttribute("visibility", "hidden");

  for (const [x, anchor, text] of [
    [12, "start", formatSignedDecimal(-band, 2)],
    [geometry.zeroX, "middle", "0"],
    [geometry.width - 12, "end", formatSignedDecimal(band, 2)],
  ] as const) {
    const label = document.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x));
    label.setAttribute("y", String(geometry.height - 2));
    label.setAttribute("text-anchor", anchor);
    label.setAttribute("class", "sweep-axis");
    label.textContent = text;
    svg.append(label);
  }

  svg.append(path, zero, marker);
  return svg;
}

function buildRanking(): HTMLElement {
  const panel = el("section", { class: "ranking" });
  panel.append(el("h2", {}, "Best next improvements"));
  panel.append(el("ol", { "data-field": "ranking" }));
  return panel;
}

// ---------------------------------------------------------------------------
// the view proper
// ---------------------------------------------------------------------------

export class WhatIfView {
  private readonly geometry: CurveGeometry;

  constructor(private readonly root: HTMLElement, private readonly store: WhatIfStore) {
    this.geometry = buildCurve(store.state.model);
  }

  mount(): void {
    const { state } = this.store;
    this.root.replaceChildren();

    const banner = el("div", { class: "offline", role: "alert", "data-field": "offline", hidden: "" });
    banner.textContent = "Model API unreachable — shown figures are stale; edits retry automatically.";
    this.root.append(banner);

    const header = el("header");
    header.append(el("h1", {}, "What-if risk explorer"));
    header.append(
      el(
        "p",
        { class: "cohort-line" },
        `cohort '${state.model.cohort}' · ${state.model.n} participants · ${state.model.years}-year window`,
      ),
    );
    this.root.append(header);

    const main = el("div", { class: "columns" });
    const results = el("div", { class: "results" });
    results.append(buildReadouts());
    results.append(buildSweep(this.geometry, state.model.band));
    results.append(buildRanking());
    main.append(results);

    const form = el("form", { class: "selectors", "aria-label": "maturity levels" });
    form.addEventListener("submit", (event) => event.preventDefault());
    for (const control of state.controls.controls) {
      form.append(buildSelector(this.store, control));
    }
    main.append(form);
    this.root.append(main);

    this.store.subscribe(() => this.update());
    this.update();
  }

  private field(name: string): HTMLElement {
    const node = this.root.querySelector(`[data-field="${name}"]`);
    if (!(node instanceof Element)) {
      throw new Error(`view is missing field '${name}'`);
    }
    return node as HTMLElement;
  }

  private update(): void {
    const state: UiState = this.store.state;
    const banner = this.field("offline");
    banner.toggleAttribute("hidden", !state.offline);

    const readouts = this.root.querySelector(".readouts") as HTMLElement;
    readouts.setAttribute("aria-busy", state.pending ? "true" : "false");
    readouts.classList.toggle("stale", state.pending || state.forecast === null);

    const marker = this.field("marker");
    const { forecast } = state;
    if (forecast === null) {
      for (const name of ["x", "dgi", "annual", "size"]) {
        this.field(name).textContent = "—";
      }
      this.field("baseline").textContent = "";
      this.field("extrapolated").toggleAttribute("hidden", true);
      marker.setAttribute("visibility", "hidden");
      (this.field("ranking") as HTMLElement).replaceChildren();
      return;
    }

    this.field("x").textContent = formatSignedDecimal(forecast.x);
    this.field("dgi").textContent = formatDecimal(forecast.dgi);
    this.field("annual").textContent = formatUsd(forecast.annual_risk_usd);
    this.field("size").textContent = formatUsd(forecast.incident_size_usd);
    this.field("baseline").textContent = `cohort baseline ${formatUsd(forecast.baseline_annual_risk_usd)} / year`;
    this.field("extrapolated").toggleAttribute("hidden", !forecast.extrapolated);

    const point = markerFor(this.geometry, forecast);
    if (point === null) {
      marker.setAttribute("visibility", "hidden");
    } else {
      marker.setAttribute("cx", point.px.toFixed(1));
      marker.setAttribute("cy", point.py.toFixed(1));
      marker.setAttribute("visibility", "visible");
    }

    const list = this.field("ranking");
    list.replaceChildren();
    for (const entry of forecast.ranking.slice(0, RANKING_ROWS)) {
      const item = el("li", { "data-control": entry.control_id });
      item.append(
        el("span", { class: "rank-id" }, entry.control_id),
        el("span", { class: "rank-label" }, ` ${entry.label} `),
        el("span", { class: "rank-save" }, `save ${formatUsd(entry.annual_risk_reduction_usd)}/yr`),
      );
      list.append(item);
    }
  }
}
