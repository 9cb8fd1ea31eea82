import type { ControlsDoc, ForecastResponse, ModelDoc, WireLevel } from "./api.js";

// How long after the last edit we wait before asking the server.  Short
// enough to feel immediate, long enough that arrowing through a radio group
// coalesces into a single request.
export const DEBOUNCE_MS = 150;

export interface UiState {
  controls: ControlsDoc;
  model: ModelDoc;
  selections: Record<string, WireLevel>;
  /** Forecast for the current selections, or null while none applies. */
  forecast: ForecastResponse | null;
  /** True from the moment an edit is made until its forecast is displayed. */
  pending: boolean;
  /** True after a request failed; cleared by the next successful one. */
  offline: boolean;
}

export type Listener = (state: UiState) => void;

type ForecastFn = (maturity: Record<string, WireLevel>) => Promise<ForecastResponse>;

/**
 * Holds the explorer state and keeps the displayed forecast in sync with the
 * displayed selections.
 *
 * Every edit bumps a generation counter; a forecast request carries the
 * generation it was issued for and its response is dropped unless that is
 * still the current generation when it lands.  Combined with the debounce
 * this guarantees the panel never shows numbers for a selection the user has
 * already moved past, no matter how request completions interleave.
 */
export class WhatIfStore {
  readonly state: UiState;

  private generation = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private listeners: Listener[] = [];

  constructor(
    controls: ControlsDoc,
    model: ModelDoc,
    private readonly forecastFn: ForecastFn,
    initialSelections?: Record<string, WireLevel>,
  ) {
    const selections =
      initialSelections ?? Object.fromEntries(controls.controls.map((c) => [c.id, "partial" as WireLevel]));
    this.state = {
      controls,
      model,
      selections: { ...selections },
      forecast: null,
      pending: false,
      offline: false,
    };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  setLevel(controlId: string, level: WireLevel): void {
    if (this.state.selections[controlId] === undefined) {
      throw new Error(`unknown control '${controlId}'`);
    }
    if (this.state.selections[controlId] === level) {
      return;
    }
    this.state.selections[controlId] = level;
    this.generation += 1;
    this.state.pending = true;
    this.schedule();
    this.emit();
  }

  /** Request a forecast for the current selections without waiting out the debounce. */
  refresh(): void {
    this.generation += 1;
    this.state.pending = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    void this.issue();
    this.emit();
  }

  private schedule(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.issue();
    }, DEBOUNCE_MS);
  }

  private async issue(): Promise<void> {
    const issuedFor = this.generation;
    let response: ForecastResponse;
    try {
      response = await this.forecastFn({ ...this.state.selections });
    } catch {
      if (issuedFor !== this.generation) {
        return; // superseded; the newer request will report instead
      }
      this.state.offline = true;
      this.state.pending = false;
      this.state.forecast = null;
      this.emit();
      return;
    }
    if (issuedFor !== this.generation) {
      return; // selections changed while in flight: discard silently
    }
    this.state.forecast = response;
    this.state.pending = false;
    this.state.offline = false;
    this.emit();
  }

  private emit(): void {
    for (const listener of [...this.listeners]) {
      listener(this.state);
    }
  }
}

/**
 * Initial selection: the level closest to the cohort average for each
 * control, so the explorer opens near the benchmark position instead of at
 * an arbitrary corner.  Averages are scores in [0, 1]; levels sit at
 * 0, 1/3, 2/3, 1.
 */
export function selectionsNearAverages(controls: ControlsDoc, model: ModelDoc): Record<string, WireLevel> {
  const selections: Record<string, WireLevel> = {};
  for (const control of controls.controls) {
    const average = model.group_averages[control.id] ?? 0.5;
    const step = Math.min(3, Math.max(0, Math.round(average * 3)));
    selections[control.id] = controls.levels[step];
  }
  return selections;
}
