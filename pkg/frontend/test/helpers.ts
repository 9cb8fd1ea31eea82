import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import type { ControlsDoc, ForecastResponse, ModelDoc, WireLevel } from "../src/api.js";

// resolved from the package root (vitest's cwd); import.meta.url is not a
// file URL under the happy-dom environment
function fixture<T>(name: string): T {
  const path = resolve(process.cwd(), "test", "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf8")) as T;
}

// Recorded verbatim from a live `scrambench serve-model` run whose params
// file had every group average sitting exactly on the 'partial' level, so
// the all-partial profile is the cohort-average profile.
export const CONTROLS = fixture<ControlsDoc>("controls");
export const MODEL = fixture<ModelDoc>("model");
export const FORECAST_ALL_PARTIAL = fixture<ForecastResponse>("forecast_all_partial");
export const FORECAST_5B_FULL = fixture<ForecastResponse>("forecast_5b_full");
export const FORECAST_1A_NOT = fixture<ForecastResponse>("forecast_1a_not");

export function allPartial(): Record<string, WireLevel> {
  return Object.fromEntries(CONTROLS.controls.map((c) => [c.id, "partial" as WireLevel]));
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (error: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (error: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Drain the microtask queue a few levels deep (awaited promise chains). */
export async function flush(): Promise<void> {
  for (let i = 0; i < 4; i++) {
    await Promise.resolve();
  }
}

/**
 * A scripted stand-in for ApiClient.postForecast: each call consumes the next
 * entry of the plan.  Entries are either a response to resolve immediately or
 * a Deferred to settle later from the test body.
 */
export function scriptedForecasts(plan: Array<ForecastResponse | Deferred<ForecastResponse>>) {
  const calls: Array<Record<string, WireLevel>> = [];
  const fn = (maturity: Record<string, WireLevel>): Promise<ForecastResponse> => {
    calls.push(maturity);
    const step = plan.shift();
    if (step === undefined) {
      throw new Error(`unplanned forecast call #${calls.length}`);
    }
    if ("promise" in step) {
      return step.promise;
    }
    return Promise.resolve(step);
  };
  return { fn, calls };
}
