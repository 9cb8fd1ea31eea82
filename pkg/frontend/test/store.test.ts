import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import type { ForecastResponse } from "../src/api.js";
import { DEBOUNCE_MS, selectionsNearAverages, WhatIfStore } from "../src/store.js";
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

function makeStore(plan: Parameters<typeof scriptedForecasts>[0]) {
  const script = scriptedForecasts(plan);
  const store = new WhatIfStore(CONTROLS, MODEL, script.fn, allPartial());
  return { store, ...script };
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("debounce", () => {
  it("waits the full window after the last edit before requesting", async () => {
    const { store, calls } = makeStore([FORECAST_ALL_PARTIAL]);
    store.setLevel("1a", "full");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS - 1);
    expect(calls).toHaveLength(0);
    await vi.advanceTimersByTimeAsync(1);
    expect(calls).toHaveLength(1);
  });

  it("coalesces rapid edits into a single request", async () => {
    const { store, calls } = makeStore([FORECAST_ALL_PARTIAL]);
    store.setLevel("1a", "full");
    await vi.advanceTimersByTimeAsync(100);
    store.setLevel("2a", "not");
    store.setLevel("2b", "large");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(calls).toHaveLength(1);
    expect(calls[0]["1a"]).toBe("full");
    expect(calls[0]["2a"]).toBe("not");
    expect(calls[0]["2b"]).toBe("large");
  });

  it("an edit inside the window restarts it", async () => {
    const { store, calls } = makeStore([FORECAST_ALL_PARTIAL]);
    store.setLevel("1a", "full");
    await vi.advanceTimersByTimeAsync(100);
    store.setLevel("1a", "large");
    await vi.advanceTimersByTimeAsync(100);
    expect(calls).toHaveLength(0); // 200ms elapsed but only 100 since last edit
    await vi.advanceTimersByTimeAsync(50);
    expect(calls).toHaveLength(1);
  });

  it("re-selecting the current level does not schedule a request", async () => {
    const { store, calls } = makeStore([]);
    store.setLevel("1a", "partial");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS * 4);
    expect(calls).toHaveLength(0);
    expect(store.state.pending).toBe(false);
  });

  it("refresh skips the debounce", async () => {
    const { store, calls } = makeStore([FORECAST_ALL_PARTIAL]);
    store.refresh();
    expect(calls).toHaveLength(1);
    await flush();
    expect(store.state.forecast).toEqual(FORECAST_ALL_PARTIAL);
  });
});

describe("stale responses", () => {
  it("two rapid edits: the superseded response is never shown", async () => {
    const first = deferred<ForecastResponse>();
    const { store, calls } = makeStore([first, FORECAST_5B_FULL]);
    const shown: number[] = [];
    store.subscribe((state) => {
      if (state.forecast !== null) {
        shown.push(state.forecast.annual_risk_usd);
      }
    });

    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(calls).toHaveLength(1); // in flight, unresolved

    store.setLevel("5b", "full");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(calls).toHaveLength(2);
    await flush();
    expect(store.state.forecast).toEqual(FORECAST_5B_FULL);

    first.resolve(FORECAST_1A_NOT); // the superseded request finally lands
    await flush();
    expect(store.state.forecast).toEqual(FORECAST_5B_FULL);
    expect(shown).not.toContain(FORECAST_1A_NOT.annual_risk_usd);
  });

  it("out-of-order completion keeps pending until the current response lands", async () => {
    const first = deferred<ForecastResponse>();
    const second = deferred<ForecastResponse>();
    const { store } = makeStore([first, second]);

    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    store.setLevel("5b", "full");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);

    first.resolve(FORECAST_1A_NOT);
    await flush();
    expect(store.state.forecast).toBeNull(); // stale response dropped, still waiting
    expect(store.state.pending).toBe(true);

    second.resolve(FORECAST_5B_FULL);
    await flush();
    expect(store.state.forecast).toEqual(FORECAST_5B_FULL);
    expect(store.state.pending).toBe(false);
  });

  it("a failure of a superseded request does not raise the offline banner", async () => {
    const first = deferred<ForecastResponse>();
    const { store } = makeStore([first, FORECAST_5B_FULL]);

    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    store.setLevel("5b", "full");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    expect(store.state.forecast).toEqual(FORECAST_5B_FULL);

    first.reject(new Error("socket reset"));
    await flush();
    expect(store.state.offline).toBe(false);
    expect(store.state.forecast).toEqual(FORECAST_5B_FULL);
  });
});

describe("offline handling", () => {
  it("marks offline on failure and clears the forecast", async () => {
    const boom = deferred<ForecastResponse>();
    const { store } = makeStore([boom]);
    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    boom.reject(new Error("connection refused"));
    await flush();
    expect(store.state.offline).toBe(true);
    expect(store.state.pending).toBe(false);
    expect(store.state.forecast).toBeNull();
  });

  it("recovers on the next successful request", async () => {
    const boom = deferred<ForecastResponse>();
    const { store } = makeStore([boom, FORECAST_1A_NOT]);
    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    boom.reject(new Error("connection refused"));
    await flush();
    expect(store.state.offline).toBe(true);

    store.setLevel("1a", "not"); // no-op level, no request
    store.setLevel("1a", "partial");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    await flush();
    expect(store.state.offline).toBe(false);
    expect(store.state.forecast).toEqual(FORECAST_1A_NOT);
  });
});

describe("selections", () => {
  it("rejects edits to unknown controls", () => {
    const { store } = makeStore([]);
    expect(() => store.setLevel("99z", "full")).toThrow(/unknown control/);
  });

  it("snapshots selections per request instead of sharing the live map", async () => {
    const first = deferred<ForecastResponse>();
    const { store, calls } = makeStore([first, FORECAST_5B_FULL]);
    store.setLevel("1a", "not");
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    store.setLevel("5b", "full");
    expect(calls[0]["5b"]).toBe("partial"); // first request unaffected by later edit
    await vi.advanceTimersByTimeAsync(DEBOUNCE_MS);
    expect(calls[1]["5b"]).toBe("full");
  });

  it("derives the near-average opening position from the model document", () => {
    const selections = selectionsNearAverages(CONTROLS, MODEL);
    expect(Object.keys(selections)).toHaveLength(22);
    // every recorded group average sits on the 'partial' score exactly
    for (const level of Object.values(selections)) {
      expect(level).toBe("partial");
    }
  });
});
