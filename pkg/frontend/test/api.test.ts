import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiClient, ApiError } from "../src/api.js";
import { allPartial, FORECAST_ALL_PARTIAL } from "./helpers.js";

function stubFetch(handler: (url: string, init?: RequestInit) => Promise<Response>) {
  const spy = vi.fn(handler);
  vi.stubGlobal("fetch", spy);
  return spy;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("posts the maturity map as JSON to /api/forecast", async () => {
    const spy = stubFetch(async () => jsonResponse(FORECAST_ALL_PARTIAL));
    const client = new ApiClient("http://127.0.0.1:8377");
    const result = await client.postForecast(allPartial());
    expect(result).toEqual(FORECAST_ALL_PARTIAL);

    expect(spy).toHaveBeenCalledOnce();
    const [url, init] = spy.mock.calls[0];
    expect(url).toBe("http://127.0.0.1:8377/api/forecast");
    expect(init?.method).toBe("POST");
    const body = JSON.parse(init?.body as string);
    expect(Object.keys(body)).toEqual(["maturity"]);
    expect(Object.keys(body.maturity)).toHaveLength(22);
  });

  it("surfaces the server's validation message on a 400", async () => {
    stubFetch(async () =>
      jsonResponse({ error: "maturity map must cover exactly the 22 catalog controls" }, 400),
    );
    const client = new ApiClient("");
    await expect(client.postForecast({})).rejects.toThrowError(ApiError);
    await expect(client.postForecast({})).rejects.toThrow(/exactly the 22 catalog controls/);
  });

  it("wraps network failures in ApiError", async () => {
    stubFetch(async () => {
      throw new TypeError("fetch failed");
    });
    const client = new ApiClient("");
    await expect(client.getModel()).rejects.toThrowError(ApiError);
    await expect(client.getControls()).rejects.toThrow(/cannot reach/);
  });

  it("rejects non-OK responses on the GET endpoints with the status", async () => {
    stubFetch(async () => new Response("gone", { status: 404 }));
    const client = new ApiClient("");
    await expect(client.getModel()).rejects.toThrow(/404/);
  });
});
