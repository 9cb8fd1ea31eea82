// Typed client for the local model API.  Every number the UI displays comes
// out of one of these responses; the UI itself never evaluates the risk model.

export type WireLevel = "not" | "partial" | "large" | "full";

export const WIRE_LEVELS: readonly WireLevel[] = ["not", "partial", "large", "full"];

export interface ControlInfo {
  id: string;
  label: string;
  category: string;
  category_index: number;
}

export interface ControlsDoc {
  controls: ControlInfo[];
  levels: WireLevel[];
  level_display: Record<WireLevel, string>;
}

export interface ModelDoc {
  schema: string;
  computation_id: string;
  cohort: string;
  n: number;
  years: number;
  frequency: number;
  avg_loss_usd: number;
  k: number;
  band: number;
  headroom: number;
  w_loss: number;
  weights: Record<string, number>;
  group_averages: Record<string, number>;
  loss_group: string[];
  provenance: unknown;
}

export interface RankingEntry {
  control_id: string;
  label: string;
  current_level: WireLevel;
  annual_risk_reduction_usd: number;
}

export interface ForecastResponse {
  x: number;
  dgi: number;
  annual_risk_usd: number;
  incident_size_usd: number;
  baseline_annual_risk_usd: number;
  extrapolated: boolean;
  ranking: RankingEntry[];
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
    this.name = "ApiError";
  }
}

async function getJson<T>(base: string, path: string): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path);
  } catch (err) {
    throw new ApiError(`cannot reach ${path}: ${String(err)}`);
  }
  if (!resp.ok) {
    throw new ApiError(`${path} returned ${resp.status}`, resp.status);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  getControls(): Promise<ControlsDoc> {
    return getJson<ControlsDoc>(this.base, "/api/controls");
  }

  getModel(): Promise<ModelDoc> {
    return getJson<ModelDoc>(this.base, "/api/model");
  }

  async postForecast(maturity: Record<string, WireLevel>): Promise<ForecastResponse> {
    let resp: Response;
    try {
      resp = await fetch(this.base + "/api/forecast", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ maturity }),
      });
    } catch (err) {
      throw new ApiError(`cannot reach /api/forecast: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = "";
      try {
        const body = (await resp.json()) as { error?: string };
        detail = body.error ? `: ${body.error}` : "";
      } catch {
        // non-JSON error body; the status alone will have to do
      }
      throw new ApiError(`/api/forecast returned ${resp.status}${detail}`, resp.status);
    }
    return (await resp.json()) as ForecastResponse;
  }
}
