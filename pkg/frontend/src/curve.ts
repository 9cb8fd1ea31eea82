import type { ForecastResponse, ModelDoc } from "./api.js";

// The reference curve is drawn from the server-published model document
// (frequency, average loss, k, band).  It is presentation geometry only:
// every numeral shown next to it — axis bounds, baseline, the marker's
// figures — is a value the API returned, never one computed here.

export interface CurveGeometry {
  width: number;
  height: number;
  pathD: string;
  baselineY: number;
  zeroX: number;
  toPoint(x: number, annualRiskUsd: number): { px: number; py: number } | null;
}

const WIDTH = 640;
const HEIGHT = 220;
const PAD = 14;
const SAMPLES = 120;

export function buildCurve(model: ModelDoc): CurveGeometry {
  const { band, frequency, avg_loss_usd: avgLoss, k } = model;
  const riskAt = (x: number) => frequency * avgLoss * Math.exp(-k * x);
  const top = Math.max(riskAt(-band), riskAt(band));

  const toPx = (x: number) => PAD + ((x + band) / (2 * band)) * (WIDTH - 2 * PAD);
  const toPy = (risk: number) => HEIGHT - PAD - (risk / top) * (HEIGHT - 2 * PAD);

  const parts: string[] = [];
  for (let i = 0; i <= SAMPLES; i++) {
    const x = -band + (2 * band * i) / SAMPLES;
    const cmd = i === 0 ? "M" : "L";
    parts.push(`${cmd}${toPx(x).toFixed(1)},${toPy(riskAt(x)).toFixed(1)}`);
  }

  return {
    width: WIDTH,
    height: HEIGHT,
    pathD: parts.join(" "),
    baselineY: toPy(riskAt(0)),
    zeroX: toPx(0),
    toPoint(x: number, annualRiskUsd: number) {
      if (!Number.isFinite(x) || !Number.isFinite(annualRiskUsd)) {
        return null;
      }
      const clamped = Math.min(band, Math.max(-band, x));
      return { px: toPx(clamped), py: toPy(Math.min(top, Math.max(0, annualRiskUsd))) };
    },
  };
}

export function markerFor(geometry: CurveGeometry, forecast: ForecastResponse) {
  return geometry.toPoint(forecast.x, forecast.annual_risk_usd);
}
