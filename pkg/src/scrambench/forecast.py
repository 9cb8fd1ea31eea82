"""Annual risk and incident-size forecasts from fitted model parameters.

The forecast is a two-factor expectation:

    incident_size(x) = avg_loss * DGI(x)
    annual_risk(x)   = frequency * incident_size(x)

where x is the municipality's net weighted deviation from its cohort and
DGI(x) = exp(-k * x).  The x = 0 value doubles as the cohort's pool-average
annual expectation, which is the floor any risk pool must charge on average;
individual fair prices scale it by DGI.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .controls import CONTROL_BY_ID, CONTROL_IDS, CONTROL_ORDER, MaturityLevel
from .gap_model import ControlWeights, LossCurve, ModelParams, net_weighted_deviation


class ExtrapolationWarning(UserWarning):
    """Forecast requested outside the band the curve was anchored on."""


@dataclass(frozen=True)
class RiskForecast:
    """Point forecast at one deviation value.  Currency fields are floats;
    serialization rounds them to whole dollars."""

    x: float
    dgi: float
    incident_size_usd: float
    annual_risk_usd: float
    baseline_annual_risk_usd: float  # pool-average premium floor (x = 0)
    extrapolated: bool


def forecast(params: ModelParams, x: float) -> RiskForecast:
    """Forecast at deviation ``x``; warns when |x| exceeds the anchor band."""
    extrapolated = abs(x) > params.band
    if extrapolated:
        warnings.warn(
            f"deviation {x:+.4f} lies outside the anchored band ±{params.band:.2f}; "
            "the curve is extrapolating",
            ExtrapolationWarning,
            stacklevel=2,
        )
    dgi = math.exp(-params.k * x)
    incident_size = params.avg_loss_usd * dgi
    return RiskForecast(
        x=x,
        dgi=dgi,
        incident_size_usd=incident_size,
        annual_risk_usd=params.frequency * incident_size,
        baseline_annual_risk_usd=params.frequency * params.avg_loss_usd,
        extrapolated=extrapolated,
    )


def forecast_from_maturity(params: ModelParams, own_maturity: Mapping[str, MaturityLevel]) -> RiskForecast:
    """Forecast for a concrete questionnaire position."""
    weights = ControlWeights(weights=params.weights, w_loss=params.w_loss, loss_group=params.loss_group)
    x = net_weighted_deviation(own_maturity, params.group_averages, weights)
    return forecast(params, x)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSeries:
    """Forecasts on an evenly spaced deviation grid over [-band, +band]."""

    x: Tuple[float, ...]
    dgi: Tuple[float, ...]
    annual_risk_usd: Tuple[float, ...]
    incident_size_usd: Tuple[float, ...]


def sweep(params: ModelParams, steps: int = 61, band: Optional[float] = None) -> SweepSeries:
    if steps < 2:
        raise ValueError("a sweep needs at least 2 steps")
    span = params.band if band is None else float(band)
    if span <= 0:
        raise ValueError("band must be positive")
    xs = [-span + i * (2 * span / (steps - 1)) for i in range(steps)]
    points = [forecast(params, x) for x in xs]
    return SweepSeries(
        x=tuple(p.x for p in points),
        dgi=tuple(p.dgi for p in points),
        annual_risk_usd=tuple(p.annual_risk_usd for p in points),
        incident_size_usd=tuple(p.incident_size_usd for p in points),
    )


def sweep_to_csv(series: SweepSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "dgi", "annual_risk_usd", "incident_size_usd"])
    for x, dgi, annual, size in zip(series.x, series.dgi, series.annual_risk_usd, series.incident_size_usd):
        writer.writerow([f"{x:.6f}", f"{dgi:.6f}", round(annual), round(size)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Marginal control ranking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RankedImprovement:
    """Annual-risk reduction from raising one control a single level."""

    control_id: str
    label: str
    current_level: MaturityLevel
    annual_risk_reduction_usd: float


def marginal_control_ranking(
    params: ModelParams,
    own_maturity: Mapping[str, MaturityLevel],
) -> List[RankedImprovement]:
    """Rank controls by the risk saved from one maturity step up.

    Raising control c by one level moves x up by weight_c / 3, so the saving
    is annual(x) - annual(x + weight_c / 3) > 0.  Fully implemented controls
    cannot improve and are excluded.  Ties break by catalog order.
    """
    weights = ControlWeights(weights=params.weights, w_loss=params.w_loss, loss_group=params.loss_group)
    x0 = net_weighted_deviation(own_maturity, params.group_averages, weights)
    base_annual = params.frequency * params.avg_loss_usd * math.exp(-params.k * x0)

    improvements: List[RankedImprovement] = []
    for cid in CONTROL_IDS:
        level = own_maturity[cid]
        if level == MaturityLevel.FULLY_IMPLEMENTED:
            continue
        x1 = x0 + params.weights[cid] / 3.0
        improved_annual = params.frequency * params.avg_loss_usd * math.exp(-params.k * x1)
        improvements.append(RankedImprovement(
            control_id=cid,
            label=CONTROL_BY_ID[cid].label,
            current_level=level,
            annual_risk_reduction_usd=base_annual - improved_annual,
        ))
    improvements.sort(key=lambda r: (-r.annual_risk_reduction_usd, CONTROL_ORDER[r.control_id]))
    return improvements


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def forecast_to_dict(point: RiskForecast) -> dict:
    return {
        "x": round(point.x, 6),
        "dgi": round(point.dgi, 6),
        "incident_size_usd": round(point.incident_size_usd),
        "annual_risk_usd": round(point.annual_risk_usd),
        "baseline_annual_risk_usd": round(point.baseline_annual_risk_usd),
        "extrapolated": point.extrapolated,
    }


def ranking_to_dicts(ranking: Sequence[RankedImprovement]) -> List[dict]:
    return [
        {
            "control_id": r.control_id,
            "label": r.label,
            "current_level": r.current_level.wire,
            "annual_risk_reduction_usd": round(r.annual_risk_reduction_usd),
        }
        for r in ranking
    ]
