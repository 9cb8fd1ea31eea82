"""Loss-weighted defense gap model.

The model turns a cohort benchmark into a forecasting instrument in three
steps:

1. **Control weights.**  A fixed fraction ``w_loss`` (default 0.85) of the
   total weight goes to controls that actually attracted losses, prorated by
   their attributed dollar amounts; the remaining weight is spread evenly over
   the loss-free controls.  Weights sum to 1.
2. **Net weighted deviation.**  A municipality's position relative to its
   cohort is x = sum over controls of (own_score - group_average) * weight,
   a signed number in [-1, 1].  Positive x means better defended than average.
3. **Loss curve.**  Observed incident sizes, expressed as multiples of the
   average loss, are regressed against deviation positions with the curve
   y = exp(-k * x), pinned to (0, 1) because the average-positioned
   municipality suffers by definition the average loss.  The fit is linear
   least squares in log space; with the intercept pinned the minimizer has
   the closed form k = -sum(x_i * ln y_i) / sum(x_i^2).

The resulting defense gap index DGI(x) = exp(-k * x) multiplies the cohort's
average annual loss expectation into a municipality-specific forecast.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .benchmark import BenchmarkReport
from .controls import CONTROL_IDS, CONTROL_ORDER, MaturityLevel
from .secure_agg import LOSS_BUCKETS

DEFAULT_W_LOSS = 0.85
DEFAULT_BAND = 0.30
DEFAULT_HEADROOM = 1.5


class NoLossData(ValueError):
    """The benchmark records no losses, so no curve can be anchored."""


class NoInformativeAnchor(ValueError):
    """Every anchor sits at x = 0; the slope is unidentifiable."""


class DegenerateWeightsWarning(UserWarning):
    """A loss-free control outweighs a loss-bearing one."""


# ---------------------------------------------------------------------------
# Step 1: control weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlWeights:
    """Per-control weights summing to 1, plus the loss-group bookkeeping."""

    weights: Mapping[str, float]
    w_loss: float
    loss_group: Tuple[str, ...]

    @property
    def no_loss_group(self) -> Tuple[str, ...]:
        return tuple(cid for cid in CONTROL_IDS if cid not in set(self.loss_group))


def prorate_weights(attributed_loss_usd: Mapping[str, int], w_loss: float = DEFAULT_W_LOSS) -> ControlWeights:
    """Split weight ``w_loss`` over loss-bearing controls, the rest evenly.

    Degenerate shapes fall back gracefully: with no losses at all, every
    control gets 1/22; with every control loss-bearing, the whole weight is
    prorated.  If any loss-bearing control ends up lighter than a loss-free
    one the ordering premise is broken and a warning is issued.
    """
    if not 0 < w_loss <= 1:
        raise ValueError("w_loss must be in (0, 1]")
    losses = {cid: int(attributed_loss_usd.get(cid, 0)) for cid in CONTROL_IDS}
    if any(v < 0 for v in losses.values()):
        raise ValueError("attributed losses must be non-negative")
    loss_group = tuple(cid for cid in CONTROL_IDS if losses[cid] > 0)
    total_loss = sum(losses.values())

    weights: Dict[str, float] = {}
    if not loss_group:
        uniform = 1.0 / len(CONTROL_IDS)
        weights = {cid: uniform for cid in CONTROL_IDS}
    elif len(loss_group) == len(CONTROL_IDS):
        weights = {cid: losses[cid] / total_loss for cid in CONTROL_IDS}
    else:
        residual = (1.0 - w_loss) / (len(CONTROL_IDS) - len(loss_group))
        for cid in CONTROL_IDS:
            if losses[cid] > 0:
                weights[cid] = w_loss * losses[cid] / total_loss
            else:
                weights[cid] = residual
        if min(weights[cid] for cid in loss_group) < residual:
            warnings.warn(
                "a loss-bearing control carries less weight than the loss-free floor; "
                "consider raising w_loss or reviewing the attribution",
                DegenerateWeightsWarning,
                stacklevel=2,
            )
    return ControlWeights(weights=weights, w_loss=w_loss, loss_group=loss_group)


# ---------------------------------------------------------------------------
# Step 2: net weighted deviation
# ---------------------------------------------------------------------------

def net_weighted_deviation(
    own_maturity: Mapping[str, MaturityLevel],
    group_averages: Mapping[str, float],
    weights: ControlWeights,
) -> float:
    """Signed weighted gap between one municipality and its cohort.

    ``own_maturity`` values are :class:`MaturityLevel` members (or, for
    callers that pre-convert, scores already on [0, 1]).  Group averages are
    scores on [0, 1] as published in the benchmark.
    """
    total = 0.0
    for cid in CONTROL_IDS:
        value = own_maturity[cid]
        if isinstance(value, MaturityLevel):
            own = value.score
        else:
            own = float(value)
            if not 0.0 <= own <= 1.0:
                raise ValueError(f"maturity score for {cid} must be on [0, 1], got {own}")
        total += (own - group_averages[cid]) * weights.weights[cid]
    return total


# ---------------------------------------------------------------------------
# Step 3: loss curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossCurve:
    """Relative incident size as a function of deviation: y = exp(-k * x)."""

    k: float
    anchors: Tuple[Tuple[float, float], ...] = ()

    def multiplier(self, x: float) -> float:
        return math.exp(-self.k * x)


def fit_loss_curve(anchors: Sequence[Tuple[float, float]]) -> LossCurve:
    """Least-squares fit of ln y = -k x through the pinned origin (0, 1).

    Anchors at x = 0 contribute nothing to the sums (the curve passes through
    (0, 1) by construction), so at least one anchor must sit away from zero.
    Multipliers must be positive to have a logarithm.
    """
    anchors = tuple((float(x), float(y)) for x, y in anchors)
    if not anchors:
        raise NoInformativeAnchor("no anchors given")
    if any(y <= 0 for _, y in anchors):
        raise ValueError("anchor multipliers must be positive")
    sum_xx = sum(x * x for x, _ in anchors)
    if sum_xx == 0.0:
        raise NoInformativeAnchor("all anchors sit at x = 0")
    sum_xlogy = sum(x * math.log(y) for x, y in anchors)
    return LossCurve(k=-sum_xlogy / sum_xx, anchors=anchors)


def default_anchors(
    bench: BenchmarkReport,
    band: float = DEFAULT_BAND,
    headroom: float = DEFAULT_HEADROOM,
) -> List[Tuple[float, float]]:
    """Anchor positions reconstructed from the published loss histogram.

    Individual losses are not published, so each bucket contributes its count
    of representative losses: the bucket midpoint, except the open-ended top
    bucket which uses its lower edge times ``headroom``.  The reconstructed
    losses, sorted largest first, are placed on the N+1 evenly spaced grid
    over [-band, +band] with the grid point nearest zero dropped (dropping
    the positive one on a tie), so bigger losses sit at more negative
    deviations.  The pinned (0, 1) anchor representing the average loss is
    included explicitly.  With a single reconstructed loss this degenerates
    to one anchor at -band.
    """
    if band <= 0:
        raise NoInformativeAnchor("band must be positive")
    if headroom < 1:
        raise ValueError("headroom must be at least 1")
    if bench.loss_avg_usd is None or bench.loss_avg_usd <= 0:
        raise NoLossData("benchmark records no incident losses")

    representatives: List[float] = []
    for (lo, hi), count in zip(LOSS_BUCKETS, bench.bucket_counts):
        rep = (lo + hi) / 2 if hi is not None else lo * headroom
        representatives.extend([float(rep)] * count)
    if not representatives:
        raise NoLossData("loss histogram is empty")
    representatives.sort(reverse=True)

    n = len(representatives)
    grid = [-band + i * (2 * band / n) for i in range(n + 1)]
    drop = min(range(len(grid)), key=lambda i: (abs(grid[i]), -grid[i]))
    positions = [g for i, g in enumerate(grid) if i != drop]

    anchors: List[Tuple[float, float]] = [(0.0, 1.0)]
    anchors.extend((x, rep / bench.loss_avg_usd) for x, rep in zip(positions, representatives))
    return anchors


def defense_gap_index(x: float, curve: LossCurve) -> float:
    """Risk multiplier at deviation x; 1 at the cohort average."""
    return curve.multiplier(x)


# ---------------------------------------------------------------------------
# Fitted model parameters
# ---------------------------------------------------------------------------

MODEL_PARAMS_SCHEMA = "model-params-v1"


@dataclass(frozen=True)
class ModelParams:
    """Everything a forecaster needs, detached from the raw aggregate."""

    computation_id: str
    cohort: str
    n: int
    years: int
    frequency: float
    avg_loss_usd: float
    k: float
    band: float
    headroom: float
    w_loss: float
    weights: Mapping[str, float]
    loss_group: Tuple[str, ...]
    group_averages: Mapping[str, float]
    provenance: Optional[Mapping[str, object]] = None  # effective config, filled by the pipeline


def build_model_params(
    bench: BenchmarkReport,
    w_loss: float = DEFAULT_W_LOSS,
    band: float = DEFAULT_BAND,
    headroom: float = DEFAULT_HEADROOM,
    exponent: Optional[float] = None,
    provenance: Optional[Mapping[str, object]] = None,
) -> ModelParams:
    """Assemble weights and curve from a cohort benchmark.

    ``exponent`` overrides the fitted k (used to publish a model with a
    fixed, externally agreed curve); anchor construction is skipped then.
    """
    if bench.incident_count <= 0 or bench.loss_avg_usd is None:
        raise NoLossData("cannot build a loss-weighted model from a cohort with no incidents")
    weights = prorate_weights(bench.attributed_loss_usd, w_loss=w_loss)
    if exponent is not None:
        curve = LossCurve(k=float(exponent))
    else:
        curve = fit_loss_curve(default_anchors(bench, band=band, headroom=headroom))
    return ModelParams(
        computation_id=bench.computation_id,
        cohort=bench.cohort,
        n=bench.n,
        years=bench.years,
        frequency=bench.frequency,
        avg_loss_usd=bench.loss_avg_usd,
        k=curve.k,
        band=band,
        headroom=headroom,
        w_loss=w_loss,
        weights=weights.weights,
        loss_group=weights.loss_group,
        group_averages=dict(bench.control_means),
        provenance=dict(provenance) if provenance else {},
    )


def model_params_to_dict(params: ModelParams) -> dict:
    return {
        "schema": MODEL_PARAMS_SCHEMA,
        "computation_id": params.computation_id,
        "cohort": params.cohort,
        "n": params.n,
        "years": params.years,
        "frequency": round(params.frequency, 6),
        "avg_loss_usd": round(params.avg_loss_usd, 2),
        "k": round(params.k, 6),
        "band": round(params.band, 6),
        "headroom": round(params.headroom, 6),
        "w_loss": round(params.w_loss, 6),
        "weights": {cid: round(params.weights[cid], 6) for cid in CONTROL_IDS},
        "loss_group": list(params.loss_group),
        "group_averages": {cid: round(params.group_averages[cid], 6) for cid in CONTROL_IDS},
        "provenance": dict(params.provenance or {}),
    }


def model_params_from_dict(data: Mapping) -> ModelParams:
    if data.get("schema") != MODEL_PARAMS_SCHEMA:
        raise ValueError(f"unsupported model params schema: {data.get('schema')!r}")
    return ModelParams(
        computation_id=str(data["computation_id"]),
        cohort=str(data["cohort"]),
        n=int(data["n"]),
        years=int(data["years"]),
        frequency=float(data["frequency"]),
        avg_loss_usd=float(data["avg_loss_usd"]),
        k=float(data["k"]),
        band=float(data["band"]),
        headroom=float(data["headroom"]),
        w_loss=float(data["w_loss"]),
        weights={cid: float(v) for cid, v in data["weights"].items()},
        loss_group=tuple(data["loss_group"]),
        group_averages={cid: float(v) for cid, v in data["group_averages"].items()},
        provenance=dict(data.get("provenance", {})),
    )
