"""Cohort benchmark statistics derived from a combined aggregate.

Everything here is plain accounting on the published column sums: per-control
maturity averages, level histograms, incident frequency over the observation
window, loss totals, and the attributed-loss breakdown that later drives the
control weighting.  Nothing in this module sees individual responses except
:func:`allocate_losses`, which runs client-side before encoding.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .controls import CONTROL_BY_ID, CONTROL_IDS, CONTROL_ORDER, CONTROLS, ParticipantResponse
from .secure_agg import LOSS_BUCKET_TAGS, AggregateReport

DEFAULT_YEARS = 3


# ---------------------------------------------------------------------------
# Client-side loss allocation
# ---------------------------------------------------------------------------

def allocate_losses(resp: ParticipantResponse) -> Dict[str, int]:
    """Spread a respondent's total loss equally over its failed controls.

    Integer dollars only: the split is ``total // k`` each, with the
    remainder added to the first failed control in catalog order, so the
    allocation always sums back to the reported total.
    """
    if resp.incident_count == 0 or not resp.failed_controls:
        return {}
    failed = sorted(resp.failed_controls, key=lambda c: CONTROL_ORDER[c])
    share, remainder = divmod(resp.total_loss_usd, len(failed))
    return {cid: share + (remainder if i == 0 else 0) for i, cid in enumerate(failed)}


# ---------------------------------------------------------------------------
# Benchmark report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkReport:
    """Published statistics for one cohort."""

    computation_id: str
    cohort: str
    n: int
    years: int
    control_means: Mapping[str, float]          # control id -> mean score on [0, 1]
    category_means: Mapping[str, float]         # category index (str) -> mean score
    overall_mean: float
    level_counts: Mapping[str, Tuple[int, int, int, int]]  # not/partial/large/full
    incident_count: int
    frequency: float                            # incidents per municipality-year
    loss_total_usd: int
    loss_avg_usd: Optional[float]               # None when no incidents
    bucket_counts: Tuple[int, int, int, int]
    attributed_loss_usd: Mapping[str, int]


class InconsistentAggregate(ValueError):
    """Column sums violate the layout's internal redundancy."""


def compute_benchmarks(aggregate: AggregateReport, years: int = DEFAULT_YEARS) -> BenchmarkReport:
    """Derive the cohort benchmark from combined column sums.

    The layout is redundant (maturity sums vs level histograms); honest
    pipelines always agree, so a mismatch means a corrupted aggregate and
    raises :class:`InconsistentAggregate`.
    """
    if years <= 0:
        raise ValueError("years must be positive")
    n = aggregate.n
    if n <= 0:
        raise ValueError("aggregate has no participants")

    control_means: Dict[str, float] = {}
    level_counts: Dict[str, Tuple[int, int, int, int]] = {}
    for cid in CONTROL_IDS:
        counts = aggregate.level_counts(cid)
        if sum(counts) != n:
            raise InconsistentAggregate(f"level counts for {cid} sum to {sum(counts)}, expected {n}")
        histogram_sum = sum(i * c for i, c in enumerate(counts))
        if histogram_sum != aggregate.maturity_sum(cid):
            raise InconsistentAggregate(f"maturity sum for {cid} disagrees with its histogram")
        control_means[cid] = aggregate.maturity_sum(cid) / (3 * n)
        level_counts[cid] = counts

    category_means: Dict[str, float] = {}
    for index in sorted({c.category_index for c in CONTROLS}):
        members = [c.code for c in CONTROLS if c.category_index == index]
        category_means[str(index)] = sum(control_means[cid] for cid in members) / len(members)
    overall_mean = sum(control_means.values()) / len(CONTROL_IDS)

    incident_count = aggregate.incident_count
    loss_total = aggregate.total_loss_usd
    attributed = {cid: aggregate.attributed_loss(cid) for cid in CONTROL_IDS}
    if sum(attributed.values()) != loss_total:
        raise InconsistentAggregate("attributed losses do not sum to the loss total")

    return BenchmarkReport(
        computation_id=aggregate.computation_id,
        cohort=aggregate.cohort,
        n=n,
        years=years,
        control_means=control_means,
        category_means=category_means,
        overall_mean=overall_mean,
        level_counts=level_counts,
        incident_count=incident_count,
        frequency=incident_count / (n * years),
        loss_total_usd=loss_total,
        loss_avg_usd=(loss_total / incident_count) if incident_count > 0 else None,
        bucket_counts=aggregate.bucket_counts(),
        attributed_loss_usd=attributed,
    )


def maturity_level_summary(report: BenchmarkReport, control_id: str) -> str:
    """Human-readable histogram line, e.g. for the MFA headline number."""
    counts = report.level_counts[control_id]
    return (
        f"{control_id}: of {report.n} municipalities, {counts[3]} fully implemented, "
        f"{counts[2]} largely, {counts[1]} partially, {counts[0]} not implemented"
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def benchmark_to_dict(report: BenchmarkReport) -> dict:
    return {
        "kind": "benchmark_report",
        "computation_id": report.computation_id,
        "cohort": report.cohort,
        "n": report.n,
        "years": report.years,
        "control_means": {cid: round(report.control_means[cid], 6) for cid in CONTROL_IDS},
        "category_means": {k: round(v, 6) for k, v in report.category_means.items()},
        "overall_mean": round(report.overall_mean, 6),
        "level_counts": {cid: list(report.level_counts[cid]) for cid in CONTROL_IDS},
        "incident_count": report.incident_count,
        "frequency": round(report.frequency, 6),
        "loss_total_usd": report.loss_total_usd,
        "loss_avg_usd": None if report.loss_avg_usd is None else round(report.loss_avg_usd),
        "bucket_counts": dict(zip(LOSS_BUCKET_TAGS, report.bucket_counts)),
        "attributed_loss_usd": {cid: report.attributed_loss_usd[cid] for cid in CONTROL_IDS},
    }


def benchmark_from_dict(data: Mapping) -> BenchmarkReport:
    return BenchmarkReport(
        computation_id=str(data["computation_id"]),
        cohort=str(data["cohort"]),
        n=int(data["n"]),
        years=int(data["years"]),
        control_means={cid: float(v) for cid, v in data["control_means"].items()},
        category_means={str(k): float(v) for k, v in data["category_means"].items()},
        overall_mean=float(data["overall_mean"]),
        level_counts={cid: tuple(v) for cid, v in data["level_counts"].items()},
        incident_count=int(data["incident_count"]),
        frequency=float(data["frequency"]),
        loss_total_usd=int(data["loss_total_usd"]),
        loss_avg_usd=None if data["loss_avg_usd"] is None else float(data["loss_avg_usd"]),
        bucket_counts=tuple(data["bucket_counts"][tag] for tag in LOSS_BUCKET_TAGS),
        attributed_loss_usd={cid: int(v) for cid, v in data["attributed_loss_usd"].items()},
    )


def benchmark_to_csv(report: BenchmarkReport) -> str:
    """Per-control table for publication; one row per catalog entry."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "control_id", "category", "label", "mean_score_pct",
        "not_implemented", "partially_implemented", "largely_implemented", "fully_implemented",
        "attributed_loss_usd",
    ])
    for control in CONTROLS:
        counts = report.level_counts[control.code]
        writer.writerow([
            control.code,
            f"{control.category_index}. {control.category}",
            control.label,
            f"{report.control_means[control.code] * 100:.1f}",
            counts[0], counts[1], counts[2], counts[3],
            report.attributed_loss_usd[control.code],
        ])
    return buf.getvalue()
