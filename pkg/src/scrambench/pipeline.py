"""End-to-end computation: responses in, published artifacts out.

The pipeline validates responses, packs and secret-shares them, drives the
aggregation protocol (in-process loopback), combines partial sums per
cohort, derives benchmarks, fits the gap model on the configured cohort, and
sweeps the forecast curve.  A plaintext mode skips the sharing and sums
vectors directly; both modes produce identical artifacts, which the test
suite and the demo assert.

Cohorts below the size floor are skipped with a warning; only the model
cohort itself falling below the floor is fatal.

All outputs are deterministic for a fixed seed: no timestamps, sorted keys,
fractions rounded to six decimals, currency to whole dollars.  Every file
embeds a ``provenance`` header with the effective configuration so published
numbers can be traced to the run that made them.
"""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .agg_protocol import LoopbackTransport
from .benchmark import BenchmarkReport, allocate_losses, benchmark_to_csv, benchmark_to_dict, compute_benchmarks
from .controls import COHORT_ALL, COHORT_TAGS, ParticipantResponse, assign_cohorts, validate_response
from .forecast import SweepSeries, sweep, sweep_to_csv
from .gap_model import ModelParams, build_model_params, model_params_to_dict
from .secure_agg import (
    MODULUS,
    AggregateReport,
    AggregationVector,
    CohortTooSmall,
    DEFAULT_MIN_COHORT_SIZE,
    aggregate_report_to_dict,
    combine_partials,
    encode_response,
    split_vector,
    write_json,
)

log = logging.getLogger(__name__)

ENV_PREFIX = "SCRAMBENCH_"


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComputationConfig:
    computation_id: str = "demo"
    num_servers: int = 3
    years: int = 3
    w_loss: float = 0.85
    band: float = 0.30
    headroom: float = 1.5
    min_cohort_size: int = DEFAULT_MIN_COHORT_SIZE
    exponent: Optional[float] = None  # fixed curve exponent; skips the fit
    model_cohort: str = COHORT_ALL
    seed: Optional[int] = None
    modulus: int = MODULUS


_ENV_FIELDS = {
    "COMPUTATION_ID": ("computation_id", str),
    "NUM_SERVERS": ("num_servers", int),
    "YEARS": ("years", int),
    "W_LOSS": ("w_loss", float),
    "BAND": ("band", float),
    "HEADROOM": ("headroom", float),
    "MIN_COHORT_SIZE": ("min_cohort_size", int),
    "EXPONENT": ("exponent", float),
    "MODEL_COHORT": ("model_cohort", str),
    "SEED": ("seed", int),
}


def apply_env_overrides(
    config: ComputationConfig,
    environ: Optional[Mapping[str, str]] = None,
) -> Tuple[ComputationConfig, List[str]]:
    """Apply ``SCRAMBENCH_*`` variables; returns the config and what changed."""
    environ = os.environ if environ is None else environ
    overridden: List[str] = []
    updates: Dict[str, object] = {}
    for suffix, (field_name, cast) in _ENV_FIELDS.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            updates[field_name] = cast(raw)
        except ValueError:
            raise ValueError(f"cannot parse {ENV_PREFIX + suffix}={raw!r} as {cast.__name__}") from None
        overridden.append(ENV_PREFIX + suffix)
    return (replace(config, **updates) if updates else config), overridden


def config_from_file(path) -> ComputationConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    known = set(ComputationConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return ComputationConfig(**data)


def provenance(config: ComputationConfig, env_overrides: Sequence[str] = ()) -> dict:
    prov = {"tool": "scrambench", "version": __version__, "config": asdict(config)}
    if env_overrides:
        prov["env_overrides"] = list(env_overrides)
    return prov


# ---------------------------------------------------------------------------
# Aggregation paths
# ---------------------------------------------------------------------------

def prepare_vectors(responses: Sequence[ParticipantResponse]) -> List[AggregationVector]:
    """Validate and encode every response; raises on the first invalid one."""
    vectors = []
    for resp in responses:
        violations = validate_response(resp)
        if violations:
            details = "; ".join(f"{v.code}: {v.message}" for v in violations)
            raise ValueError(f"response {resp.participant_id!r} is invalid: {details}")
        vectors.append(encode_response(resp, allocate_losses(resp)))
    return vectors


def _cohort_order(cohorts: Dict[str, AggregateReport]) -> Dict[str, AggregateReport]:
    return {c: cohorts[c] for c in COHORT_TAGS if c in cohorts}


def plaintext_aggregates(
    responses: Sequence[ParticipantResponse],
    config: ComputationConfig,
) -> Dict[str, AggregateReport]:
    """Direct column sums per cohort; the oracle the secure path must match.

    No size floor is applied here; callers decide what to do with small
    cohorts.
    """
    vectors = prepare_vectors(responses)
    sums: Dict[str, List[int]] = {}
    counts: Dict[str, int] = {}
    for resp, vec in zip(responses, vectors):
        for cohort in assign_cohorts(resp):
            acc = sums.setdefault(cohort, [0] * len(vec.slots))
            for i, v in enumerate(vec.slots):
                acc[i] += v
            counts[cohort] = counts.get(cohort, 0) + 1
    return _cohort_order({
        cohort: AggregateReport(
            computation_id=config.computation_id,
            cohort=cohort,
            n=counts[cohort],
            slots=tuple(sums[cohort]),
        )
        for cohort in sums
    })


def secure_aggregates(
    responses: Sequence[ParticipantResponse],
    config: ComputationConfig,
) -> Dict[str, AggregateReport]:
    """Split, submit over the loopback protocol, seal, and combine.

    Cohorts below the size floor are left out of the result (the partials
    exist but are never combined), mirroring a moderator who refuses to
    publish them.
    """
    vectors = prepare_vectors(responses)
    transport = LoopbackTransport(config.computation_id, config.num_servers, config.modulus)
    share_rng = np.random.Generator(np.random.PCG64(config.seed)) if config.seed is not None else None
    token_rng = random.Random(config.seed)

    seen_cohorts: List[str] = []
    for resp, vec in zip(responses, vectors):
        for cohort in assign_cohorts(resp):
            if cohort not in seen_cohorts:
                seen_cohorts.append(cohort)
            token = f"{token_rng.getrandbits(64):016x}"
            bundles = split_vector(
                vec,
                computation_id=config.computation_id,
                cohort=cohort,
                session_token=token,
                num_servers=config.num_servers,
                rng=share_rng,
            )
            transport.submit(bundles)

    aggregates: Dict[str, AggregateReport] = {}
    for cohort in seen_cohorts:
        if transport.states[0].participant_count(cohort) < config.min_cohort_size:
            log.warning("cohort %r is below the size floor (%d); not combining",
                        cohort, config.min_cohort_size)
            continue
        partials = transport.seal(cohort)
        aggregates[cohort] = combine_partials(partials, config.num_servers, config.min_cohort_size)
    return _cohort_order(aggregates)


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    config: ComputationConfig
    aggregates: Dict[str, AggregateReport]
    benchmarks: Dict[str, BenchmarkReport]
    params: ModelParams
    sweep: SweepSeries
    skipped_cohorts: Tuple[str, ...]


def run_pipeline(
    responses: Sequence[ParticipantResponse],
    config: ComputationConfig,
    secure: bool = True,
    env_overrides: Sequence[str] = (),
) -> PipelineResult:
    if secure:
        aggregates = secure_aggregates(responses, config)
        all_cohorts = set()
        for resp in responses:
            all_cohorts.update(assign_cohorts(resp))
        skipped = tuple(c for c in COHORT_TAGS if c in all_cohorts and c not in aggregates)
    else:
        raw = plaintext_aggregates(responses, config)
        aggregates = {c: agg for c, agg in raw.items() if agg.n >= config.min_cohort_size}
        skipped = tuple(c for c in raw if c not in aggregates)
    for cohort in skipped:
        log.warning("cohort %r skipped: below the minimum size %d", cohort, config.min_cohort_size)

    benchmarks = {cohort: compute_benchmarks(agg, config.years) for cohort, agg in aggregates.items()}
    if config.model_cohort not in benchmarks:
        raise CohortTooSmall(f"model cohort {config.model_cohort!r} is missing or below the size floor")
    params = build_model_params(
        benchmarks[config.model_cohort],
        w_loss=config.w_loss,
        band=config.band,
        headroom=config.headroom,
        exponent=config.exponent,
        provenance=provenance(config, env_overrides),
    )
    return PipelineResult(
        config=config,
        aggregates=aggregates,
        benchmarks=benchmarks,
        params=params,
        sweep=sweep(params),
        skipped_cohorts=skipped,
    )


# ---------------------------------------------------------------------------
# Output writing
# ---------------------------------------------------------------------------

def _with_provenance(payload: dict, prov: dict) -> dict:
    out = dict(payload)
    out["provenance"] = prov
    return out


def _csv_with_provenance(body: str, prov: dict) -> str:
    header = "# provenance: " + json.dumps(prov, sort_keys=True, separators=(",", ":"))
    return header + "\n" + body


def write_pipeline_outputs(result: PipelineResult, out_dir, env_overrides: Sequence[str] = ()) -> List[Path]:
    """Write every published artifact; returns the paths, sorted."""
    out = Path(out_dir)
    prov = provenance(result.config, env_overrides)
    written: List[Path] = []

    agg_dir = out / "aggregates"
    bench_dir = out / "benchmarks"
    agg_dir.mkdir(parents=True, exist_ok=True)
    bench_dir.mkdir(parents=True, exist_ok=True)

    for cohort, agg in result.aggregates.items():
        path = agg_dir / f"aggregate_{cohort}.json"
        write_json(path, _with_provenance(aggregate_report_to_dict(agg), prov))
        written.append(path)
    for cohort, bench in result.benchmarks.items():
        jpath = bench_dir / f"benchmark_{cohort}.json"
        write_json(jpath, _with_provenance(benchmark_to_dict(bench), prov))
        written.append(jpath)
        cpath = bench_dir / f"benchmark_{cohort}.csv"
        cpath.write_text(_csv_with_provenance(benchmark_to_csv(bench), prov), encoding="utf-8")
        written.append(cpath)

    params_path = out / "model_params.json"
    write_json(params_path, model_params_to_dict(result.params))
    written.append(params_path)

    sweep_path = out / "sweep.csv"
    sweep_path.write_text(_csv_with_provenance(sweep_to_csv(result.sweep), prov), encoding="utf-8")
    written.append(sweep_path)

    return sorted(written)
