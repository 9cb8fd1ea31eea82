"""Command-line interface for the benchmarking pipeline.

One command per pipeline stage, so deployments can run the honest
distributed flow (share at each municipality, serve and seal at each
aggregation server, combine and publish at the moderator) or rehearse the
whole thing locally with ``demo``.

Configuration defaults can be overridden per command with flags, with
``SCRAMBENCH_*`` environment variables (YEARS, W_LOSS, BAND, HEADROOM,
NUM_SERVERS, MIN_COHORT_SIZE, EXPONENT, MODEL_COHORT, SEED,
COMPUTATION_ID), or with ``--config FILE``; flags win over environment over
file over defaults.  Effective values are recorded in every output file's
provenance header.
"""

from __future__ import annotations

import json
import logging
import secrets as _secrets
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
import numpy as np

from . import __version__
from .agg_protocol import AggregationClient, serve_aggregation
from .benchmark import allocate_losses, benchmark_from_dict, benchmark_to_csv, benchmark_to_dict, compute_benchmarks
from .controls import (
    COHORT_TAGS,
    ParticipantResponse,
    assign_cohorts,
    load_response,
    response_to_dict,
    validate_response,
)
from .fixtures import DEFAULT_SEED, build_reference_cohort
from .forecast import forecast, forecast_from_maturity, forecast_to_dict, marginal_control_ranking, ranking_to_dicts, sweep, sweep_to_csv
from .gap_model import build_model_params, model_params_from_dict, model_params_to_dict
from .model_api import create_model_server
from .pipeline import (
    ComputationConfig,
    apply_env_overrides,
    config_from_file,
    plaintext_aggregates,
    provenance,
    run_pipeline,
    write_pipeline_outputs,
)
from .secure_agg import (
    AggregationServerState,
    aggregate_report_from_dict,
    aggregate_report_to_dict,
    combine_partials,
    encode_response,
    partial_sum_from_dict,
    partial_sum_to_dict,
    read_json,
    share_bundle_from_dict,
    share_bundle_to_dict,
    split_vector,
    write_json,
)

log = logging.getLogger(__name__)


def _build_config(config_file: Optional[str], **flags) -> Tuple[ComputationConfig, List[str]]:
    config = config_from_file(config_file) if config_file else ComputationConfig()
    config, env_names = apply_env_overrides(config)
    updates = {k: v for k, v in flags.items() if v is not None}
    if updates:
        config = replace(config, **updates)
    return config, env_names


def _echo_json(payload: dict) -> None:
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


_CONFIG_OPTIONS = (
    click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="JSON config file with ComputationConfig fields."),
    click.option("--computation-id", default=None, help="Computation identifier (default: demo)."),
)


def _with_options(*options):
    def wrap(func):
        for option in reversed(options):
            func = option(func)
        return func
    return wrap


@click.group()
@click.version_option(version=__version__, prog_name="scrambench")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Privacy-preserving municipal cyber-defense benchmarking."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


# ---------------------------------------------------------------------------
# Response handling
# ---------------------------------------------------------------------------

@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
def validate(files) -> None:
    """Validate response JSON files; exit nonzero if any are invalid."""
    bad = 0
    for path in files:
        try:
            resp = load_response(path)
        except (ValueError, KeyError) as exc:
            click.echo(f"{path}: MALFORMED {exc}")
            bad += 1
            continue
        violations = validate_response(resp)
        if violations:
            bad += 1
            for v in violations:
                click.echo(f"{path}: {v.code} ({v.field}): {v.message}")
        else:
            click.echo(f"{path}: ok")
    if bad:
        raise SystemExit(1)


@main.command("import-csv")
@click.argument("csv_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--participant-id", default=None, help="Defaults to the CSV file name stem.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output JSON path (default: CSV path with .json).")
def import_csv(csv_file: str, participant_id: Optional[str], out: Optional[str]) -> None:
    """Convert a spreadsheet-exported questionnaire CSV to response JSON."""
    from .qcsv import parse_questionnaire_csv

    path = Path(csv_file)
    pid = participant_id or path.stem
    try:
        resp = parse_questionnaire_csv(path.read_text(encoding="utf-8"), pid)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    violations = validate_response(resp)
    for v in violations:
        click.echo(f"warning: {v.code}: {v.message}", err=True)
    out_path = Path(out) if out else path.with_suffix(".json")
    write_json(out_path, response_to_dict(resp))
    click.echo(f"wrote {out_path}")


# ---------------------------------------------------------------------------
# Aggregation flow
# ---------------------------------------------------------------------------

@main.command()
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@_with_options(*_CONFIG_OPTIONS)
@click.option("--num-servers", type=int, default=None, help="Number of aggregation servers (default: 3).")
@click.option("--seed", type=int, default=None, help="Deterministic share randomness (testing only).")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True,
              help="Share files land in OUT_DIR/server-<i>/.")
def share(files, config_file, computation_id, num_servers, seed, out_dir) -> None:
    """Split responses into per-server share files (sneakernet transport)."""
    config, _ = _build_config(config_file, computation_id=computation_id, num_servers=num_servers, seed=seed)
    rng = np.random.Generator(np.random.PCG64(config.seed)) if config.seed is not None else None
    out = Path(out_dir)
    for i in range(config.num_servers):
        (out / f"server-{i + 1}").mkdir(parents=True, exist_ok=True)

    written = 0
    for path in files:
        resp = load_response(path)
        violations = validate_response(resp)
        if violations:
            raise click.ClickException(f"{path}: invalid response: {violations[0].code}: {violations[0].message}")
        vector = encode_response(resp, allocate_losses(resp))
        for cohort in assign_cohorts(resp):
            token = _secrets.token_hex(16) if config.seed is None else f"{rng.integers(0, 2**63):016x}"
            bundles = split_vector(
                vector,
                computation_id=config.computation_id,
                cohort=cohort,
                session_token=token,
                num_servers=config.num_servers,
                rng=rng,
            )
            for bundle in bundles:
                target = out / f"server-{bundle.server_index}" / f"{token}.json"
                write_json(target, share_bundle_to_dict(bundle))
                written += 1
    click.echo(f"wrote {written} share files for {len(files)} responses under {out}")


@main.command("serve-agg")
@_with_options(*_CONFIG_OPTIONS)
@click.option("--server-index", type=int, required=True, help="This server's 1-based index.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7401, show_default=True)
def serve_agg(config_file, computation_id, server_index, host, port) -> None:
    """Run one aggregation server over TCP until interrupted."""
    config, _ = _build_config(config_file, computation_id=computation_id)
    state = AggregationServerState(server_index, config.computation_id, config.modulus)
    server = serve_aggregation(state, host, port)
    click.echo(f"aggregation server {server_index} for computation {config.computation_id!r} "
               f"on {server.server_address[0]}:{server.server_address[1]} (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("stopping")
    finally:
        server.server_close()


@main.command()
@_with_options(*_CONFIG_OPTIONS)
@click.option("--in-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Offline mode: accumulate this server's share files.")
@click.option("--server-index", type=int, default=None, help="Required with --in-dir.")
@click.option("--connect", default=None, metavar="HOST:PORT",
              help="Network mode: seal a cohort on a running server.")
@click.option("--cohort", default=None, type=click.Choice(COHORT_TAGS),
              help="Required with --connect; offline mode seals every cohort present.")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def seal(config_file, computation_id, in_dir, server_index, connect, cohort, out_dir) -> None:
    """Produce per-cohort partial sums, from share files or a live server."""
    config, _ = _build_config(config_file, computation_id=computation_id)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if (in_dir is None) == (connect is None):
        raise click.ClickException("use exactly one of --in-dir or --connect")

    partials = []
    if in_dir is not None:
        if server_index is None:
            raise click.ClickException("--server-index is required with --in-dir")
        state = AggregationServerState(server_index, config.computation_id, config.modulus)
        paths = sorted(Path(in_dir).glob("*.json"))
        if not paths:
            raise click.ClickException(f"no share files under {in_dir}")
        cohorts: List[str] = []
        for path in paths:
            bundle = share_bundle_from_dict(read_json(path))
            state.submit(bundle)
            if bundle.cohort not in cohorts:
                cohorts.append(bundle.cohort)
        for tag in cohorts:
            partials.append(state.seal(tag))
    else:
        if cohort is None:
            raise click.ClickException("--cohort is required with --connect")
        host, _, port = connect.partition(":")
        with AggregationClient(host, int(port), config.computation_id, config.modulus) as client:
            partials.append(client.seal(cohort))

    for partial in partials:
        path = out / f"partial_{partial.cohort}_server{partial.server_index}.json"
        write_json(path, partial_sum_to_dict(partial))
        click.echo(f"wrote {path} (n={partial.n})")


@main.command()
@click.argument("partials", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@_with_options(*_CONFIG_OPTIONS)
@click.option("--num-servers", type=int, default=None, help="Number of aggregation servers (default: 3).")
@click.option("--min-cohort-size", type=int, default=None, help="Smallest publishable cohort (default: 5).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def combine(partials, config_file, computation_id, num_servers, min_cohort_size, out) -> None:
    """Combine one cohort's M partial sums into the plaintext aggregate."""
    config, env_names = _build_config(config_file, computation_id=computation_id,
                                      num_servers=num_servers, min_cohort_size=min_cohort_size)
    parsed = [partial_sum_from_dict(read_json(p)) for p in partials]
    report = combine_partials(parsed, config.num_servers, config.min_cohort_size)
    payload = aggregate_report_to_dict(report)
    payload["provenance"] = provenance(config, env_names)
    write_json(out, payload)
    click.echo(f"wrote {out} (cohort={report.cohort}, n={report.n})")


# ---------------------------------------------------------------------------
# Benchmarks and the model
# ---------------------------------------------------------------------------

@main.command()
@click.argument("aggregate", type=click.Path(exists=True, dir_okay=False))
@_with_options(*_CONFIG_OPTIONS)
@click.option("--years", type=int, default=None, help="Observation window (default: 3).")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), default=None,
              help="Also write the publication CSV table.")
def benchmark(aggregate, config_file, computation_id, years, out, csv_out) -> None:
    """Derive the cohort benchmark from a combined aggregate."""
    config, env_names = _build_config(config_file, computation_id=computation_id, years=years)
    report = compute_benchmarks(aggregate_report_from_dict(read_json(aggregate)), config.years)
    payload = benchmark_to_dict(report)
    payload["provenance"] = provenance(config, env_names)
    write_json(out, payload)
    click.echo(f"wrote {out}")
    if csv_out:
        Path(csv_out).write_text(benchmark_to_csv(report), encoding="utf-8")
        click.echo(f"wrote {csv_out}")


@main.command()
@click.argument("benchmark_file", type=click.Path(exists=True, dir_okay=False))
@_with_options(*_CONFIG_OPTIONS)
@click.option("--w-loss", type=float, default=None, help="Loss-group weight share (default: 0.85).")
@click.option("--band", type=float, default=None, help="Anchor band half-width (default: 0.30).")
@click.option("--headroom", type=float, default=None, help="Top-bucket multiplier (default: 1.5).")
@click.option("--exponent", type=float, default=None, help="Fixed curve exponent; skips the fit.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fit(benchmark_file, config_file, computation_id, w_loss, band, headroom, exponent, out) -> None:
    """Fit the gap model on a benchmark and publish model parameters."""
    config, env_names = _build_config(config_file, computation_id=computation_id,
                                      w_loss=w_loss, band=band, headroom=headroom, exponent=exponent)
    bench = benchmark_from_dict(read_json(benchmark_file))
    params = build_model_params(
        bench,
        w_loss=config.w_loss,
        band=config.band,
        headroom=config.headroom,
        exponent=config.exponent,
        provenance=provenance(config, env_names),
    )
    write_json(out, model_params_to_dict(params))
    click.echo(f"wrote {out} (k={params.k:.6f})")


@main.command("forecast")
@click.option("--params", "params_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--x", "x_value", type=float, default=None, help="Deviation to evaluate directly.")
@click.option("--response", "response_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Compute the deviation from this response's maturity.")
def forecast_cmd(params_file, x_value, response_file) -> None:
    """Print the risk forecast for a deviation or a concrete response."""
    if (x_value is None) == (response_file is None):
        raise click.ClickException("use exactly one of --x or --response")
    params = model_params_from_dict(read_json(params_file))
    if x_value is not None:
        payload = forecast_to_dict(forecast(params, x_value))
    else:
        resp = load_response(response_file)
        point = forecast_from_maturity(params, resp.maturity)
        payload = forecast_to_dict(point)
        payload["ranking"] = ranking_to_dicts(marginal_control_ranking(params, resp.maturity))
    _echo_json(payload)


@main.command("sweep")
@click.option("--params", "params_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--steps", type=int, default=61, show_default=True)
@click.option("--band", type=float, default=None, help="Override the sweep half-width.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def sweep_cmd(params_file, steps, band, out) -> None:
    """Write the annual-risk curve over [-band, +band] as CSV."""
    params = model_params_from_dict(read_json(params_file))
    series = sweep(params, steps=steps, band=band)
    Path(out).write_text(sweep_to_csv(series), encoding="utf-8")
    click.echo(f"wrote {out}")


@main.command("serve-model")
@click.option("--params", "params_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8377, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Serve a static what-if UI from this directory.")
def serve_model(params_file, host, port, ui_dir) -> None:
    """Serve the model API (and optionally the what-if UI) over HTTP."""
    params_doc = read_json(params_file)
    server = create_model_server(params_doc, host, port, Path(ui_dir) if ui_dir else None)
    click.echo(f"model API on http://{server.server_address[0]}:{server.server_address[1]}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("stopping")
    finally:
        server.server_close()


# ---------------------------------------------------------------------------
# Demo
# ---------------------------------------------------------------------------

@main.command()
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@_with_options(*_CONFIG_OPTIONS)
@click.option("--plaintext", is_flag=True, help="Skip the secure transport (cross-check mode).")
def demo(out_dir, seed, config_file, computation_id, plaintext) -> None:
    """Run the whole pipeline on the bundled reference cohort."""
    config, env_names = _build_config(config_file, computation_id=computation_id, seed=seed)
    responses = build_reference_cohort(config.seed)

    out = Path(out_dir)
    resp_dir = out / "responses"
    resp_dir.mkdir(parents=True, exist_ok=True)
    for resp in responses:
        write_json(resp_dir / f"{resp.participant_id}.json", response_to_dict(resp))

    result = run_pipeline(responses, config, secure=not plaintext, env_overrides=env_names)
    if not plaintext:
        # The secure transport must reproduce the plaintext sums bit for bit.
        oracle = plaintext_aggregates(responses, config)
        for cohort, agg in result.aggregates.items():
            if oracle[cohort].slots != agg.slots or oracle[cohort].n != agg.n:
                raise click.ClickException(f"secure aggregate for {cohort!r} deviates from the plaintext oracle")
        click.echo("plaintext cross-check: match")

    written = write_pipeline_outputs(result, out, env_names)
    for path in written:
        click.echo(f"wrote {path}")

    bench = result.benchmarks[config.model_cohort]
    point = forecast(result.params, 0.0)
    click.echo(
        f"cohort {config.model_cohort!r}: n={bench.n}, incidents={bench.incident_count}, "
        f"frequency={bench.frequency:.6f}, avg loss=${bench.loss_avg_usd:,.0f}"
    )
    click.echo(f"fitted k={result.params.k:.6f}; pool-average annual risk=${point.annual_risk_usd:,.0f}")


if __name__ == "__main__":
    main()
