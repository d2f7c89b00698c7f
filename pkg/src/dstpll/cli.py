"""Command-line front end.

The CLI is a thin client of the HTTP service: by default each command
drives an in-process instance of the app (no socket, fully deterministic),
and ``--server URL`` points it at a running remote instance instead. Every
command is a pure function of (input files, config, seed); outputs are
written byte-identically on reruns, together with a JSON sidecar echoing
the effective configuration for exact replay.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .bench import DEFAULT_BETAS
from .oracle import (
    DEFAULT_RISK_GRID,
    DEFAULT_RISK_K,
    DEFAULT_RISK_MODEL_ARGS,
    DEFAULT_RISK_QUERIES,
    DEFAULT_RISK_TRIALS,
)

SEED_ENV = "DSTPLL_SEED"


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the in-process client trips a
        from starlette.testclient import TestClient  # noisy UserWarning

    from .service import create_app

    return TestClient(create_app())


def _merge_config(ctx: click.Context, config_path: str | None, values: dict) -> dict:
    """File config under CLI flags: explicit flags win, unknown keys are fatal."""
    if config_path is None:
        file_cfg = {}
    else:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {config_path}: {exc}")
        if not isinstance(file_cfg, dict):
            raise click.UsageError(f"config {config_path} must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(values))
        if unknown:
            raise click.UsageError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for name, value in values.items():
        source = ctx.get_parameter_source(name)
        from_flag = source is not None and source.name == "COMMANDLINE"
        if not from_flag and name in file_cfg:
            merged[name] = file_cfg[name]
        else:
            merged[name] = value
    return merged


def _resolve_seed(seed):
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    return int(env) if env else 0


def _post(ctx: click.Context, path: str, payload: dict) -> dict:
    client = _make_client(ctx.obj.get("server"))
    try:
        resp = client.post(path, json=payload)
    except Exception as exc:  # connection problems against --server
        click.echo(f"error: cannot reach service: {exc}", err=True)
        raise SystemExit(2)
    if resp.status_code == 422:
        click.echo(f"error: invalid configuration: {resp.json()['detail']}", err=True)
        raise SystemExit(2)
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text)
        if isinstance(detail, dict):
            click.echo(f"error: {detail.get('error')}: {detail.get('message')}", err=True)
        else:
            click.echo(f"error: {detail}", err=True)
        raise SystemExit(3)
    return resp.json()


def _write_outputs(output: str, text: str, sidecar: dict) -> None:
    out = Path(output)
    out.write_bytes(text.encode("utf-8"))
    side = out.with_suffix(".config.json")
    side.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8")


_input_arg = click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
_output_opt = click.option("-o", "--output", required=True, type=click.Path(dir_okay=False))
_config_opt = click.option(
    "-c", "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    help="JSON file with defaults for this command; explicit flags win.",
)
_seed_opt = click.option(
    "--seed", type=int, default=None,
    help=f"Random seed (default: ${SEED_ENV} or 0).",
)


@click.group()
@click.option("--server", default=None, envvar="DSTPLL_SERVER",
              help="URL of a running dstpll service; default runs in-process.")
@click.version_option()
@click.pass_context
def main(ctx, server):
    """Partial-label learning toolkit: augmentation, benchmarks, theory checks."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@_input_arg
@_output_opt
@click.option("-p", "--fraction", type=float, default=0.5, show_default=True,
              help="Fraction of instances that receive false-positive labels.")
@click.option("-r", "--false-positives", "false_positives", type=int, default=1,
              show_default=True, help="Number of false-positive labels per affected instance.")
@click.option("-e", "--cooccurrence", type=float, default=None,
              help="Partner co-occurrence degree (requires a single false positive).")
@_seed_opt
@_config_opt
@click.pass_context
def augment(ctx, input_path, output, fraction, false_positives, cooccurrence, seed, config_path):
    """Add controlled candidate-label noise to a supervised CSV."""
    cfg = _merge_config(ctx, config_path, {
        "fraction": fraction,
        "false_positives": false_positives,
        "cooccurrence": cooccurrence,
        "seed": seed,
    })
    cfg["seed"] = _resolve_seed(cfg["seed"])
    payload = dict(cfg, dataset_csv=Path(input_path).read_text(encoding="utf-8"))
    result = _post(ctx, "/augment", payload)
    sidecar = dict(result["config"], input=str(input_path), output=str(output))
    _write_outputs(output, result["dataset_csv"], sidecar)


@main.command()
@_input_arg
@_output_opt
@click.option("-m", "--method", "methods", multiple=True,
              type=click.Choice(["dst-pll", "pl-knn"]), default=("dst-pll", "pl-knn"),
              show_default=True)
@click.option("-k", "--neighbors", "k", type=int, default=10, show_default=True)
@click.option("--alpha", type=float, default=0.5, show_default=True,
              help="Evidence weight on the query frame vs the neighbor overlap.")
@click.option("--folds", type=int, default=5, show_default=True)
@click.option("--beta", "betas", multiple=True, type=float, default=DEFAULT_BETAS,
              show_default=True, help="Trade-off weights reported as extra columns.")
@click.option("--case2-mode", type=click.Choice(["literal", "smallest_focal"]),
              default="literal", show_default=True)
@click.option("--standardize/--no-standardize", default=True, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker threads for fold evaluation.")
@_seed_opt
@_config_opt
@click.pass_context
def benchmark(ctx, input_path, output, methods, k, alpha, folds, betas, case2_mode,
              standardize, jobs, seed, config_path):
    """Cross-validated comparison of the evidence-fusion and majority-vote classifiers."""
    cfg = _merge_config(ctx, config_path, {
        "methods": list(methods),
        "k": k,
        "alpha": alpha,
        "folds": folds,
        "betas": list(betas),
        "case2_mode": case2_mode,
        "standardize": standardize,
        "jobs": jobs,
        "seed": seed,
    })
    cfg["seed"] = _resolve_seed(cfg["seed"])
    payload = dict(cfg, dataset_csv=Path(input_path).read_text(encoding="utf-8"))
    result = _post(ctx, "/benchmark", payload)
    sidecar = dict(result["config"], input=str(input_path), output=str(output))
    _write_outputs(output, result["report_csv"], sidecar)


@main.command()
@_output_opt
@click.option("--classes", "num_classes", type=int, default=3, show_default=True)
@click.option("--true-label", type=int, default=1, show_default=True)
@click.option("--partner-label", type=int, default=2, show_default=True)
@click.option("--p1", type=float, default=0.4, show_default=True)
@click.option("--p2", type=float, default=0.35, show_default=True)
@click.option("--p3", type=float, default=0.25, show_default=True)
@click.option("--k-min", type=int, default=1, show_default=True)
@click.option("--k-max", type=int, default=15, show_default=True)
@click.option("--trials", type=int, default=100_000, show_default=True)
@_seed_opt
@_config_opt
@click.pass_context
def simulate(ctx, output, num_classes, true_label, partner_label, p1, p2, p3,
             k_min, k_max, trials, seed, config_path):
    """Closed-form vs Monte-Carlo expected beliefs under the noise model."""
    cfg = _merge_config(ctx, config_path, {
        "num_classes": num_classes,
        "true_label": true_label,
        "partner_label": partner_label,
        "p1": p1, "p2": p2, "p3": p3,
        "k_min": k_min, "k_max": k_max,
        "trials": trials,
        "seed": seed,
    })
    cfg["seed"] = _resolve_seed(cfg["seed"])
    result = _post(ctx, "/simulate", cfg)
    sidecar = dict(result["config"], output=str(output))
    _write_outputs(output, result["table_csv"], sidecar)


@main.command()
@_input_arg
@_output_opt
@click.option("-k", "--neighbors", "k", type=int, default=10, show_default=True)
@_config_opt
@click.pass_context
def cooccur(ctx, input_path, output, k, config_path):
    """Neighborhood candidate-label co-occurrence counts (heat-map data)."""
    cfg = _merge_config(ctx, config_path, {"k": k})
    payload = dict(cfg, dataset_csv=Path(input_path).read_text(encoding="utf-8"))
    result = _post(ctx, "/cooccur", payload)
    sidecar = dict(result["config"], input=str(input_path), output=str(output))
    _write_outputs(output, result["matrix_csv"], sidecar)


@main.command(name="risk-curve")
@_output_opt
@click.option("--n", "n_grid", multiple=True, type=int, default=DEFAULT_RISK_GRID,
              show_default=True, help="Training sizes to evaluate.")
@click.option("-k", "--neighbors", "k", type=int, default=DEFAULT_RISK_K, show_default=True)
@click.option("--repetitions", type=int, default=DEFAULT_RISK_TRIALS, show_default=True)
@click.option("--queries", type=int, default=DEFAULT_RISK_QUERIES, show_default=True)
@click.option("--classes", "num_classes", type=int, default=DEFAULT_RISK_MODEL_ARGS[0],
              show_default=True)
@click.option("--true-label", type=int, default=DEFAULT_RISK_MODEL_ARGS[1], show_default=True)
@click.option("--partner-label", type=int, default=DEFAULT_RISK_MODEL_ARGS[2], show_default=True)
@click.option("--p1", type=float, default=DEFAULT_RISK_MODEL_ARGS[3], show_default=True)
@click.option("--p2", type=float, default=DEFAULT_RISK_MODEL_ARGS[4], show_default=True)
@click.option("--p3", type=float, default=DEFAULT_RISK_MODEL_ARGS[5], show_default=True)
@_seed_opt
@_config_opt
@click.pass_context
def risk_curve(ctx, output, n_grid, k, repetitions, queries, num_classes, true_label,
               partner_label, p1, p2, p3, seed, config_path):
    """Empirical 0-1 risk for growing training sizes on synthetic clusters."""
    cfg = _merge_config(ctx, config_path, {
        "n_grid": list(n_grid),
        "k": k,
        "repetitions": repetitions,
        "queries": queries,
        "num_classes": num_classes,
        "true_label": true_label,
        "partner_label": partner_label,
        "p1": p1, "p2": p2, "p3": p3,
        "seed": seed,
    })
    cfg["seed"] = _resolve_seed(cfg["seed"])
    result = _post(ctx, "/risk-curve", cfg)
    sidecar = dict(result["config"], output=str(output))
    _write_outputs(output, result["curve_csv"], sidecar)


@main.command()
@click.option("--k-max", type=int, default=12, show_default=True,
              help="Largest neighbor count for the exact inequality sweep.")
@click.pass_context
def selfcheck(ctx, k_max):
    """Exact-arithmetic verification of the combinatorial bounds and engines."""
    result = _post(ctx, "/selfcheck", {"k_max": k_max})
    for line in result["lines"]:
        click.echo(line)
    if not result["ok"]:
        raise SystemExit(3)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
