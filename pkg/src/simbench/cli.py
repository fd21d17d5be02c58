"""Thin command-line client for the measurement service.

Every verb is a request to the HTTP service. By default the service runs
in-process (no socket), so the CLI works standalone; pass ``--server URL``
to talk to a deployed instance instead, in which case all paths are
interpreted on the server. ``simbench serve`` starts a standalone server.

Exit codes: 0 success, 1 validation error, 2 compute failure.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

EXIT_VALIDATION = 1
EXIT_COMPUTE = 2


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient  # in-process ASGI transport

    from .service import create_app

    return TestClient(create_app(), base_url="http://simbench.local")


def _post(ctx: click.Context, path: str, payload: dict) -> dict:
    with _client(ctx.obj["server"]) as client:
        response = client.post(path, json={k: v for k, v in payload.items() if v is not None})
    try:
        body = response.json()
    except json.JSONDecodeError:
        click.echo(f"error: malformed response ({response.status_code})", err=True)
        sys.exit(EXIT_COMPUTE)
    if response.status_code >= 400:
        detail = body.get("error") or body.get("detail")
        click.echo(f"error: {detail}", err=True)
        if response.status_code < 500 or body.get("kind") == "validation":
            sys.exit(EXIT_VALIDATION)
        sys.exit(EXIT_COMPUTE)
    click.echo(json.dumps(body, indent=2, sort_keys=True))
    return body


@click.group()
@click.option("--server", default=None, help="Base URL of a running simbench service (default: in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("path")
@click.option("--kind", type=click.Choice(["reference_corpus", "task_dataset"]), required=True)
@click.option("--store-dir", required=True, help="Directory of the dataset store.")
@click.option("--name", default=None, help="Dataset name (default: file stem).")
@click.pass_context
def ingest(ctx, path, kind, store_dir, name):
    """Validate and persist a document or task file."""
    _post(ctx, "/ingest", {"path": path, "kind": kind, "store_dir": store_dir, "name": name})


@main.command("embed-index")
@click.argument("embeddings_path")
@click.option("--out-dir", required=True)
@click.option("--shard-size", default=50_000, show_default=True)
@click.pass_context
def embed_index(ctx, embeddings_path, out_dir, shard_size):
    """Build a sharded exact-scan index from an embedding file."""
    _post(ctx, "/embed-index", {"embeddings_path": embeddings_path, "out_dir": out_dir, "shard_size": shard_size})


@main.command()
@click.option("--source", "source_path", required=True, help="Source-language task file.")
@click.option("--target", "target_path", required=True, help="Parallel translated task file.")
@click.option("--out-dir", required=True)
@click.option("--language", required=True)
@click.option("--fractions", default=None, help="Comma-separated fractions, e.g. 0,0.25,0.5,0.75,1")
@click.option("--boundary-unit", type=click.Choice(["whitespace_token", "character"]), default="whitespace_token", show_default=True)
@click.option("--splice-targets", is_flag=True, help="Use the translated file's target strings.")
@click.pass_context
def titrate(ctx, source_path, target_path, out_dir, language, fractions, boundary_unit, splice_targets):
    """Build a similarity-graded series from two parallel task files."""
    payload = {
        "source_path": source_path,
        "target_path": target_path,
        "out_dir": out_dir,
        "language": language,
        "boundary_unit": boundary_unit,
        "splice_targets": splice_targets,
    }
    if fractions:
        payload["fractions"] = [float(f) for f in fractions.split(",")]
    _post(ctx, "/titrate", payload)


def _run_payload(config, out_dir):
    return {"config_path": config, "out_dir": out_dir}


@main.command("run-all")
@click.option("--config", required=True, help="Path to a run config JSON file.")
@click.option("--out-dir", required=True)
@click.pass_context
def run_all_cmd(ctx, config, out_dir):
    """Full pipeline: ingest, index, measure, evaluate, correlate, figures."""
    _post(ctx, "/run-all", _run_payload(config, out_dir))


@main.command()
@click.option("--config", default=None, help="Config file (optional if the run directory exists).")
@click.option("--out-dir", required=True)
@click.pass_context
def measure(ctx, config, out_dir):
    """Compute similarity reports (ingests and indexes as needed)."""
    _post(ctx, "/measure", _run_payload(config, out_dir))


@main.command()
@click.option("--config", default=None, help="Config file (optional if the run directory exists).")
@click.option("--out-dir", required=True)
@click.pass_context
def evaluate(ctx, config, out_dir):
    """Score task results from model score files."""
    _post(ctx, "/evaluate", _run_payload(config, out_dir))


@main.command()
@click.option("--out-dir", required=True)
@click.pass_context
def correlate(ctx, out_dir):
    """Build correlation tables from an existing run directory."""
    _post(ctx, "/correlate", {"out_dir": out_dir})


@main.command()
@click.option("--out-dir", required=True)
@click.pass_context
def figures(ctx, out_dir):
    """Emit plot-ready figure data from an existing run directory."""
    _post(ctx, "/figures", {"out_dir": out_dir})


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8010, show_default=True)
def serve(host, port):
    """Run the measurement service as a standalone HTTP server."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
