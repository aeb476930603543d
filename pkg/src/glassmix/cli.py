"""Thin command-line client for the glassmix service.

The CLI validates its merged configuration, posts it to the service, and
writes whatever artifacts come back.  Without --server the request runs
against the in-process ASGI app (no network, bit-identical to a remote
call); with --server URL it targets a running `glassmix serve` instance.

Exit codes: 0 success, 2 config error, 3 capacity, 4 numeric gate,
5 empty result.  GLASSMIX_OUT overrides --out.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from . import __version__
from .persist import RunManifest, config_hash
from .schemas import (
    CertifyConfig,
    LandscapeConfig,
    SimulateConfig,
    SpectrumConfig,
    TheoryConfig,
)

_COMMANDS = {
    "simulate": SimulateConfig,
    "spectrum": SpectrumConfig,
    "certify": CertifyConfig,
    "landscape": LandscapeConfig,
    "theory": TheoryConfig,
}

# the flag --seed overrides this field of each command's config
_SEED_FIELD = {
    "simulate": "master_seed",
    "spectrum": "seed",
    "certify": "seed",
    "landscape": "seed",
    "theory": None,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glassmix",
        description="Desk-scale laboratory for single-flip dynamics on "
                    "Gaussian spin-glass energy landscapes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", type=Path, help="JSON config file")
        cmd.add_argument("--seed", type=int, help="master seed override")
        cmd.add_argument("--threads", type=int, help="worker pool size")
        cmd.add_argument("--out", type=Path, default=Path("out"),
                         help="output directory (GLASSMIX_OUT overrides)")
        cmd.add_argument("--server", type=str, default=None,
                         help="remote service URL; default runs in-process")
    serve = sub.add_parser("serve", help="expose the service over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    merged: dict = {}
    if args.config is not None:
        try:
            merged.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(_fail(2, f"cannot read config: {exc}"))
    if args.seed is not None:
        field = _SEED_FIELD[args.command]
        if field is not None:
            merged[field] = args.seed
    if args.threads is not None:
        merged["threads"] = args.threads
    return merged


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    import asyncio

    from .service import app

    async def _go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, timeout=None,
                                     base_url="http://glassmix.local") as client:
            return await client.post(path, json=payload)

    return asyncio.run(_go())


def _run_command(args: argparse.Namespace) -> int:
    model = _COMMANDS[args.command]
    raw = _merge_config(args)
    try:
        cfg = model.model_validate(raw)
    except ValidationError as exc:
        return _fail(2, f"invalid configuration: {exc}")

    out_dir = Path(os.environ.get("GLASSMIX_OUT", str(args.out)))
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = cfg.model_dump()
    seed_field = _SEED_FIELD[args.command]
    manifest = RunManifest(
        command=args.command,
        config_hash=config_hash(payload),
        master_seed=payload.get(seed_field, 0) if seed_field else 0,
    )
    manifest_path = out_dir / "manifest.json"
    manifest.write(manifest_path)

    try:
        resp = _post(args.server, f"/v1/{args.command}", payload)
    except httpx.HTTPError as exc:
        return _fail(1, f"service unreachable: {exc}")
    if resp.status_code != 200:
        try:
            body = resp.json()
            code = int(body.get("exit_code", 1))
            message = body.get("error", resp.text)
        except (ValueError, KeyError):
            code, message = 1, resp.text
        return _fail(code, message)

    body = resp.json()
    written = []
    for artifact in body["artifacts"]:
        path = out_dir / artifact["name"]
        path.write_text(artifact["content"])
        written.append(str(path))
    manifest.status = "complete"
    manifest.output_paths = written
    manifest.write(manifest_path)
    for path in written:
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0
    return _run_command(args)


if __name__ == "__main__":
    sys.exit(main())
