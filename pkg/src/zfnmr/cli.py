"""Command line client.

Thin wrapper around the HTTP service: every experiment subcommand loads
a JSON config, sends it through the service app in process, writes the
returned artifact files, and prints the summary. ``serve`` runs the same
app over the network. Exit codes: 0 success, 2 config problem, 3 the
requested fit or reconstruction did not converge.
"""

from __future__ import annotations

import argparse
import asyncio
import datetime
import json
import os
import pathlib
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3

SEED_ENV = "ZFNMR_SEED"
EXPERIMENTS = ("fid", "scan", "rb", "tomo", "cnot")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zfnmr",
        description="Simulator for two-spin zero-field control experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "fid": "free decay and spectrum of a prepared state",
        "scan": "J-line amplitude versus DC pulse amplitude",
        "rb": "randomized benchmarking of the single-spin Cliffords",
        "tomo": "state tomography via two-spin mapping gates",
        "cnot": "gate reconstruction from tomography pairs",
    }
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (overrides config and ${SEED_ENV})")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for ensemble-heavy runs")
        sp.add_argument("--out", default=".", help="output directory")
    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    return parser


class SystemExit2(Exception):
    """Config-level failure; becomes exit code 2."""


def _load_config(path: str, subcommand: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SystemExit2(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit2(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise SystemExit2("config must be a JSON object")
    declared = doc.get("subcommand")
    if declared is not None and declared != subcommand:
        raise SystemExit2(
            f"config declares subcommand {declared!r}, invoked as {subcommand!r}")
    doc["subcommand"] = subcommand
    return doc


def _resolve_seed(flag: int | None, doc: dict) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit2(f"${SEED_ENV} is not an integer: {env!r}")
    cfg_seed = doc.get("seed")
    if cfg_seed is not None:
        if not isinstance(cfg_seed, int) or isinstance(cfg_seed, bool):
            raise SystemExit2(f"config seed must be an integer, got {cfg_seed!r}")
        return cfg_seed
    return 0


async def _post_run(request_doc: dict) -> httpx.Response:
    from .service import app
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport,
                                 base_url="http://zfnmr.internal",
                                 timeout=None) as client:
        return await client.post("/run", json=request_doc)


def _write_outputs(out_dir: str, payload: dict, subcommand: str, seed: int) -> None:
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(payload["files"]):
        (out / name).write_text(payload["files"][name], encoding="utf-8")
    # wall-clock state lives only in this sidecar, never in the artifacts
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    names = ",".join(sorted(payload["files"]))
    with (out / "zfnmr.log").open("a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {subcommand} seed={seed} files={names}\n")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "serve":
        import uvicorn

        from .service import app
        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    try:
        doc = _load_config(args.config, args.subcommand)
        seed = _resolve_seed(args.seed, doc)
        if args.threads < 1:
            raise SystemExit2("--threads must be at least 1")
    except SystemExit2 as exc:
        print(f"zfnmr: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    request = {"config": doc, "seed": seed, "threads": args.threads}
    response = asyncio.run(_post_run(request))
    if response.status_code == 422:
        print(f"zfnmr: invalid config: {response.text}", file=sys.stderr)
        return EXIT_CONFIG
    if response.status_code != 200:
        print(f"zfnmr: service error {response.status_code}: {response.text}",
              file=sys.stderr)
        return 1
    payload = response.json()
    _write_outputs(args.out, payload, args.subcommand, seed)
    summary = {k: v for k, v in payload.items() if k != "files"}
    print(json.dumps(summary, indent=2, sort_keys=True))
    if payload.get("converged") is False:
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
