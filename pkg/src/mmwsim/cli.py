"""Command-line client.

The CLI never touches the simulator directly: it builds a request,
POSTs it to the service (an in-process ASGI app by default, or a remote
server via --server) and prints the response.  Exit codes: 0 success,
2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=3600.0)
    # no server given: talk to the ASGI app in process.  TestClient is the
    # synchronous ASGI client httpx/starlette ship; despite the name it is
    # a regular httpx.Client wired straight into the app.
    from starlette.testclient import TestClient

    from .service import app
    return TestClient(app, raise_server_exceptions=False)


def _read_config(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        print(f"error: cannot read config {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _post(client: httpx.Client, route: str, payload: dict) -> dict:
    try:
        resp = client.post(route, json=payload)
    except httpx.HTTPError as exc:
        print(f"error: request failed: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    if resp.status_code == 200:
        return resp.json()
    try:
        detail = resp.json().get("detail", {})
    except ValueError:
        detail = {}
    kind = detail.get("kind", "config" if resp.status_code in (400, 422) else "io")
    message = detail.get("message", resp.text)
    print(f"error ({kind}): {message}", file=sys.stderr)
    raise SystemExit(EXIT_CONFIG if kind == "config" else EXIT_IO)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwsim", description="FMCW roadside radar simulator")
    parser.add_argument("--server", default=None,
                        help="remote service URL (default: run in process)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate and process one frame")
    run.add_argument("--config", required=True, help="TOML run configuration")
    run.add_argument("--seed", type=int, default=None, help="override config seed")
    run.add_argument("--out", required=True, help="artifact output directory")

    sweep = sub.add_parser("sweep", help="sweep a chirp parameter")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--param", default="samples_per_chirp")
    sweep.add_argument("--values", default="256,384,512",
                       help="comma-separated parameter values")

    ds = sub.add_parser("dataset", help="generate a labeled RDM image dataset")
    ds.add_argument("--config", default=None, help="base TOML configuration")
    ds.add_argument("--seed", type=int, default=None)
    ds.add_argument("--out", required=True)
    ds.add_argument("--classes", default=None, help="comma-separated class names")
    ds.add_argument("--runs-per-class", type=int, default=20)
    ds.add_argument("--image-size", type=int, default=451)
    ds.add_argument("--workers", type=int, default=1)

    rcs = sub.add_parser("rcs", help="RCS versus azimuth for a vehicle mesh")
    rcs.add_argument("--config", default=None,
                     help="TOML with an [rcs_sweep] table (optional)")
    rcs.add_argument("--seed", type=int, default=None)
    rcs.add_argument("--out", default=None, help="directory for rcs.csv")
    rcs.add_argument("--mesh", default="car")
    rcs.add_argument("--azimuth", default="-30:30:61",
                     help="start:stop:steps in degrees")
    rcs.add_argument("--elevation", type=float, default=-5.0)
    rcs.add_argument("--bandwidth", type=float, default=0.625e9)
    rcs.add_argument("--max-bounce", type=int, default=3)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    with _client(args.server) as client:
        if args.command == "run":
            payload = {"config_toml": _read_config(args.config),
                       "seed": args.seed, "out_dir": args.out}
            data = _post(client, "/run", payload)
            print(json.dumps(data["summary"], indent=2, sort_keys=True))
        elif args.command == "sweep":
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError:
                print(f"error: bad --values {args.values!r}", file=sys.stderr)
                return EXIT_CONFIG
            payload = {"config_toml": _read_config(args.config),
                       "seed": args.seed, "out_dir": args.out,
                       "parameter": args.param, "values": values}
            data = _post(client, "/sweep", payload)
            print(json.dumps(data["table"], indent=2))
        elif args.command == "dataset":
            payload = {"seed": args.seed, "out_dir": args.out,
                       "runs_per_class": args.runs_per_class,
                       "image_size": args.image_size, "workers": args.workers}
            if args.config:
                payload["config_toml"] = _read_config(args.config)
            if args.classes:
                payload["classes"] = [c.strip() for c in args.classes.split(",")]
            data = _post(client, "/dataset", payload)
            n = len(data["manifest"]["entries"])
            print(f"wrote {n} images under {args.out} (manifest.json)")
        elif args.command == "rcs":
            try:
                start, stop, steps = args.azimuth.split(":")
                payload = {"mesh": args.mesh,
                           "azimuth_start_deg": float(start),
                           "azimuth_stop_deg": float(stop),
                           "azimuth_steps": int(steps),
                           "elevation_deg": args.elevation,
                           "bandwidth": args.bandwidth,
                           "max_bounce": args.max_bounce,
                           "out_dir": args.out}
            except ValueError:
                print(f"error: bad --azimuth {args.azimuth!r}", file=sys.stderr)
                return EXIT_CONFIG
            if args.seed is not None:
                payload["seed"] = args.seed
            data = _post(client, "/rcs", payload)
            for row in data["table"]["rows"]:
                print(f"{row['azimuth_deg']:8.2f} deg  {row['rcs_dbsm']:8.2f} dBsm"
                      f"  ({row['num_centers']} centers)")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
