"""Command-line client for the laboratory service.

The CLI validates arguments, posts one request to the HTTP API (an
in-process ASGI transport by default, or ``--server URL``), and writes the
returned rows as CSV/JSON plus a ``meta.json`` echoing the resolved
configuration.  Identical argv produces byte-identical data files; only
meta.json carries wall-clock information.

Exit codes: 0 success, 1 runtime/output error, 2 usage error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import httpx

from . import SCHEMA_VERSION, __version__
from .export import (
    FIELD_HEADER,
    LANDSCAPE_HEADER,
    SWEEP_HEADER,
    TRACE_HEADER,
    TRAJECTORY_HEADER,
    export_table,
)
from .policy import CORNER_PRESETS

__all__ = ["main", "entrypoint"]

_BETA_RANGE = (0.01, 2.0)


class _UsageError(Exception):
    pass


def _parse_float(flag: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise _UsageError(f"{flag} expects a number, got {text!r}") from None


def _parse_beta(text: str) -> float:
    beta = _parse_float("--beta", text)
    lo, hi = _BETA_RANGE
    if not lo <= beta <= hi:
        raise _UsageError(f"--beta must lie in [{lo}, {hi}], got {beta}")
    return beta


def _parse_grid(flag: str, text: str) -> dict:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"{flag} expects min:max:n, got {text!r}")
    lo = _parse_float(flag, parts[0])
    hi = _parse_float(flag, parts[1])
    try:
        n = int(parts[2])
    except ValueError:
        raise _UsageError(f"{flag} sample count must be an integer, got {parts[2]!r}") from None
    if lo < 1e-8:
        raise _UsageError(f"{flag} minimum must be >= 1e-08, got {lo}")
    if hi <= lo:
        raise _UsageError(f"{flag} maximum must exceed the minimum, got {text!r}")
    if n < 2:
        raise _UsageError(f"{flag} needs at least 2 samples per axis, got {n}")
    return {"lo": lo, "hi": hi, "n": n}


def _parse_pair(flag: str, text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"{flag} expects two comma-separated numbers, got {text!r}")
    a = _parse_float(flag, parts[0])
    b = _parse_float(flag, parts[1])
    if a <= 0 or b <= 0:
        raise _UsageError(f"{flag} components must be positive, got {text!r}")
    return a, b


def _grid_payload(args) -> dict:
    g1 = _parse_grid("--grid", args.grid)
    g2 = _parse_grid("--grid2", args.grid2) if args.grid2 else g1
    return {
        "x1_min": g1["lo"], "x1_max": g1["hi"], "n1": g1["n"],
        "x2_min": g2["lo"], "x2_max": g2["hi"], "n2": g2["n"],
        "spacing": args.spacing,
    }


def _integrator_payload(args) -> dict:
    if args.step <= 0:
        raise _UsageError(f"--step must be positive, got {args.step}")
    if args.max_steps < 1:
        raise _UsageError(f"--max-steps must be >= 1, got {args.max_steps}")
    if args.stop_loss < 0:
        raise _UsageError(f"--stop-loss must be >= 0, got {args.stop_loss}")
    if args.floor < 1e-8:
        raise _UsageError(f"--floor must be >= 1e-08, got {args.floor}")
    if args.record_every < 1:
        raise _UsageError(f"--record-every must be >= 1, got {args.record_every}")
    return {
        "method": args.method,
        "step": args.step,
        "max_steps": args.max_steps,
        "stop_loss": args.stop_loss,
        "floor": args.floor,
        "record_every": args.record_every,
    }


async def _post_async(server: str | None, path: str, payload: dict) -> dict:
    if server:
        client = httpx.AsyncClient(base_url=server, timeout=None)
    else:
        from .service.app import app

        client = httpx.AsyncClient(
            transport=httpx.ASGITransport(app=app), base_url="http://dpolab.internal", timeout=None
        )
    async with client:
        resp = await client.post(path, json=payload)
    if resp.status_code != 200:
        raise RuntimeError(f"service returned {resp.status_code} for {path}: {resp.text}")
    return resp.json()


def _post(server: str | None, path: str, payload: dict) -> dict:
    return asyncio.run(_post_async(server, path, payload))


def _out_dir(args) -> Path:
    if not args.out:
        raise _UsageError("--out DIR is required for this command")
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _data_path(out: Path, stem: str, fmt: str) -> Path:
    return out / f"{stem}.{fmt}"


def _write_meta(out: Path, command: str, parameters: dict, started: float) -> None:
    meta = {
        "command": command,
        "parameters": parameters,
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "elapsed_seconds": time.monotonic() - started,
        "started_at": datetime.now(timezone.utc).isoformat(),
    }
    with (out / "meta.json").open("w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(path: str, mode: str) -> list[dict]:
    """Parse a line-delimited JSON dataset of preference triples."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise _UsageError(f"--dataset {path}: {err}") from None
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise _UsageError(f"--dataset {path}:{lineno}: invalid JSON ({err})") from None
        if not isinstance(obj, dict) or {"prompt", "y_w", "y_l"} - set(obj):
            raise _UsageError(f"--dataset {path}:{lineno}: need keys prompt, y_w, y_l")
        for key in ("y_w", "y_l"):
            y = obj[key]
            if mode == "atomic" and not isinstance(y, int):
                raise _UsageError(f"--dataset {path}:{lineno}: atomic {key} must be an integer id")
            if mode == "autoregressive" and not (
                isinstance(y, list) and all(isinstance(tok, int) for tok in y)
            ):
                raise _UsageError(f"--dataset {path}:{lineno}: autoregressive {key} must be a token list")
        triples.append({"prompt": obj["prompt"], "y_w": obj["y_w"], "y_l": obj["y_l"]})
    if not triples:
        raise _UsageError(f"--dataset {path}: no triples found")
    return triples


# -- command handlers -------------------------------------------------------


def _cmd_landscape(args) -> int:
    started = time.monotonic()
    out = _out_dir(args)
    payload = {"beta": _parse_beta(args.beta), "grid": _grid_payload(args)}
    body = _post(args.server, "/v1/landscape", payload)
    dest = _data_path(out, "landscape", args.format)
    export_table(body["rows"], LANDSCAPE_HEADER, args.format, dest)
    _write_meta(out, "landscape", {**payload, "format": args.format}, started)
    print(f"wrote {dest} ({len(body['rows'])} rows)")
    return 0


def _cmd_field(args) -> int:
    started = time.monotonic()
    out = _out_dir(args)
    payload = {"beta": _parse_beta(args.beta), "grid": _grid_payload(args)}
    if args.low is not None or args.high is not None:
        if args.low is None or args.high is None or not args.low < args.high:
            raise _UsageError("--low and --high must be given together with low < high")
        payload["thresholds"] = {"low": args.low, "high": args.high}
    body = _post(args.server, "/v1/field", payload)
    dest = _data_path(out, "field", args.format)
    export_table(body["rows"], FIELD_HEADER, args.format, dest)
    _write_meta(
        out, "field", {**payload, "thresholds": body["thresholds"], "format": args.format}, started
    )
    print(f"wrote {dest} ({len(body['rows'])} rows)")
    return 0


def _cmd_flow(args) -> int:
    started = time.monotonic()
    out = _out_dir(args)
    x1, x2 = _parse_pair("--init", args.init)
    payload = {
        "beta": _parse_beta(args.beta),
        "x1": x1,
        "x2": x2,
        "integrator": _integrator_payload(args),
    }
    body = _post(args.server, "/v1/flow", payload)
    dest = _data_path(out, "trajectory", args.format)
    export_table(body["rows"], TRAJECTORY_HEADER, args.format, dest)
    _write_meta(
        out,
        "flow",
        {**payload, "termination": body["termination"], "steps_taken": body["steps_taken"], "format": args.format},
        started,
    )
    print(f"wrote {dest} ({len(body['rows'])} rows, {body['termination']})")
    return 0


def _cmd_sweep(args) -> int:
    started = time.monotonic()
    out = _out_dir(args)
    if args.slow_eps < 0:
        raise _UsageError(f"--slow-eps must be >= 0, got {args.slow_eps}")
    payload = {
        "beta": _parse_beta(args.beta),
        "grid": _grid_payload(args),
        "integrator": _integrator_payload(args),
        "slow_eps": args.slow_eps,
    }
    body = _post(args.server, "/v1/sweep", payload)
    dest = _data_path(out, "sweep", args.format)
    export_table(body["rows"], SWEEP_HEADER, args.format, dest)
    _write_meta(out, "sweep", {**payload, "format": args.format}, started)
    print(f"wrote {dest} ({len(body['rows'])} rows)")
    return 0


def _cmd_train(args) -> int:
    started = time.monotonic()
    out = _out_dir(args)
    if args.lr < 0:
        raise _UsageError(f"--lr must be >= 0, got {args.lr}")
    if args.steps < 0:
        raise _UsageError(f"--steps must be >= 0, got {args.steps}")
    if args.k < 2 or args.vocab < 2 or args.length < 1:
        raise _UsageError("--k and --vocab must be >= 2, --length >= 1")
    policy: dict = {
        "mode": args.mode,
        "num_responses": args.k,
        "vocab_size": args.vocab,
        "seq_len": args.length,
    }
    if args.preset and args.targets:
        raise _UsageError("give --preset or --targets, not both")
    if args.preset:
        if args.mode != "atomic":
            raise _UsageError("--preset applies to atomic mode only")
        if args.preset not in CORNER_PRESETS:
            raise _UsageError(f"--preset must be one of {sorted(CORNER_PRESETS)}, got {args.preset!r}")
        policy["preset"] = args.preset
    if args.targets:
        if args.mode != "atomic":
            raise _UsageError("--targets applies to atomic mode only")
        policy["targets"] = list(_parse_pair("--targets", args.targets))
    payload: dict = {
        "beta": _parse_beta(args.beta),
        "lr": args.lr,
        "steps": args.steps,
        "policy": policy,
    }
    if args.dataset:
        if args.preset or args.targets:
            raise _UsageError("--dataset cannot be combined with --preset/--targets")
        payload["dataset"] = _load_dataset(args.dataset, args.mode)
    body = _post(args.server, "/v1/train", payload)
    dest = _data_path(out, "trace", args.format)
    export_table(body["rows"], TRACE_HEADER, args.format, dest)
    with (out / "rate_report.json").open("w") as fh:
        json.dump(body["rate_report"], fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_meta(out, "train", {**payload, "format": args.format}, started)
    print(f"wrote {dest} ({len(body['rows'])} rows) and rate_report.json")
    return 0


def _cmd_check_grad(args) -> int:
    started = time.monotonic()
    if args.samples < 1:
        raise _UsageError(f"--samples must be >= 1, got {args.samples}")
    if args.h <= 0:
        raise _UsageError(f"--h must be positive, got {args.h}")
    if args.tol <= 0:
        raise _UsageError(f"--tol must be positive, got {args.tol}")
    payload = {
        "beta": _parse_beta(args.beta),
        "samples": args.samples,
        "seed": args.seed,
        "h": args.h,
        "tol": args.tol,
    }
    body = _post(args.server, "/v1/check-grad", payload)
    print(
        "max relative gradient error {err:.6e} at (x1={x1:.6g}, x2={x2:.6g}) "
        "[samples={n} beta={b} h={h:g} seed={s}]".format(
            err=body["max_rel_err"],
            x1=body["worst_x1"],
            x2=body["worst_x2"],
            n=body["samples"],
            b=body["beta"],
            h=body["h"],
            s=body["seed"],
        )
    )
    verdict = "PASS" if body["passed"] else "FAIL"
    print(f"{verdict}: max error {'<' if body['passed'] else '>='} {args.tol:g}")
    if args.out:
        out = _out_dir(args)
        with (out / "check_grad.json").open("w") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_meta(out, "check-grad", payload, started)
    return 0 if body["passed"] else 1


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# -- parser -----------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, out_required: bool = True) -> None:
    sub.add_argument("--beta", default="0.1", help="margin temperature in [0.01, 2] (default 0.1)")
    sub.add_argument("--out", default=None, required=False, help="output directory" + ("" if out_required else " (optional)"))
    sub.add_argument("--format", choices=("csv", "json"), default="csv", help="data file format")
    sub.add_argument("--server", default=None, help="remote service URL (default: run in-process)")


def _add_grid(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--grid", default="0.01:2:50", help="x1 axis as min:max:n (default 0.01:2:50)")
    sub.add_argument("--grid2", default=None, help="x2 axis as min:max:n (default: same as --grid)")
    sub.add_argument("--spacing", choices=("linear", "log"), default="linear", help="axis spacing")


def _add_integrator(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--method", choices=("euler", "rk4"), default="rk4")
    sub.add_argument("--step", type=float, default=1e-3, help="integrator step (default 1e-3)")
    sub.add_argument("--max-steps", type=int, default=1_000_000, dest="max_steps")
    sub.add_argument("--stop-loss", type=float, default=1e-4, dest="stop_loss")
    sub.add_argument("--floor", type=float, default=1e-8, help="x2 clamp (default 1e-8)")
    sub.add_argument("--record-every", type=int, default=1, dest="record_every")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpolab",
        description="Loss landscape, gradient field, gradient flow and tabular-policy training for DPO in ratio coordinates.",
    )
    parser.add_argument("--version", action="version", version=f"dpolab {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("landscape", help="sample the loss over a grid")
    _add_common(sub)
    _add_grid(sub)
    sub.set_defaults(handler=_cmd_landscape)

    sub = commands.add_parser("field", help="sample the gradient field over a grid")
    _add_common(sub)
    _add_grid(sub)
    sub.add_argument("--low", type=float, default=None, help="region threshold: low cut")
    sub.add_argument("--high", type=float, default=None, help="region threshold: high cut")
    sub.set_defaults(handler=_cmd_field)

    sub = commands.add_parser("flow", help="integrate the gradient flow from one point")
    _add_common(sub)
    sub.add_argument("--init", default="1,1", help="initial point as x1,x2 (default 1,1)")
    _add_integrator(sub)
    sub.set_defaults(handler=_cmd_flow)

    sub = commands.add_parser("sweep", help="integrate from every node of a grid")
    _add_common(sub)
    _add_grid(sub)
    _add_integrator(sub)
    sub.add_argument("--slow-eps", type=float, default=0.05, dest="slow_eps",
                     help="gradient-norm threshold for slow-time accounting")
    sub.set_defaults(handler=_cmd_sweep)

    sub = commands.add_parser("train", help="train a tabular policy with the preference loss")
    _add_common(sub)
    sub.add_argument("--mode", choices=("atomic", "autoregressive"), default="atomic")
    sub.add_argument("--preset", default=None, help=f"named start: {', '.join(sorted(CORNER_PRESETS))}")
    sub.add_argument("--targets", default=None, help="start ratios as x1,x2 (atomic mode)")
    sub.add_argument("--k", type=int, default=4, help="atomic responses per prompt (default 4)")
    sub.add_argument("--vocab", type=int, default=4, help="autoregressive vocabulary size")
    sub.add_argument("--length", type=int, default=4, help="autoregressive sequence length")
    sub.add_argument("--dataset", default=None, help="JSONL file of preference triples")
    sub.add_argument("--lr", type=float, default=0.1)
    sub.add_argument("--steps", type=int, default=200)
    sub.set_defaults(handler=_cmd_train)

    sub = commands.add_parser("check-grad", help="verify analytic gradients against finite differences")
    _add_common(sub, out_required=False)
    sub.add_argument("--samples", type=int, default=1000)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--h", type=float, default=1e-6, help="central-difference step")
    sub.add_argument("--tol", type=float, default=1e-6, help="pass/fail threshold")
    sub.set_defaults(handler=_cmd_check_grad)

    sub = commands.add_parser("serve", help="run the HTTP service")
    sub.add_argument("--host", default="127.0.0.1")
    sub.add_argument("--port", type=int, default=8000)
    sub.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"output error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failures, incl. service errors
        print(f"error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
