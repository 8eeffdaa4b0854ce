"""Batch driver: scene files in, JSON reports on stdout, summary on stderr.

Exit codes: 0 all checks pass, 1 some check failed, 2 malformed input,
3 geometric precondition failure. Reports are deterministic for a fixed
seed and scene, except for the timings block.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .curvature import DEFAULT_ANGLE_SAMPLES
from .errors import GeometryError, InputError
from .handlers import (
    Report,
    handle_approx,
    handle_crofton,
    handle_curvature,
    handle_detlemma,
    handle_gauss_bonnet,
    handle_index,
)
from .scene import read_json

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_GEOMETRY = 3


def _parse_window(text: Optional[str]):
    if text is None:
        return None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"window is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise InputError("window must be a JSON list of halfspaces")
    return data


def _parse_floats(text: str) -> tuple:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise InputError(f"cannot parse float list {text!r}") from exc
    if not values:
        raise InputError("expected a nonempty comma-separated float list")
    return values


def _parse_components(text: str) -> list:
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise InputError("expected a nonempty comma-separated rational list")
    return parts


def _cmd_curvature(args) -> Report:
    return handle_curvature(
        read_json(args.scene),
        window=_parse_window(args.window),
        seed=args.seed,
        samples=args.samples,
    )


def _cmd_gauss_bonnet(args) -> Report:
    return handle_gauss_bonnet(
        read_json(args.scene),
        samples=args.samples,
        seed=args.seed,
        window=_parse_window(args.window),
    )


def _cmd_crofton(args) -> Report:
    return handle_crofton(
        read_json(args.scene), args.k, args.m, samples=args.samples, seed=args.seed
    )


def _cmd_detlemma(args) -> Report:
    return handle_detlemma(
        args.dim, trials=args.trials, seed=args.seed, exact=args.exact
    )


def _cmd_approx(args) -> Report:
    ladder = _parse_floats(args.eps_ladder) if args.eps_ladder else None
    return handle_approx(read_json(args.scene), eps_ladder=ladder, grid=args.grid)


def _cmd_index(args) -> Report:
    return handle_index(
        read_json(args.scene),
        _parse_components(args.point),
        _parse_components(args.normal),
    )


def _cmd_serve(args) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvkit",
        description="Curvature, index, and integral-geometry checks on polytope scenes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scene(p):
        p.add_argument("scene", help="path to a scene JSON file")

    def add_seed(p):
        p.add_argument("--seed", type=int, default=0, help="64-bit master seed")

    p = sub.add_parser("curvature", help="curvature totals and the Gauss-Bonnet check")
    add_scene(p)
    add_seed(p)
    p.add_argument("--window", help="inline JSON list of halfspaces to localize in")
    p.add_argument(
        "--samples",
        type=int,
        default=DEFAULT_ANGLE_SAMPLES,
        help="Monte Carlo samples per inexact external angle",
    )
    p.set_defaults(run=_cmd_curvature)

    p = sub.add_parser("gauss-bonnet", help="sampled halfspace slice identity")
    add_scene(p)
    add_seed(p)
    p.add_argument("--samples", type=int, default=100, help="random halfspaces to test")
    p.add_argument("--window", help="inline JSON list of extra halfspaces to test")
    p.set_defaults(run=_cmd_gauss_bonnet)

    p = sub.add_parser("crofton", help="flat-integral estimate of a curvature total")
    add_scene(p)
    add_seed(p)
    p.add_argument("--k", type=int, required=True, help="curvature degree on slices")
    p.add_argument("--m", type=int, required=True, help="flat dimension")
    p.add_argument("--samples", type=int, default=10_000)
    p.set_defaults(run=_cmd_crofton)

    p = sub.add_parser("detlemma", help="determinant polarization identity sweep")
    add_seed(p)
    p.add_argument("--dim", type=int, required=True, help="matrix order")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--exact", action="store_true", help="rational entries, exact equality")
    p.set_defaults(run=_cmd_detlemma)

    p = sub.add_parser("approx", help="mollified minor ladder for a scene d.c. function")
    add_scene(p)
    p.add_argument("--eps-ladder", help="comma-separated mollifier widths")
    p.add_argument("--grid", type=int, help="quadrature cells along the widest axis")
    p.set_defaults(run=_cmd_approx)

    p = sub.add_parser("index", help="normal-cycle index at one query")
    add_scene(p)
    p.add_argument("--point", required=True, help="comma-separated rational coordinates")
    p.add_argument("--normal", required=True, help="comma-separated rational direction")
    p.set_defaults(run=_cmd_index)

    p = sub.add_parser("serve", help="run the HTTP facade")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(run=_cmd_serve)

    return parser


def _summary(report: Report) -> str:
    ok = sum(1 for c in report.checks if c.passed)
    status = "PASS" if report.passed else "FAIL"
    lines = [f"{report.command}: {status} ({ok}/{len(report.checks)} checks)"]
    for c in report.checks:
        mark = "pass" if c.passed else "FAIL"
        lines.append(
            f"  [{mark}] {c.name}: computed {c.to_dict()['computed']}"
            f" reference {c.to_dict()['reference']}"
        )
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.run(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    if report is None:
        return EXIT_PASS
    print(json.dumps(report.to_dict(), sort_keys=True))
    print(_summary(report), file=sys.stderr)
    return EXIT_PASS if report.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
