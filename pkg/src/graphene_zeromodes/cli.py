"""Command-line front end.

    zeromode {gauge,modes,spectrum,sweep} --config PATH [--out DIR] [--dense] [--seed N] [--quiet]
    zeromode report --config PATH [--out DIR]

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .errors import ConfigError
from .pipeline import StageError, exit_code, output_dir, run_pipeline

RUN_COMMANDS = ("gauge", "modes", "spectrum", "sweep")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zeromode", description="Dirac zero modes in graphene under magnetic fields.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "gauge": "solve for lambda, build A and check curl A = B",
        "modes": "gauge stages plus analytic zero modes and flux counting",
        "spectrum": "through the tight-binding spectrum and chiral index",
        "sweep": "everything, including the robustness sweep",
        "report": "pretty-print report.json from an output directory",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="scenario file")
        s.add_argument("--out", help="output directory (default: config, then $ZEROMODE_OUT)")
        s.add_argument("--quiet", action="store_true", help="print nothing on success")
        if name in RUN_COMMANDS:
            s.add_argument("--dense", action="store_true", help="force dense diagonalization")
            s.add_argument("--seed", type=int, help="override profile and sweep seeds")
    return p


def format_report(d: dict) -> str:
    lines = [f"report format {d.get('format')}  version {d.get('version')}"]
    if d.get("failed_stage"):
        lines.append(f"FAILED in stage {d['failed_stage']}: {d.get('error')}")
    for v in d.get("verdicts", []):
        mark = "pass" if v["passed"] else "FAIL"
        lines.append(f"  [{mark}] {v['stage']:>8} {v['name']:<28} value={v['value']!r} tol={v['tolerance']!r}")
    st = d.get("stages", {})
    if "spectrum" in st:
        s = st["spectrum"]
        lines.append(f"  chiral index {s.get('chiral_index')}  window count {s.get('window_count')}  sites {s.get('sites')}")
    lines.append("overall: " + ("pass" if d.get("passed") else "FAIL"))
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "report":
        path = output_dir(cfg, args.out) / "report.json"
        try:
            with open(path, encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read {path}: {exc}", file=sys.stderr)
            return 2
        if not args.quiet:
            print(format_report(d))
        return 0 if d.get("passed") else 1
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    try:
        rep = run_pipeline(cfg, out_dir=args.out, until=args.command, dense=True if args.dense else None)
    except (StageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(None, exc)
    if not args.quiet:
        print(format_report(rep.to_dict()))
    return exit_code(rep)


if __name__ == "__main__":
    sys.exit(main())
