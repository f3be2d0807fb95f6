"""Command-line front end: run experiments, list checks, export artifacts."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError
from .harness import export_run, list_checks, load_config, run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slipchannel",
        description="Slip-wall channel flow verification harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and all checks")
    p_run.add_argument("config", help="INI experiment file")
    p_run.add_argument("--outdir", default=None,
                       help="override the output directory "
                            "(also via SLIPCHANNEL_OUTDIR)")

    sub.add_parser("list-checks", help="print the check registry")

    p_exp = sub.add_parser("export", help="re-materialize VTK from a run directory")
    p_exp.add_argument("run_dir")
    p_exp.add_argument("--dest", default=None)

    args = parser.parse_args(argv)

    threads = os.environ.get("SLIPCHANNEL_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    if args.command == "list-checks":
        for cid, name, anchor in list_checks():
            print(f"{cid:02d}  {name:<26s} {anchor}")
        return 0

    if args.command == "export":
        written = export_run(args.run_dir, args.dest)
        for path in written:
            print(path)
        return 0

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.outdir:
        cfg.outdir = args.outdir
    report = run(cfg)
    print(report.text(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
