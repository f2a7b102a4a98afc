"""Command line: ``contact-blender verify <suite>|all [options]``.

Exit status: 0 all checks pass, 1 some check fails, 2 some check is
inconclusive and none fails, 64 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config, suites
from .errors import ConfigError

EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _r_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty r list")
    return tuple(vals)


def build_parser():
    p = _Parser(prog="contact-blender", description="Numerical checks of the contact blender model.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suite", choices=list(config.SUITES) + ["all"])
    v.add_argument("--config", type=Path, help="TOML or JSON run configuration")
    v.add_argument("--r", type=_r_list, help="comma-separated r values, e.g. 0.1,0.05")
    v.add_argument("--seed", type=int)
    v.add_argument("--out", type=Path, help="directory for report files")
    v.add_argument("--json", action="store_true", help="write report.json (and a timing sidecar)")
    v.add_argument("--csv", action="store_true", help="write sweep.csv (blender suite)")
    sub.add_parser("checks", help="list registered checks")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "checks":
        for chk in suites.REGISTRY:
            print(f"{chk.name}\t{chk.anchor}")
        return 0
    try:
        cfg = config.load(args.config) if args.config else config.validate(config.RunConfig())
        cfg = cfg.with_overrides(r_values=args.r, seed=args.seed,
                                 out=str(args.out) if args.out else None)
    except ConfigError as exc:
        print(f"contact-blender: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    names = suites.expand_suites([args.suite])
    timings = {}
    rep = suites.run(cfg, names, timings)
    for line in rep.summary_lines():
        print(line)
    out = Path(cfg.out)
    if args.json or args.csv:
        out.mkdir(parents=True, exist_ok=True)
    if args.json:
        (out / "report.json").write_text(rep.to_json())
        (out / "report.timing.json").write_text(json.dumps(timings, sort_keys=True, indent=2) + "\n")
    if args.csv:
        (out / "sweep.csv").write_text(rep.to_csv())
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
