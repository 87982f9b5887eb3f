"""Command-line front end.

Subcommands: ``mesh`` (generate a grid and report its quality),
``coarsen`` (generate and agglomerate), ``solve`` (full pipeline),
``report`` (full pipeline, report file only) and ``preset <name>``.
Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import sys

from .config import load_preset, parse_config
from .errors import ConfigError, GeometryError, ParseError, PolydarcyError
from .pipeline import run_pipeline


def _add_common(sub):
    sub.add_argument("--config", required=False, help="YAML configuration")
    sub.add_argument("--output-dir", default=".", help="output directory")
    sub.add_argument("--threads", type=int, default=1,
                     help="reserved; runs are single-threaded")
    sub.add_argument("--strict", action="store_true",
                     help="reject unknown configuration keys")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polydarcy",
        description="Darcy flow on fractured polygonal grids")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("mesh", "generate a grid and its quality report"),
                        ("coarsen", "generate and agglomerate a grid"),
                        ("solve", "run the full pipeline"),
                        ("report", "run and emit only the report")):
        sub = subs.add_parser(name, help=help_)
        _add_common(sub)
    pre = subs.add_parser("preset", help="run a packaged preset")
    pre.add_argument("name", help="preset name")
    _add_common(pre)
    return parser


def _restrict_outputs(cfg_tree, keys):
    out = dict(cfg_tree.get("outputs") or {})
    cfg_tree["outputs"] = {k: v for k, v in out.items() if k in keys}
    return cfg_tree


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            cfg = load_preset(args.name, strict=args.strict)
        else:
            if not args.config:
                raise ConfigError(f"{args.command} requires --config")
            cfg = parse_config(args.config, strict=args.strict)
        tree = dict(cfg.raw)
        if args.command == "mesh":
            tree.pop("coarsen", None)
            tree["solver"] = {"runs": 0, "condest": False}
            tree = _restrict_outputs(tree, ("report", "vtk"))
            cfg = parse_config(tree, strict=False)
        elif args.command == "coarsen":
            tree["solver"] = {"runs": 0, "condest": False}
            tree = _restrict_outputs(tree, ("report", "vtk"))
            cfg = parse_config(tree, strict=False)
        elif args.command == "report":
            tree = _restrict_outputs(tree, ("report",))
            cfg = parse_config(tree, strict=False)
        report = run_pipeline(cfg, args.output_dir)
    except (ConfigError, ParseError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PolydarcyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for key in sorted(report):
        print(f"{key} = {report[key]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
