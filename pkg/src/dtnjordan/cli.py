"""Command-line interface: ``dtnjordan run|sweep|spectrum|check``.

A config argument is a path to a JSON file or the name of a bundled config
(``neumann_1d``, ``defective_1d``, ...). The thread pool used for grid
sweeps is sized by the ``DTNJORDAN_NUM_THREADS`` environment variable.

Exit status: 0 when every enabled check passes, 1 when a check fails,
2 for configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import DtnJordanError
from .harness import (CHECK_NAMES, DEFAULT_TOLERANCES, ExperimentConfig, bundled_config,
                      bundled_config_names, load_config, run_pipeline, spectrum_table,
                      summary_text, sweep_dtn, write_bundle)


def _resolve_config(arg: str) -> ExperimentConfig:
    path = Path(arg)
    if path.exists() or arg.endswith(".json") and "/" in arg:
        return load_config(path)
    stem = path.stem if arg.endswith(".json") else arg
    if stem + ".json" in bundled_config_names():
        return bundled_config(stem)
    return load_config(path)


def _tolerance_overrides(args) -> dict:
    return {k: getattr(args, f"tol_{k}") for k in DEFAULT_TOLERANCES
            if getattr(args, f"tol_{k}", None) is not None}


def _add_common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("config", help="config file or bundled config name")
    p.add_argument("--out", default=out_default, help="output directory (default: %(default)s)")
    g = p.add_argument_group("tolerance overrides")
    for k, v in DEFAULT_TOLERANCES.items():
        g.add_argument(f"--tol-{k.replace('_', '-')}", dest=f"tol_{k}", type=float,
                       metavar="X", help=f"default {v:g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtnjordan",
        description="Dirichlet-to-Neumann matrices and Jordan/Keldysh chain verification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every enabled check and write a report bundle")
    _add_common(p, "out")

    p = sub.add_parser("check", help="run a single check")
    _add_common(p, "out")
    p.add_argument("--only", required=True, choices=CHECK_NAMES, metavar="NAME",
                   help="one of: " + ", ".join(CHECK_NAMES))

    p = sub.add_parser("sweep", help="tabulate D(lambda) over a grid")
    _add_common(p, "out")
    p.add_argument("--grid", required=True,
                   help="'a:b:n[@im]' for n points on [a, b] (+ im i), or a comma list of complex "
                        "numbers; '' is an empty grid; write --grid=-4:-1:10 when "
                        "the grid starts with a minus sign")
    p.add_argument("--min-distance", type=float, default=1e-3,
                   help="flag points closer than this to the Dirichlet spectrum")

    p = sub.add_parser("spectrum", help="write Dirichlet and Robin spectra")
    _add_common(p, "out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _resolve_config(args.config)
        overrides = _tolerance_overrides(args)
        if overrides:
            config = config.with_tolerances(**overrides)
        out = Path(args.out)
        if args.command in ("run", "check"):
            if args.command == "check":
                config = config.with_checks([args.only])
            result = run_pipeline(config)
            write_bundle(result, out)
            sys.stdout.write(summary_text(result))
            return result.exit_code
        if args.command == "sweep":
            target = out / f"{config.name}_sweep.csv"
            flagged = sweep_dtn(config, args.grid, target, args.min_distance)
            print(f"wrote {target} ({flagged} flagged rows)")
            return 0
        target = out / f"{config.name}_spectrum.csv"
        spec = spectrum_table(config, target)
        print(f"wrote {target} ({len(spec['dirichlet'])} Dirichlet, "
              f"{len(spec['robin'])} Robin eigenvalues)")
        return 0
    except DtnJordanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
