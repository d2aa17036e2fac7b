"""Command line entry point ``spamm-ec``.

Examples::

    spamm-ec square --matrix gen:256,0.5,1 --tolerances 1e-2:1e-8:log --out results.csv
    spamm-ec purify --gen 256,0.5,1 --occupation 64 --epsilon 1e-5 --variant hybrid --out run.json

Every flag may also be given in a ``--config`` file of ``key = value``
lines (``#`` starts a comment, keys use the flag names); flags on the
command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import bench
from .purification import VARIANTS

log = logging.getLogger("spamm_ec")

# flag name -> (parser, default)
_COMMON = {
    "grid_start": (float, 1.0),
    "grid_ratio": (float, 0.9),
    "grid_count": (int, 350),
    "leaf": (int, 32),
    "seed": (int, 0),
    "workers": (int, 1),
    "out": (str, None),
    "format": (str, None),
}
_SQUARE = {
    "matrix": (str, None),
    "variants": (str, ",".join(VARIANTS)),
    "tolerances": (str, "1e-2:1e-8:log"),
}
_PURIFY = {
    "gen": (str, None),
    "occupation": (int, None),
    "epsilon": (float, 1e-5),
    "variant": (str, ",".join(VARIANTS)),
    "max_iter": (int, 100),
}


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; quotes around values are stripped."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value.strip("'\"")
    return values


def _add_flags(parser: argparse.ArgumentParser, table: dict) -> None:
    for name, (_, default) in table.items():
        flag = "--" + name.replace("_", "-")
        parser.add_argument(flag, default=None, help=f"default: {default}")


def _resolve(args: argparse.Namespace, table: dict) -> dict:
    config = read_config(args.config) if args.config else {}
    unknown = set(config) - set(table)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for name, (conv, default) in table.items():
        value = getattr(args, name, None)
        if value is None:
            value = config.get(name)
        out[name] = default if value is None else conv(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spamm-ec",
        description="Error-controlled sparse approximate matrix multiplication experiments.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sq = sub.add_parser("square", help="two approximate squarings per variant and tolerance")
    sq.add_argument("--config", default=None)
    _add_flags(sq, {**_SQUARE, **_COMMON})

    pu = sub.add_parser("purify", help="SP2 purification of a generated Hamiltonian")
    pu.add_argument("--config", default=None)
    _add_flags(pu, {**_PURIFY, **_COMMON})
    return parser


def _output_format(opts: dict, default: str) -> str:
    if opts["format"]:
        return opts["format"]
    if opts["out"] and opts["out"].endswith(".json"):
        return "json"
    if opts["out"] and opts["out"].endswith(".csv"):
        return "csv"
    return default


def _print_records(records) -> None:
    print(f"{'variant':<9} {'iter':>4} {'tol':>9} {'tau':>10} {'nnz_mid':>9} {'nnz_out':>9} {'error':>10}  status")
    for r in records:
        err = "" if r.realized_error is None else f"{r.realized_error:.3e}"
        tau = "" if r.chosen_tau is None else f"{r.chosen_tau:.3e}"
        print(f"{r.variant:<9} {r.iter:>4} {r.tolerance:>9.2e} {tau:>10} {r.nnz_mid:>9} {r.nnz_out:>9} {err:>10}  {r.status}")


def _cmd_square(args) -> int:
    opts = _resolve(args, {**_SQUARE, **_COMMON})
    if not opts["matrix"]:
        raise ValueError("square: --matrix is required")
    config = bench.ExperimentConfig(
        matrix=opts["matrix"],
        variants=tuple(v.strip() for v in opts["variants"].split(",") if v.strip()),
        tolerances=bench.parse_tolerances(opts["tolerances"]),
        grid_start=opts["grid_start"],
        grid_ratio=opts["grid_ratio"],
        grid_count=opts["grid_count"],
        leaf_size=opts["leaf"],
        seed=opts["seed"],
        out=opts["out"],
        workers=opts["workers"],
    )
    records = bench.run_squaring_experiment(config)
    summary = {"sharpness": bench.sharpness(records)}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        summary["sharpness_order_ok"] = bench.check_sharpness_order(records)
    for w in caught:
        log.warning("%s", w.message)
    _print_records(records)
    print("sharpness (realized/tolerance):", ", ".join(f"{k}={v:.3g}" for k, v in summary["sharpness"].items()))
    if config.out:
        bench.emit(records, config.out, _output_format(opts, "csv"), summary)
    return 1 if any(r.status != "ok" for r in records) else 0


def _cmd_purify(args) -> int:
    opts = _resolve(args, {**_PURIFY, **_COMMON})
    if not opts["gen"]:
        raise ValueError("purify: --gen n,alpha,seed is required")
    config = bench.ExperimentConfig(
        matrix="gen:" + opts["gen"],
        variants=tuple(v.strip() for v in opts["variant"].split(",") if v.strip()),
        grid_start=opts["grid_start"],
        grid_ratio=opts["grid_ratio"],
        grid_count=opts["grid_count"],
        leaf_size=opts["leaf"],
        seed=opts["seed"],
        out=opts["out"],
        workers=opts["workers"],
        occupation=opts["occupation"],
        epsilon=opts["epsilon"],
        max_iterations=opts["max_iter"],
    )
    records = bench.run_purification_experiment(config)
    _print_records(records)
    if config.out:
        bench.emit(records, config.out, _output_format(opts, "json"))
    return 1 if any(r.status != "ok" for r in records) else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "square":
            return _cmd_square(args)
        return _cmd_purify(args)
    except (ValueError, OSError) as exc:
        print(f"spamm-ec: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
