"""Command line interface.

Subcommands: oracle (closed-form checks), gw (DP/tail/envelope sweeps),
bm (path-engine checks), thick (supremum tail experiment), lefttail
(left-tail experiment), report (fit and summarise saved records).
Exit codes: 0 success, 2 regime rejection, 3 numerical-certificate failure,
4 IO failure.
"""

from __future__ import annotations

import argparse
import sys
import time

from ..errors import RegimeError, TruncationError
from .config import load_config
from .experiments import run_experiment
from .fits import tail_fit
from .records import export_csv, read_records, write_records

_GW_KINDS = {"tail": "gw-tail", "envelope": "gw-envelope",
             "bridge": "gw-bridge"}
_BM_KINDS = {"occupation": "occupation", "deviation": "deviation",
             "continuity": "continuity", "coupling": "coupling",
             "wasserstein": "wasserstein"}


def _add_common(parser):
    parser.add_argument("--config", help="JSON or TOML config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--replicas", type=int)
    parser.add_argument("--out", help="JSONL output path")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--executor", choices=["serial", "thread", "process"])
    parser.add_argument("--ladder-r0", type=float, dest="ladder_r0")
    parser.add_argument("--ladder-L", type=int, dest="ladder_L")
    parser.add_argument("--net-d0", type=float, dest="net_d0")
    parser.add_argument("--net-level", type=int, dest="net_level")
    parser.add_argument("--net-subsample", type=int, dest="net_subsample")
    parser.add_argument("--r-star", type=float, dest="r_star")
    parser.add_argument("--z-grid", dest="z_grid",
                        help="comma separated offsets")
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE",
                        help="extra dotted-key override, repeatable")


def _overrides(args, kind):
    pairs = [("kind", kind)]
    direct = {
        "seed": "seed", "replicas": "replicas", "out": "out",
        "workers": "workers", "executor": "executor",
        "ladder_r0": "ladder.r0", "ladder_L": "ladder.L",
        "net_d0": "net.d0", "net_level": "net.level",
        "net_subsample": "net.subsample", "r_star": "path.r_star",
    }
    for attr, key in direct.items():
        val = getattr(args, attr, None)
        if val is not None:
            pairs.append((key, val))
    if getattr(args, "z_grid", None):
        pairs.append(("z_grid", [float(v) for v in args.z_grid.split(",")]))
    for item in getattr(args, "set", []):
        key, _, raw = item.partition("=")
        try:
            import json

            val = json.loads(raw)
        except ValueError:
            val = raw
        pairs.append((key, val))
    return pairs


def build_parser():
    parser = argparse.ArgumentParser(prog="thickpoints")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("oracle", "thick", "lefttail"):
        p = sub.add_parser(name)
        _add_common(p)
    p = sub.add_parser("gw")
    p.add_argument("what", choices=sorted(_GW_KINDS))
    _add_common(p)
    p = sub.add_parser("bm")
    p.add_argument("what", choices=sorted(_BM_KINDS))
    _add_common(p)
    p = sub.add_parser("report")
    p.add_argument("records", help="JSONL records file")
    p.add_argument("--csv", help="also export a CSV table")
    p.add_argument("--multiplier", default="1+z",
                   choices=["1+z", "z", "none"])
    return parser


def _run(args, kind):
    config = load_config(args.config, _overrides(args, kind))
    t0 = time.time()
    records, lines = run_experiment(config)
    for rec in records:
        rec.timestamp = time.time()
    for line in lines:
        print(line)
    print(f"[{config.kind}] {len(records)} records in {time.time() - t0:.1f}s "
          f"(seed {config.seed}, config {config.hash()})")
    if config.out:
        write_records(config.out, records, config_hash=config.hash(),
                      master_seed=config.seed)
        print(f"wrote {config.out}")
    return 0


def _report(args):
    headers, records = read_records(args.records)
    print(f"{len(records)} records, {len(headers)} run header(s)")
    for h in headers:
        print(f"  run: config {h.get('config_hash')} seed {h.get('master_seed')}")
    points = []
    for rec in records:
        z = rec.params.get("z")
        if z is None or rec.estimate in (None, 0.0) or rec.ci is None:
            continue
        se = (rec.ci[1] - rec.ci[0]) / (2 * 1.96)
        points.append((z, rec.estimate, se))
    if len(points) >= 3:
        mult = None if args.multiplier == "none" else args.multiplier
        fit = tail_fit(points, multiplier=mult)
        print(f"tail fit: slope={fit.slope:.4f} (se {fit.slope_stderr:.4f}) "
              f"intercept={fit.intercept:.3f} multiplier={fit.multiplier}")
    else:
        print("no z-grid tail to fit")
    if args.csv:
        export_csv(args.csv, records)
        print(f"wrote {args.csv}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return _report(args)
        if args.command == "oracle":
            return _run(args, "oracle-check")
        if args.command == "thick":
            return _run(args, "thick-tail")
        if args.command == "lefttail":
            return _run(args, "left-tail")
        if args.command == "gw":
            return _run(args, _GW_KINDS[args.what])
        if args.command == "bm":
            return _run(args, _BM_KINDS[args.what])
        raise RegimeError(f"unknown command {args.command!r}")
    except RegimeError as exc:
        print(f"regime rejection: {exc}", file=sys.stderr)
        return 2
    except TruncationError as exc:
        print(f"numerical certificate failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
