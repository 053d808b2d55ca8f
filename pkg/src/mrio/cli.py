"""Command line entry point: ``mrio simulate | run | eval | defaults``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import format_config, load_config
from .dataset import load_dataset, read_tum, write_dataset, write_tum
from .errors import ConfigError, DataError
from .mapping import export_ply, export_xyz
from .metrics import evaluate
from .pipeline import run_pipeline
from .simulator import simulate

log = logging.getLogger("mrio")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    p = _Parser(prog="mrio", description="Multi-radar inertial odometry toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="generate a synthetic tunnel dataset")
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="dataset JSONL")
    s.add_argument("--gt", required=True, help="ground-truth TUM trajectory")
    s.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("run", help="run odometry and mapping on a dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--config")
    r.add_argument("--out-traj", required=True, help="estimated TUM trajectory")
    r.add_argument("--out-map", required=True, help="ASCII PLY map")
    r.add_argument("--out-xyz", help="optional x,y,z CSV map")
    r.add_argument("--stage1-trace", help="optional Stage-I CSV trace")
    r.add_argument("--diagnostics", help="optional JSON run summary")
    r.add_argument("--baseline", choices=["no-stage1"])

    e = sub.add_parser("eval", help="compare an estimated trajectory to ground truth")
    e.add_argument("--est", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--max-dt", type=float, default=0.05)
    e.add_argument("--report", required=True, help="JSON metrics report")

    d = sub.add_parser("defaults", help="write the default configuration file")
    d.add_argument("--out", required=True)
    return p


def cmd_simulate(args):
    cfg = load_config(args.config)
    sim = simulate(cfg, args.seed)
    write_dataset(args.out, sim.events())
    tr = sim.truth
    write_tum(args.gt, tr.t, tr.x, tr.y, tr.theta)
    log.info("simulated %.1f m, %d imu samples, %d radar scans", tr.path_length(), len(tr),
             len(sim.radar.scans))


def cmd_run(args):
    cfg = load_config(args.config)
    events = load_dataset(args.dataset, cfg.ego.max_doppler)
    res = run_pipeline(events, cfg, args.baseline)
    write_tum(args.out_traj, res.t, res.x, res.y, res.theta)
    export_ply(res.gmap, args.out_map)
    if args.out_xyz:
        export_xyz(res.gmap, args.out_xyz)
    if args.stage1_trace:
        with open(args.stage1_trace, "w", encoding="ascii", newline="\n") as f:
            f.write("stamp,v,b,var_v,var_b,a_cc\n")
            for row in res.stage1_trace:
                f.write(",".join(f"{x:.9g}" for x in row) + "\n")
    summary = res.diagnostics.summary()
    summary["map_points"] = len(res.gmap)
    summary["baseline"] = args.baseline or "none"
    if args.diagnostics:
        with open(args.diagnostics, "w", encoding="utf-8") as f:
            f.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for t, msg in res.diagnostics.events[:20]:
        log.info("t=%.3f %s", t, msg)
    log.info("run finished: %s", summary)


def cmd_eval(args):
    report = evaluate(read_tum(args.est), read_tum(args.gt), args.max_dt)
    with open(args.report, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    print(report.to_json(), end="")


def cmd_defaults(args):
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(format_config(load_config(None)))


COMMANDS = {"simulate": cmd_simulate, "run": cmd_run, "eval": cmd_eval, "defaults": cmd_defaults}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("mrio: a subcommand is required")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"mrio {args.command}: configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"mrio {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mrio {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
