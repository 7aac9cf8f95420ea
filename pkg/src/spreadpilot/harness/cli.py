"""Command line entry point: ``spreadpilot {mse,variance,ber,boost-sweep,bitrate}``.

Exit codes: 0 success, 2 configuration error, 3 report contains unreliable points.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from ..config import ConfigError, LinkConfig, load, validate_config
from . import budget, experiments
from .report import ExperimentReport, emit_report

EXIT_OK, EXIT_CONFIG, EXIT_UNRELIABLE = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out-dir", default="results")
    common.add_argument("--format", choices=("csv", "svg"), action="append",
                        help="output format; repeat for both (default csv)")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--lt", type=int)
    common.add_argument("--lf", type=int)
    common.add_argument("--boost", type=float)
    common.add_argument("--channel", choices=("F1", "P1", "FLAT", "CUSTOM"))
    common.add_argument("--channel-file")
    common.add_argument("--rate", choices=("1", "1/2", "3/4", "5/6"))
    common.add_argument("--qam", choices=("QPSK", "16QAM", "64QAM"))
    common.add_argument("--baseline", action="store_true", help="DVB-T perfect-CSI reference")
    common.add_argument("--interleaver", action="store_true")
    common.add_argument("--max-bits", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="spreadpilot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mse", parents=[common], help="estimator MSE vs SNR per Lf")
    p.add_argument("--lf-list", type=_ints, default=[1, 2, 4, 8, 16, 32, 64])
    p.add_argument("--snr", type=_floats, default=[0, 10, 20, 30, 40, 50, 60])
    p.add_argument("--trials", type=int, default=100_000, help="minimum subset trials per point")

    p = sub.add_parser("variance", parents=[common], help="weighted channel variance vs Lf")
    p.add_argument("--lf-list", type=_ints, default=[1, 2, 4, 8, 16, 32, 64])

    p = sub.add_parser("ber", parents=[common], help="post-Viterbi BER vs Eb/N0")
    p.add_argument("--ebn0", type=_floats, default=[6, 7, 8, 9, 10, 11, 12])

    p = sub.add_parser("boost-sweep", parents=[common], help="pick the boost minimizing BER")
    p.add_argument("--boost-grid", type=_floats, default=[1, 2, 4, 6, 8, 12, 16])
    p.add_argument("--ebn0", type=float, default=9.0)

    sub.add_parser("bitrate", parents=[common], help="useful bit-rate table")
    return parser


def config_from_args(args) -> LinkConfig:
    cfg = load(args.config) if args.config else LinkConfig()
    changes = {}
    for flag, key in (("seed", "master_seed"), ("lt", "lt"), ("lf", "lf"), ("boost", "boost"),
                      ("channel", "channel"), ("channel_file", "channel_file"), ("rate", "code_rate"),
                      ("qam", "constellation"), ("max_bits", "max_bits")):
        value = getattr(args, flag, None)
        if value is not None:
            changes[key] = value
    if args.baseline:
        changes["baseline_mode"] = True
    if args.interleaver:
        changes["interleaver"] = True
    if args.command in ("mse", "variance") and "lt" not in changes and not args.config:
        changes["lt"] = 1
        changes["channel_mode"] = "freq"
    if "lt" in changes or "lf" in changes:
        changes["spreading_total"] = 0
    return validate_config(dataclasses.replace(cfg, **changes))


def run(args, cfg: LinkConfig) -> tuple[ExperimentReport, int]:
    if args.command == "bitrate":
        report = ExperimentReport("bitrate", ("system", "constellation", "code_rate", "L", "rate_mbps",
                                              "reported_mbps", "published_mbps"))
        for row in budget.bitrate_table(cfg):
            report.add(**row)
            print(f"{row['system']:8s} {row['constellation']:6s} Rc={row['code_rate']:4s} "
                  f"L={row['L'] or '-':>3} {row['reported_mbps']:6.2f} Mbit/s "
                  f"(published {row['published_mbps']:.2f})")
        return report, EXIT_OK
    if args.command == "mse":
        report = experiments.run_mse_experiment(cfg, args.lf_list, args.snr, args.trials, args.workers)
    elif args.command == "variance":
        report = experiments.run_weighted_variance(cfg, args.lf_list)
    elif args.command == "ber":
        report = experiments.run_ber_experiment(cfg, args.ebn0, args.workers)
    else:
        best, report = experiments.sweep_boost(cfg, args.boost_grid, args.ebn0, args.workers)
        print(f"best boost: {best:g}")
    code = EXIT_UNRELIABLE if experiments.unreliable_points(report) else EXIT_OK
    return report, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run(args, cfg)
    for path in emit_report(report, args.out_dir, tuple(args.format or ("csv",))):
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())
