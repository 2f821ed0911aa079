"""``grushin-check``: run named checks and write a report.

Exit status: 0 when every verdict is PASS, 1 when a check fails, 2 for
configuration errors and 3 when the output cannot be written.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

from . import parallel
from .config import ConfigError, default_config_text, load_config
from .reports import build_report, write_report
from .suite import ALL, PROFILES, run_check

EXIT_FAIL, EXIT_CONFIG, EXIT_OUTPUT = 1, 2, 3

HELP = {
    "verify-hermite": "Hermite orthonormality, ladder relations and the |lambda| derivative",
    "verify-geometry": "distance, ball growth, partition of unity and integrability",
    "apply": "apply the configured symbol once and save input and output fields",
    "equivalence": "spectral route against the Fourier-inversion route",
    "cv": "operator norm over seminorm along a refinement ladder",
    "cotlar": "almost-orthogonality matrices of the dyadic pieces",
    "plancherel": "weighted Plancherel ratios across scales",
    "kernel-id": "kernel identities and heat semigroup",
    "dilation": "dilation identity",
    "all": "every check above",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config file")
    common.add_argument("--out", metavar="DIR", help="output directory (default from config)")
    common.add_argument("--threads", type=int, metavar="N", help="worker cap (default from config, else 1)")
    common.add_argument("--seed", type=int, metavar="S", help="seed, overrides the config")
    common.add_argument("--profile", choices=sorted(PROFILES), help="discretization profile")
    common.add_argument("-q", "--quiet", action="store_true", help="only print the overall verdict")
    p = argparse.ArgumentParser(prog="grushin-check", description="Run named numerical checks and write a report.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, text in HELP.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    dp = sub.add_parser("default-config", help="print a config file with every default")
    dp.add_argument("--profile", choices=sorted(PROFILES), default="desk1d")
    dp.add_argument("--seed", type=int, default=0)
    return p


def run(args):
    if args.command == "default-config":
        sys.stdout.write(default_config_text(args.profile, args.seed))
        return 0
    try:
        cfg = load_config(args.config, profile=args.profile, seed=args.seed,
                          require_seed=args.config is not None)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    threads = args.threads if args.threads is not None else cfg.threads
    if threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or cfg.output_dir
    s = cfg.settings
    try:
        os.makedirs(out, exist_ok=True)
        if cfg.write_fields:
            s.fields_dir = os.path.join(out, "fields")
            os.makedirs(s.fields_dir, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out!r}: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT

    names = ALL if args.command == "all" else [args.command]
    parallel.set_threads(threads)
    results = []
    t0 = time.perf_counter()
    with parallel.single_threaded_blas(), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in names:
            res = run_check(name, s)
            results.append(res)
            if not args.quiet:
                print(f"{res.verdict:4s}  {name}  ({res.runtime_s:.1f} s)", flush=True)
                for w in res.warnings:
                    print(f"      warning: {w}", flush=True)
    echo = dict(cfg.echo)
    report = build_report(args.command, results, echo, s.seed, threads, echo["profile"], time.perf_counter() - t0)
    try:
        write_report(out, report, results, cfg.write_csv)
    except OSError as exc:
        print(f"error: cannot write report to {out!r}: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT
    print(f"{report['verdict']}  {args.command}  -> {os.path.join(out, 'report.json')}")
    return 0 if report["verdict"] == "PASS" else EXIT_FAIL


def main(argv=None):
    return run(build_parser().parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
