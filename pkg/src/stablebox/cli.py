"""Command line entry point ``stable-box``.

Exit codes: 0 when every checked metric passes, 2 when any fails, 1 on a
usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .lepage import DEFAULT_K, sample_environment, sample_eta_with_max, sample_stable_bridges
from .limit_law import sample_r_conditional
from .rng import RngStream, name_key
from .stable import StableParams, TailParams, sample_stable

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stable-box", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("--config", required=True, help="JSON file with ExperimentConfig fields")
    run.add_argument("--seed", type=int, help="overrides the seed in the config")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="override a config field (repeatable)")
    run.add_argument("--out", help="output path (default: config output_path or <experiment>.<format>)")

    verify = sub.add_parser("verify", help="run the acceptance experiments at default sizes")
    verify.add_argument("target", choices=["all", *EXPERIMENTS])
    verify.add_argument("--seed", type=int, required=True)
    verify.add_argument("--out-dir", default="stable-box-results")

    sample = sub.add_parser("sample", help="write raw draws from one of the samplers")
    sample.add_argument("kind", choices=["stable", "eta", "bridge", "r-limit"])
    sample.add_argument("--alpha", type=float, required=True)
    sample.add_argument("--p", type=float, default=0.5)
    sample.add_argument("--count", type=int, required=True)
    sample.add_argument("--seed", type=int, required=True)
    sample.add_argument("--out", help="CSV path (default: stdout)")
    sample.add_argument("--k", type=int, default=DEFAULT_K, help="series terms per side")
    sample.add_argument("--grid", type=_float_list, default=[0.0, 0.25, 0.5, 0.75, 1.0], help="bridge grid")
    sample.add_argument("--ts", type=_float_list, default=[0.5], help="times for r-limit")
    return parser


def _print_report(report, paths) -> None:
    cfg = report.config
    print(f"{cfg.experiment} seed={cfg.seed} time={report.wall_time:.1f}s -> {', '.join(map(str, paths))}")
    for m in report.metrics:
        flag = "info" if m.passed is None else ("PASS" if m.passed else "FAIL")
        tol = "" if m.tolerance is None else f" ({m.op} {m.tolerance:g})"
        print(f"  {flag:4s} {m.name} = {m.value:.6g}{tol}")
        if m.passed is False and m.detail:
            print("       " + ", ".join(f"{k}={v}" for k, v in m.detail.items()))


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config, seed=args.seed, overrides=args.override)
    report = run_experiment(cfg)
    _print_report(report, report.write(args.out))
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_verify(args) -> int:
    targets = EXPERIMENTS if args.target == "all" else (args.target,)
    out_dir = Path(args.out_dir)
    ok = True
    for exp in targets:
        cfg = ExperimentConfig.defaults(exp, args.seed, output_path=str(out_dir / f"{exp}.csv"))
        report = run_experiment(cfg)
        _print_report(report, report.write())
        ok &= report.passed
    print("all metrics passed" if ok else "some metrics failed")
    return EXIT_OK if ok else EXIT_FAILED


def _write_rows(path, header, rows) -> None:
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    finally:
        if path:
            handle.close()


def _cmd_sample(args) -> int:
    if args.count < 1 or args.k < 1:
        raise ConfigError("count and k must be positive")
    stream = RngStream(args.seed, name_key(f"sample-{args.kind}"))
    if args.kind == "stable":
        beta = 0.0 if args.alpha in (1.0, 2.0) else 2.0 * args.p - 1.0
        x = sample_stable(StableParams(args.alpha, beta), args.count, stream)
        _write_rows(args.out, ["x"], ([float(v)] for v in x))
        return EXIT_OK

    tp = TailParams(args.alpha, args.p)
    if args.kind == "eta":
        eta, z = sample_eta_with_max(tp, args.k, stream, size=args.count)
        _write_rows(args.out, ["eta", "z"], zip(map(float, eta), map(float, z)))
    elif args.kind == "bridge":
        grid = np.asarray(args.grid)
        w, b, z = sample_stable_bridges(tp, grid, args.count, stream, k=args.k)
        rows = (
            (i, float(t), float(w[i, j]), float(b[i, j]), float(z[i]))
            for i in range(args.count)
            for j, t in enumerate(grid)
        )
        _write_rows(args.out, ["path", "t", "w", "b", "z"], rows)
    else:
        env = sample_environment(args.k, stream.spawn(0))
        draw = sample_r_conditional(env, tp, args.ts, args.k, args.count, stream.spawn(1))
        header = [f"R({t:g})" for t in draw.ts]
        _write_rows(args.out, header, (list(map(float, row)) for row in draw.values))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "verify": _cmd_verify, "sample": _cmd_sample}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as err:
        print(f"stable-box: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
