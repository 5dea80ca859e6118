"""Command line entry point: ``icilab run | check | trace``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import apply_channel
from .config import build_spec, load_config
from .errors import ConfigurationError, IcilabError
from .estimator import EstimatorConfig, estimate_fiducial_offset, write_trace_csv
from .harness import SWEEPS, gnuplot_dat, run_experiment, summarize, summary_csv
from .rxfront import front_end
from .txchain import random_frame

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _cmd_run(args) -> int:
    conf = load_config(args.config)
    seeds = range(args.seeds) if args.seeds is not None else None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = build_spec(conf, args.sweep, seeds=seeds, output=str(out_dir / f"{args.sweep}.csv"))
    report = run_experiment(spec, workers=args.workers)
    table, reductions = summarize(report)
    (out_dir / f"{args.sweep}_summary.csv").write_text(summary_csv(table, reductions))
    if args.dat:
        (out_dir / f"{args.sweep}.dat").write_text(gnuplot_dat(table))
    for value, red in reductions.items():
        print(f"{args.sweep}={value:g}: A-FFT vs F-FFT reduction {100 * red:.2f}%")
    if report.failed:
        print(f"{len(report.failed)} row(s) failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_check(args) -> int:
    from .checks import run_checks

    ok = True
    for res in run_checks(args.seed):
        ok &= res.passed
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.value:.3g} (limit {res.limit:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


def _cmd_trace(args) -> int:
    conf = load_config(args.config)
    cfg, ch = conf["ofdm"], conf["channel"]
    if args.alpha is not None:
        ch = replace(ch, doppler_factor=args.alpha, path_doppler=None)
    data_ss, noise_ss = np.random.SeedSequence(args.seed).spawn(2)
    frame = random_frame(cfg, np.random.default_rng(data_ss))
    noise_seed = int(noise_ss.generate_state(1, np.uint64)[0])
    rx = front_end(apply_channel(frame.baseband, replace(ch, seed=noise_seed), cfg), cfg,
                   coarse_alpha=conf["coarse_alpha"])
    est = EstimatorConfig(**{**conf["settings"].estimator.__dict__, "taps_A": conf["settings"].A})
    result = estimate_fiducial_offset(rx.block(0), frame.data[0, : cfg.pilot_count], cfg, est)
    write_trace_csv(result, args.out)
    print(f"f_e estimate {result.f_e:.4f} Hz ({result.f_e / cfg.carrier_spacing:.4f} df) "
          f"after {result.iterations} iterations")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icilab", description="Differential OFDM ICI-mitigation lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo sweep and write CSV reports")
    run.add_argument("--config", help="YAML config (defaults apply when omitted)")
    run.add_argument("--sweep", choices=SWEEPS, required=True)
    run.add_argument("--seeds", type=int, help="use seeds 0..N-1 instead of the config's")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--dat", action="store_true", help="also write a gnuplot .dat table")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("check", help="run the built-in oracle checks")
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=_cmd_check)

    trace = sub.add_parser("trace", help="dump the f_e estimator convergence trace")
    trace.add_argument("--config")
    trace.add_argument("--seed", type=int, default=0)
    trace.add_argument("--alpha", type=float, help="override the channel Doppler factor")
    trace.add_argument("--out", required=True, help="CSV file")
    trace.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seeds", None) is not None and args.seeds < 1:
            raise ConfigurationError("--seeds must be >= 1")
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IcilabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
