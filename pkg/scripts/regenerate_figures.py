#!/usr/bin/env python3
"""Run the desk-scale sweeps and draw their figures.

Writes CSV, summaries and PNGs under the output directory (default
``results/``). ``--quick`` runs only the SNR sweep of ``configs/quick.yaml``
as a smoke test; the full set takes a while on one core.

    python scripts/regenerate_figures.py --out results --workers 4
"""

import argparse
import sys
from pathlib import Path

from plot_sweep import plot

from icilab.cli import main as icilab

ROOT = Path(__file__).resolve().parent.parent
JOBS = [
    ("fe_sweep.yaml", "fe", "F-FFT and A-FFT versus fiducial offset"),
    ("default.yaml", "snr", "MSE versus input SNR"),
    ("default.yaml", "alpha", "MSE versus Doppler factor"),
    ("default.yaml", "carriers", "MSE versus number of carriers"),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seeds", type=int)
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--only", choices=[j[1] for j in JOBS], action="append")
    args = parser.parse_args()

    jobs = [("quick.yaml", "snr", "MSE versus input SNR (quick)")] if args.quick else JOBS
    for config, sweep, title in jobs:
        if args.only and sweep not in args.only:
            continue
        out = Path(args.out) / Path(config).stem
        argv = ["run", "--config", str(ROOT / "configs" / config), "--sweep", sweep,
                "--out", str(out), "--workers", str(args.workers), "--dat"]
        if args.seeds:
            argv += ["--seeds", str(args.seeds)]
        print(f"== {sweep} ({config})", flush=True)
        code = icilab(argv)
        if code == 2:
            return code
        plot(out / f"{sweep}.csv", out / f"{sweep}.png", title)
    return 0


if __name__ == "__main__":
    sys.exit(main())
