#!/usr/bin/env python3
"""Plot median MSE per receiver from a sweep CSV written by ``icilab run``.

    python scripts/plot_sweep.py results/snr.csv -o snr.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from icilab.harness import MseReport, summarize

XLABELS = {
    "snr": "input SNR (dB)",
    "alpha": "Doppler factor",
    "carriers": "number of carriers K",
    "fe": "fiducial offset f_e (Hz)",
}
MARKERS = {"ConvFFT": "s", "PFFT": "^", "FFFT": "o", "AFFT": "*"}


def plot(csv_path, out_path, title=None):
    report = MseReport.read_csv(csv_path)
    table, reductions = summarize(report)
    sweep = report.rows[0].sweep
    fig, ax = plt.subplots(figsize=(6, 4.2))
    for kind in dict.fromkeys(s.receiver for s in table):
        pts = [(s.value, s.median_db) for s in table if s.receiver is kind]
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker=MARKERS.get(kind.value, "."), label=kind.value)
    if sweep == "carriers":
        ax.set_xscale("log", base=2)
    ax.set_xlabel(XLABELS[sweep])
    ax.set_ylabel("median MSE (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return reductions


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("-o", "--out", required=True)
    parser.add_argument("--title")
    args = parser.parse_args()
    for value, red in plot(args.csv, args.out, args.title).items():
        print(f"{value:g}: A-FFT vs F-FFT reduction {100 * red:.1f}%")


if __name__ == "__main__":
    main()
