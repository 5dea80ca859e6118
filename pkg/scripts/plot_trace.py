#!/usr/bin/env python3
"""Plot an estimator convergence CSV written by ``icilab trace``."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("-o", "--out", required=True)
    args = parser.parse_args()
    with open(args.csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    it = [int(r["iter"]) for r in rows]
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(5.5, 5))
    top.plot(it, [float(r["E_dB"]) for r in rows], marker="o")
    top.set_ylabel("pilot MSE E (dB)")
    bottom.plot(it, [float(r["f_e"]) for r in rows], marker="o", color="tab:red")
    bottom.set_ylabel("f_e (Hz)")
    bottom.set_xlabel("outer iteration")
    for ax in (top, bottom):
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
