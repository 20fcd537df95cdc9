#!/usr/bin/env python3
"""Throughput vs degrees of freedom from `speckern-bench bench` CSV.

    speckern-bench bench --shape hex --order 1..8 --nelem 64,256,1024,4096 > hex.csv
    python3 tools/plot_throughput.py hex.csv -o hex.png

One panel per shape, one line per (P, strategy, form). Needs pandas and
matplotlib; optional, not used by the build.
"""
import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", default="throughput.png")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    shapes = list(df["shape"].unique())
    fig, axes = plt.subplots(1, len(shapes), figsize=(5 * len(shapes), 4), squeeze=False)
    for ax, shape in zip(axes[0], shapes):
        sub = df[df["shape"] == shape]
        for (p, strat, form), g in sub.groupby(["P", "strategy", "form"]):
            g = g.sort_values("ndof")
            label = f"P={p} {strat}" + ("" if form == "none" else f" {form}")
            ax.plot(g["ndof"], g["dof_per_s"], marker="o", label=label)
        ax.set_xscale("log")
        ax.set_xlabel("DOF")
        ax.set_ylabel("DOF/s")
        ax.set_title(f"{sub['op'].iloc[0]} {shape}")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
