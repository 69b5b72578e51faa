#!/usr/bin/env python3
"""Plots for bclean outputs.

  plot_maps.py map clean_map.csv [--bins LO HI] -o map.png
  plot_maps.py spectra metrics.json ground_truth.json -o spectra.png
"""

import argparse
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def _levels(values):
    # null marks a silent bin
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def plot_map(args):
    df = pd.read_csv(args.clean_map)
    if args.bins:
        lo, hi = args.bins
        df = df[(df.bin_hz >= lo) & (df.bin_hz <= hi)]
    df = df.assign(power=10.0 ** (df.psd_db / 10.0))
    fig, ax = plt.subplots(figsize=(7, 5))
    if df.y.nunique() > 1:
        # Plane grid: bin-summed level per point.
        total = df.groupby(["x", "y"]).power.sum().reset_index()
        sc = ax.scatter(total.x, total.y, c=10.0 * np.log10(total.power), s=12, cmap="viridis")
        fig.colorbar(sc, ax=ax, label="level [dB]")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_aspect("equal")
    else:
        # Line grid: position against frequency, like a source-map strip.
        sc = ax.scatter(df.x, df.bin_hz, c=df.psd_db, s=6, cmap="viridis")
        fig.colorbar(sc, ax=ax, label="PSD [dB]")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("frequency [Hz]")
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


def plot_spectra(args):
    with open(args.metrics) as f:
        metrics = json.load(f)
    with open(args.gt) as f:
        gt = json.load(f)
    freqs = np.asarray(metrics["frequencies"])
    fig, ax = plt.subplots(figsize=(8, 5))
    for k, roi in enumerate(metrics["rois"]):
        colour = f"C{k}"
        ax.plot(freqs, _levels(roi["psd_db"]), color=colour, label=roi["label"])
    for k, src in enumerate(gt["sources"]):
        ax.plot(freqs, _levels(src["psd_db"]), color=f"C{k}", ls="--", lw=0.8)
    ax.plot(freqs, _levels(metrics["noise_db"]), color="grey", label="noise")
    ax.set_xscale("log")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("PSD [dB]")
    ax.set_title("integrated spectra (dashed: ground truth)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)
    m = sub.add_parser("map")
    m.add_argument("clean_map")
    m.add_argument("--bins", type=float, nargs=2, metavar=("LO", "HI"))
    m.add_argument("-o", "--output", default="map.png")
    m.set_defaults(fn=plot_map)
    s = sub.add_parser("spectra")
    s.add_argument("metrics")
    s.add_argument("gt")
    s.add_argument("-o", "--output", default="spectra.png")
    s.set_defaults(fn=plot_spectra)
    args = p.parse_args()
    args.fn(args)


if __name__ == "__main__":
    main()
