#!/usr/bin/env python3
# Copyright (c) 2026, The llmprop Authors
# SPDX-License-Identifier: Apache-2.0

"""Plot a sweep.dat file (value<TAB>metric) written by `llmprop sweep`."""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dat", help="sweep.dat from a sweep run")
    parser.add_argument("-o", "--output", default="sweep.png")
    args = parser.parse_args()

    with open(args.dat, newline="") as f:
        rows = list(csv.reader(f, delimiter="\t"))
    xlabel, ylabel = rows[0]
    xs = [r[0] for r in rows[1:]]
    ys = [float(r[1]) for r in rows[1:]]

    fig, ax = plt.subplots(figsize=(5, 3.5))
    try:
        ax.plot([float(x) for x in xs], ys, marker="o")
    except ValueError:  # categorical values such as scaler names
        ax.bar(xs, ys)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
