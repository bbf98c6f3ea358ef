"""Spectral-gap-versus-g figure from a gap-scan CSV."""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

import matplotlib.pyplot as plt
from matplotlib.ticker import MaxNLocator

from .figspec import DISPLAY_FLOOR, FigureSpec, SchemaError, load_table, save_figure

PI_8 = math.pi / 8


def _tick_label(m: int) -> str:
    if m == 0:
        return "0"
    frac = Fraction(m, 8)
    head = r"\pi" if frac.numerator == 1 else rf"{frac.numerator}\pi"
    if frac.denominator == 1:
        return f"${head}$"
    return f"${head}/{frac.denominator}$"


def plot_gap_scan(spec: FigureSpec) -> Path:
    """Render gap vs g with the unimodular count on a twin axis.

    The g axis is ticked at multiples of pi/8 so the closures at the
    quarter-period points line up with labeled ticks.
    """
    table = load_table(spec.csv)
    table.require("t", "k", "g", "gap", "unimodular_count")

    fig, ax = plt.subplots(figsize=(6.0, 3.8), constrained_layout=True)
    groups = sorted({(int(r["t"]), int(r["k"])) for r in table.rows})
    for t, k in groups:
        pts = sorted(
            (float(r["g"]), float(r["gap"]), int(r["unimodular_count"]))
            for r in table.rows
            if int(r["t"]) == t and int(r["k"]) == k
        )
        g = [p[0] for p in pts]
        gap = [max(p[1], DISPLAY_FLOOR) if spec.log_y else p[1] for p in pts]
        ax.plot(g, gap, marker=".", label=f"$t={t}$, $k={k}$")

    ax.set_xlabel("$g$")
    ax.set_ylabel(r"gap $1-|\lambda_{k!+1}|$")
    if spec.log_y:
        ax.set_yscale("log")
    ax.legend(loc="upper left")

    all_g = [float(r["g"]) for r in table.rows]
    lo = math.floor(min(all_g) / PI_8 + 1e-9)
    hi = math.ceil(max(all_g) / PI_8 - 1e-9)
    ax.set_xticks([m * PI_8 for m in range(lo, hi + 1)])
    ax.set_xticklabels([_tick_label(m) for m in range(lo, hi + 1)])

    twin = ax.twinx()
    pts = sorted((float(r["g"]), int(r["unimodular_count"])) for r in table.rows)
    twin.step(
        [p[0] for p in pts], [p[1] for p in pts],
        where="mid", color="tab:gray", alpha=0.6,
    )
    twin.set_ylabel("unimodular count", color="tab:gray")
    twin.yaxis.set_major_locator(MaxNLocator(integer=True))
    twin.tick_params(axis="y", colors="tab:gray")

    return save_figure(fig, spec.out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot a dualpe gap-scan CSV: gap vs g plus unimodular count."
    )
    parser.add_argument("csv", help="gap-scan CSV (sidecar must sit next to it)")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument(
        "--log-y", action="store_true", help="log gap axis (floored for display)"
    )
    args = parser.parse_args(argv)

    spec = FigureSpec(
        inputs=(Path(args.csv),),
        kind="gap_scan",
        out=Path(args.out),
        log_y=args.log_y,
    )
    try:
        plot_gap_scan(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
