"""Sample-size convergence figure from a pbc-mc CSV."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from .figspec import FigureSpec, SchemaError, load_table, save_figure


def plot_pbc_mc(spec: FigureSpec) -> Path:
    """Render delta vs M on log-log axes, one curve per (t, k).

    A dashed 1/sqrt(M) guide is anchored at the smallest sample count
    so shot-noise-limited decay reads off as parallel to it.
    """
    table = load_table(spec.csv)
    table.require("M", "k", "t", "delta")

    fig, ax = plt.subplots(figsize=(5.6, 3.8), constrained_layout=True)
    groups = sorted({(int(r["t"]), int(r["k"])) for r in table.rows})
    for t, k in groups:
        pts = sorted(
            (int(r["M"]), float(r["delta"]))
            for r in table.rows
            if int(r["t"]) == t and int(r["k"]) == k
        )
        ax.plot(*zip(*pts), marker="o", ms=4, label=f"$t={t}$, $k={k}$")

    m0 = min(int(r["M"]) for r in table.rows)
    y0 = max(float(r["delta"]) for r in table.rows if int(r["M"]) == m0)
    ms = sorted({int(r["M"]) for r in table.rows})
    ax.plot(
        ms, [y0 * math.sqrt(m0 / m) for m in ms],
        ls="--", color="gray", label=r"$\propto M^{-1/2}$",
    )

    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("samples $M$")
    ax.set_ylabel(r"$\Delta^{(k)}$")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()

    nas = {r["n_a"] for r in table.rows} if "n_a" in table.columns else set()
    gs = {r["g"] for r in table.rows} if "g" in table.columns else set()
    if len(nas) == 1 and len(gs) == 1:
        fig.suptitle(
            f"ring ensemble, $N_A$ = {int(nas.pop())}, g = {float(gs.pop()):.4g}"
        )
    return save_figure(fig, spec.out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot a dualpe pbc-mc CSV as log-log convergence curves."
    )
    parser.add_argument("csv", help="pbc-mc CSV (sidecar must sit next to it)")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    args = parser.parse_args(argv)

    spec = FigureSpec(
        inputs=(Path(args.csv),),
        kind="pbc_mc",
        out=Path(args.out),
        log_x=True,
        log_y=True,
    )
    try:
        plot_pbc_mc(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
