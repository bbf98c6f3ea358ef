"""Two-panel moment-distance figure from a design-scan CSV."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import matplotlib.pyplot as plt

from .figspec import (
    DISPLAY_FLOOR,
    FigureSpec,
    SchemaError,
    load_table,
    parse_int_set,
    save_figure,
)

PANELS = (("t", "depth $t$"), ("n_b", "bath size $N_B$"))


def plot_design_scan(spec: FigureSpec, ks: list[int] | None = None) -> Path:
    """Render delta-vs-t and delta-vs-n_b panels, one series per k.

    ``ks`` restricts which moment orders are drawn; a requested k with
    no rows in a panel is skipped with a warning instead of failing.
    """
    table = load_table(spec.csv)
    table.require("panel", "t", "n_b", "k", "delta")
    wanted = ks if ks is not None else sorted({int(r["k"]) for r in table.rows})

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), constrained_layout=True)
    for ax, (panel, xlabel) in zip(axes, PANELS):
        rows = [r for r in table.rows if r["panel"] == panel]
        drawn = 0
        for k in wanted:
            pts = sorted(
                # floor is display-only, CSV values pass through untouched
                (int(r[panel]), max(float(r["delta"]), DISPLAY_FLOOR))
                for r in rows
                if int(r["k"]) == k
            )
            if not pts:
                warnings.warn(f"no k={k} rows in the {panel} panel; series omitted")
                continue
            ax.plot(*zip(*pts), marker="o", ms=4, label=f"$k={k}$")
            drawn += 1
        ax.set_xlabel(xlabel)
        if spec.log_y:
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        if drawn:
            ax.legend()
    axes[0].set_ylabel(r"$\Delta^{(k)}$")

    gs = {r["g"] for r in table.rows} if "g" in table.columns else set()
    if len(gs) == 1:
        fig.suptitle(f"moment distance at g = {float(gs.pop()):.6g}")
    return save_figure(fig, spec.out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot a dualpe design-scan CSV as a two-panel figure."
    )
    parser.add_argument("csv", help="design-scan CSV (sidecar must sit next to it)")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    parser.add_argument(
        "--k", type=parse_int_set, default=None, metavar="LIST",
        help="moment orders to draw, e.g. '2' or '1-3'",
    )
    parser.add_argument(
        "--linear-y", action="store_true", help="linear instead of log delta axis"
    )
    args = parser.parse_args(argv)

    spec = FigureSpec(
        inputs=(Path(args.csv),),
        kind="design_scan",
        out=Path(args.out),
        log_y=not args.linear_y,
    )
    try:
        plot_design_scan(spec, ks=args.k)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
