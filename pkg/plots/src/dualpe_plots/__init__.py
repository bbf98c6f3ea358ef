"""Regenerate figures from dualpe scan CSVs.

Each figure kind has a stand-alone script (and console entry point);
nothing here recomputes physics, the CSVs are taken as ground truth.
"""

from .figspec import (
    DISPLAY_FLOOR,
    FIGURE_KINDS,
    KNOWN_SCHEMA_VERSIONS,
    FigureSpec,
    SchemaError,
    Table,
    load_table,
    save_figure,
)
from .plot_design_scan import plot_design_scan
from .plot_gap_scan import plot_gap_scan
from .plot_pbc_mc import plot_pbc_mc

__version__ = "0.1.0"

__all__ = [
    "DISPLAY_FLOOR",
    "FIGURE_KINDS",
    "KNOWN_SCHEMA_VERSIONS",
    "FigureSpec",
    "SchemaError",
    "Table",
    "load_table",
    "save_figure",
    "plot_design_scan",
    "plot_gap_scan",
    "plot_pbc_mc",
]
