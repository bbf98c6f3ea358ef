"""Shared plumbing for the figure scripts.

Every scan CSV written by the ``dualpe`` CLI travels with a sidecar,
``<name>.csv.meta.json``, that records the schema version and column
list.  Loading here goes through that sidecar: a CSV whose schema we
do not recognize (or whose sidecar is missing) is refused rather than
guessed at.  The scripts are read-only consumers; no number in any
figure originates in this package.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# Fixed hashsalt keeps the ids inside SVG output stable across runs.
matplotlib.rcParams["svg.hashsalt"] = "dualpe-plots"

KNOWN_SCHEMA_VERSIONS = {1}
FIGURE_KINDS = ("design_scan", "gap_scan", "pbc_mc")

# Log-axis floor applied at draw time only; no CSV value is rewritten.
DISPLAY_FLOOR = 1e-16


class SchemaError(ValueError):
    """A CSV whose sidecar is missing or reports an unknown schema."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: input CSVs, kind, output path, axis scales."""

    inputs: tuple[Path, ...]
    kind: str
    out: Path
    log_x: bool = False
    log_y: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("need at least one input CSV")

    @property
    def csv(self) -> Path:
        return self.inputs[0]


@dataclass(frozen=True)
class Table:
    path: Path
    columns: tuple[str, ...]
    rows: list[dict] = field(repr=False)
    meta: dict = field(repr=False)

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise ValueError(
                f"{self.path}: missing column(s) {', '.join(missing)}"
            )


def load_table(path: str | Path) -> Table:
    """Read a scan CSV and its sidecar, refusing unknown schemas."""
    path = Path(path)
    sidecar = path.with_name(path.name + ".meta.json")
    if not sidecar.exists():
        raise SchemaError(f"{path}: no sidecar {sidecar.name}, schema unknown")
    meta = json.loads(sidecar.read_text())
    version = meta.get("schema_version")
    if version not in KNOWN_SCHEMA_VERSIONS:
        raise SchemaError(f"{path}: unknown schema_version {version!r}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        columns = tuple(reader.fieldnames or ())
    return Table(path=path, columns=columns, rows=rows, meta=meta)


def save_figure(fig, out: str | Path) -> Path:
    """Write a figure as PNG or SVG, keeping the bytes run-independent."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix.lower() == ".svg":
        # The default SVG metadata embeds a creation date.
        fig.savefig(out, metadata={"Date": None})
    else:
        fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def parse_int_set(text: str) -> list[int]:
    """\"1-3,5\" -> [1, 2, 3, 5]"""
    values: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, _, hi = part.partition("-")
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    return sorted(set(values))
