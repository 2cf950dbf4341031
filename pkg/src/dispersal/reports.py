"""Tabular experiment reports with deterministic CSV serialization.

Floats are written with ``repr`` (shortest round-trip form), so identical
runs produce byte-identical files and every value re-parses exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def empirical_orders(deltas, errors) -> list[float | None]:
    """Pairwise empirical orders ``log(e_k/e_{k+1}) / log(d_k/d_{k+1})``.

    The first entry is ``None`` (no predecessor); degenerate pairs (zero or
    non-finite errors) also yield ``None``.
    """
    orders: list[float | None] = [None]
    for k in range(1, len(deltas)):
        e0, e1 = errors[k - 1], errors[k]
        d0, d1 = deltas[k - 1], deltas[k]
        if not (math.isfinite(e0) and math.isfinite(e1)) or e0 <= 0.0 or e1 <= 0.0 or d0 == d1:
            orders.append(None)
        else:
            orders.append(math.log(e0 / e1) / math.log(d0 / d1))
    return orders


def sweep_order(deltas, errors) -> float:
    """Empirical order fitted across the whole sweep (first vs last row)."""
    return math.log(errors[0] / errors[-1]) / math.log(deltas[0] / deltas[-1])


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


@dataclass
class ConvergenceReport:
    """Rows of one parameter sweep plus free-form metadata."""

    columns: tuple[str, ...]
    rows: list[tuple]
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as handle:
            handle.write(",".join(self.columns) + "\n")
            for row in self.rows:
                handle.write(",".join(_format_cell(v) for v in row) + "\n")


def read_csv_table(path) -> tuple[list[str], list[list[str]]]:
    """Read back a report written by :meth:`ConvergenceReport.to_csv`."""
    with open(path, "r", encoding="ascii") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]
