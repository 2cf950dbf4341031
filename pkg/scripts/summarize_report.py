#!/usr/bin/env python3
"""Print a fitted-order table for one radius-sweep ``report.csv``.

Usage: ``python3 summarize_report.py path/to/report.csv``

Works with the reports of all three sweep experiments; the error column
is whichever of ``error``, ``abs_gap``, ``sup_gap`` the file carries.
"""

from __future__ import annotations

import sys
from pathlib import Path

from dispersal import empirical_orders, read_csv_table, sweep_order

ERROR_COLUMNS = ("error", "abs_gap", "sup_gap")


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    path = Path(argv[1])
    header, rows = read_csv_table(path)
    try:
        column = next(c for c in ERROR_COLUMNS if c in header)
    except StopIteration:
        print(f"error: {path} has no column out of {ERROR_COLUMNS}", file=sys.stderr)
        return 2
    deltas = [float(row[header.index("delta")]) for row in rows]
    errors = [float(row[header.index(column)]) for row in rows]
    orders = empirical_orders(deltas, errors)

    print(f"{path}  ({column})")
    print(f"  {'delta':>8s} {column:>14s} {'order':>8s}")
    for delta, err, order in zip(deltas, errors, orders):
        order_text = "" if order is None else f"{order:8.3f}"
        print(f"  {delta:8.4f} {err:14.6e} {order_text:>8s}")
    if len(deltas) > 1:
        print(f"  endpoint fit over the sweep: {sweep_order(deltas, errors):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
