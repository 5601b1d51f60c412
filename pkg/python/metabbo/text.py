"""
Deal with text, mostly around iterables of texts or numbers which we want to pretty print.
Should not import other modules of this package (so that metabbo.errors remains widely importable)
"""

import csv
import os.path
from typing import Iterable, Optional, Sequence

from tabulate import tabulate


def join_with_quotes(names):
    """
    Individually wrap the names in quotes and return comma-separated names in a string.

    If the input is a set of names, the names are sorted first.
    If the input is a list of names, the order of the list is respected.

    >>> join_with_quotes(["sphere", "schwefel"])
    "'sphere', 'schwefel'"
    >>> join_with_quotes({"sphere", "schwefel"})
    "'schwefel', 'sphere'"
    """
    if isinstance(names, (set, frozenset)):
        return ", ".join("'{}'".format(name) for name in sorted(names))
    else:
        return ", ".join("'{}'".format(name) for name in names)


def format_scientific(value: Optional[float]) -> str:
    """
    Format a number the way result tables show objective values.

    >>> format_scientific(3.448e-07)
    '3.448E-07'
    >>> format_scientific(None)
    '---'
    """
    if value is None:
        return "---"
    return "{:.3E}".format(value)


def format_lines(value_rows: Iterable[Sequence], header_row: Sequence[str]) -> str:
    """
    Format a list of rows which each have a list of values, with a header and a row count.

    >>> print(format_lines([["sphere", 1], ["schwefel", 2]], header_row=["problem", "rank"]))
    problem      rank
    ---------  ------
    sphere          1
    schwefel        2
    (2 rows)
    >>> print(format_lines([], header_row=["problem"]))
    problem
    ---------
    (0 rows)
    """
    rows = [list(row) for row in value_rows]
    for row in rows:
        if len(row) != len(header_row):
            raise ValueError("unexpected row length: got {:d}, expected {:d}".format(len(row), len(header_row)))
    row_count = "({:d} {})".format(len(rows), "row" if len(rows) == 1 else "rows")
    if not rows:
        return "\n".join([" ".join(header_row), "-" * max(9, len(" ".join(header_row))), row_count])
    return tabulate(rows, headers=list(header_row)) + "\n" + row_count


def format_csv_value(value) -> str:
    """
    Format a value for CSV output so that floats round-trip exactly and missing values stay empty.

    >>> [format_csv_value(v) for v in (0.1, 3, None, "rand1", True)]
    ['0.10000000000000001', '3', '', 'rand1', 'true']
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    if hasattr(value, "dtype") and value.dtype.kind == "f":
        return "%.17g" % float(value)
    return str(value)


def write_csv(filename: str, header_row: Sequence[str], value_rows: Iterable[Sequence]) -> int:
    """
    Write rows (with fixed column order) to a CSV file and return the number of rows written.

    Missing parent directories are created.
    """
    directory = os.path.dirname(filename)
    if directory:
        os.makedirs(directory, exist_ok=True)
    count = 0
    with open(filename, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header_row)
        for row in value_rows:
            if len(row) != len(header_row):
                raise ValueError("unexpected row length: got {:d}, expected {:d}".format(len(row), len(header_row)))
            writer.writerow([format_csv_value(value) for value in row])
            count += 1
    return count
