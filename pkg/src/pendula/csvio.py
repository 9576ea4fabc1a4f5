"""Plain CSV artifacts: ',' separator, '.' decimal, LF endings, UTF-8.

Floats are written with :func:`repr` (shortest round-trip form), so
reading a file back reproduces the arrays bit for bit.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["format_value", "write_columns", "read_columns"]


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_columns(path, columns):
    """Write a mapping ``name -> 1-D sequence`` as a CSV with a header row.

    Raises
    ------
    ValueError
        Columns of unequal length.
    """
    names = list(columns)
    data = [list(columns[n]) for n in names]
    if len({len(c) for c in data}) > 1:
        raise ValueError("all columns must have the same length")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([format_value(v) for v in row])


def _column(values):
    try:
        return np.array([float(v) for v in values])
    except ValueError:
        return np.array(values, dtype=object)


def read_columns(path):
    """Read a CSV written by :func:`write_columns` into ``name -> ndarray``.

    Numeric columns come back as float arrays, anything else as objects.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file, expected a header row")
    header, body = rows[0], rows[1:]
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: ragged rows")
    return {name: _column([r[i] for r in body]) for i, name in enumerate(header)}
