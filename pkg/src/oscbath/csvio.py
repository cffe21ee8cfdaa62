"""Comma-separated tables with a header row and full float precision."""
import csv

import numpy as np

PRECISION = 17


def write_table(path, columns, precision=PRECISION):
    """Write ``columns`` (mapping name -> 1-D array) as CSV."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float).ravel() for n in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="",
               fmt=f"%.{precision}g")


def read_table(path):
    """Read a CSV written by :func:`write_table` into a dict of arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty table")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    try:
        data = np.array([[float(c) for c in r] for r in body], dtype=float).reshape(len(body), -1)
    except ValueError as err:
        raise ValueError(f"{path}: non-numeric entry ({err})") from None
    if body and data.shape[1] != len(header):
        raise ValueError(f"{path}: row width does not match header")
    return {name: data[:, i] for i, name in enumerate(header)}


def write_summary(path, rows, precision=PRECISION):
    """Rows of ``(metric, value, tolerance, passed)``; ``passed`` may be None."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value", "tolerance", "pass"])
        for metric, value, tol, passed in rows:
            flag = "" if passed is None else ("pass" if passed else "fail")
            w.writerow([metric, _fmt(value, precision), _fmt(tol, precision), flag])


def read_summary(path):
    with open(path, newline="") as fh:
        return {r["metric"]: r for r in csv.DictReader(fh)}


def _fmt(value, precision):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.{precision}g}"
