"""CSV emission helpers shared by the CLI and the acceptance harness.

All numeric output uses 17 significant digits, '.' decimal separator, LF
line endings, and a header row, so reruns with identical inputs are byte
identical.
"""
from __future__ import annotations

import numpy as np


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, complex):
        return f"{fmt(value.real)}{'+' if value.imag >= 0 else '-'}{fmt(abs(value.imag))}j"
    return "%.17g" % (float(value) + 0.0)  # +0.0 folds negative zero


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if not isinstance(v, str) else v for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def matrix_rows(matrix):
    """Row-major (i, j, value) triples of a dense matrix."""
    n_rows, n_cols = matrix.shape
    for i in range(n_rows):
        for j in range(n_cols):
            yield (i, j, matrix[i, j])
