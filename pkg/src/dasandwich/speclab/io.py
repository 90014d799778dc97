"""Plain-text formats for joint tables, group actions and spectral reports.

Table file::

    # comments and blank lines are ignored
    rows 2
    cols 2
    0.3 0.2
    0.1 0.4

The ``rows`` and ``cols`` headers come first, followed by exactly
``rows`` lines of ``cols`` probabilities each (row-major, row = state of
X). Action file::

    states 4
    perm 1 0 3 2
    generator 1 2 3 0

``perm`` lines list group elements explicitly (the identity is implied);
``generator`` lines are closed under composition. A file may mix both.
Each permutation is written as the images ``g0 g1 ... g(n-1)``.

Reports are ``key=value`` lines, one per field of
:meth:`SpectralReport.as_record`.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..exceptions import FileFormatError, ParameterError
from .core import GroupAction, JointTable


def _content_lines(path):
    text = Path(path).read_text()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def _header(path, items, key):
    try:
        no, line = next(items)
    except StopIteration:
        raise FileFormatError(f"missing '{key}' header", path) from None
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise FileFormatError(f"expected '{key} <count>', got {line!r}", path, no)
    try:
        value = int(parts[1])
    except ValueError:
        raise FileFormatError(f"'{key}' count is not an integer: {parts[1]!r}", path, no) from None
    if value <= 0:
        raise FileFormatError(f"'{key}' must be positive, got {value}", path, no)
    return value


def _floats(path, no, parts):
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FileFormatError(str(exc), path, no) from None


def _ints(path, no, parts):
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise FileFormatError(str(exc), path, no) from None


def load_table(path) -> JointTable:
    items = _content_lines(path)
    nrows = _header(path, items, "rows")
    ncols = _header(path, items, "cols")
    rows = []
    last = None
    for no, line in items:
        if len(rows) == nrows:
            raise FileFormatError(f"more than {nrows} data rows", path, no)
        vals = _floats(path, no, line.split())
        if len(vals) != ncols:
            raise FileFormatError(f"expected {ncols} values, got {len(vals)}", path, no)
        rows.append(vals)
        last = no
    if len(rows) != nrows:
        raise FileFormatError(f"expected {nrows} data rows, got {len(rows)}", path, last)
    try:
        return JointTable(np.array(rows))
    except ParameterError as exc:
        raise FileFormatError(str(exc), path) from None


def load_action(path) -> GroupAction:
    items = _content_lines(path)
    n = _header(path, items, "states")
    perms, gens = [], []
    for no, line in items:
        kind, *rest = line.split()
        if kind not in ("perm", "generator"):
            raise FileFormatError(f"unknown directive {kind!r}", path, no)
        images = _ints(path, no, rest)
        if sorted(images) != list(range(n)):
            raise FileFormatError(f"not a permutation of {n} states: {images}", path, no)
        (perms if kind == "perm" else gens).append((no, images))
    try:
        if gens:
            closure = GroupAction.from_generators(n, [g for _, g in gens + perms])
            return closure
        return GroupAction([list(range(n))] + [p for _, p in perms], n)
    except ParameterError as exc:
        raise FileFormatError(str(exc), path) from None


def format_report(record: dict) -> str:
    return "".join(f"{k}={v}\n" for k, v in record.items())


def parse_report(text: str) -> dict:
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        if "=" not in raw:
            raise FileFormatError(f"expected key=value, got {raw!r}", line=no)
        k, v = raw.split("=", 1)
        out[k] = v
    return out
