"""CSV datasets and trace files."""

from __future__ import annotations

import csv
from importlib import resources

import numpy as np

from ..exceptions import FileFormatError
from .model import ChainTrace, QuantileModel


def load_dataset(path):
    """Read a CSV whose header names the covariates followed by the response.

    Returns ``(X, z, names)``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError("empty dataset", path) from None
        if len(header) < 2:
            raise FileFormatError("need at least one covariate column and a response column", path, 1)
        rows = []
        for no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FileFormatError(f"expected {len(header)} fields, got {len(row)}", path, no)
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise FileFormatError(str(exc), path, no) from None
    if not rows:
        raise FileFormatError("dataset has no rows", path)
    data = np.array(rows)
    return data[:, :-1], data[:, -1], [h.strip() for h in header]


def reference_path():
    return resources.files("dasandwich") / "data" / "reference.csv"


def reference_model(r: float = 0.5) -> QuantileModel:
    """The bundled ten-observation, single-covariate dataset."""
    with resources.as_file(reference_path()) as p:
        X, z, _ = load_dataset(p)
    return QuantileModel(X, z, r)


def write_trace_csv(traces, fh, keep_y=False):
    """One row per retained draw: chain, iteration, beta_*, optionally y_*."""
    traces = [traces] if isinstance(traces, ChainTrace) else list(traces)
    p = traces[0].beta.shape[1]
    header = ["chain", "iteration"] + [f"beta_{j}" for j in range(p)]
    if keep_y:
        m = traces[0].y.shape[1]
        header += [f"y_{i}" for i in range(m)]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for tr in traces:
        for k in range(len(tr)):
            row = [str(tr.stream_id), str(int(tr.iterations[k]))] + [repr(float(v)) for v in tr.beta[k]]
            if keep_y:
                row += [repr(float(v)) for v in tr.y[k]]
            w.writerow(row)
