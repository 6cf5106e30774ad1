"""JSON and CSV writers for evaluation reports."""

import csv
import json

import numpy as np

from .diagnostics import _jsonable

__all__ = ["write_json", "write_curve_csv", "write_traces_csv"]


def write_json(obj, path):
    """Write a report (anything with ``to_dict``) or a plain mapping."""
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curve_csv(curve, path):
    """One row per window centre: bin, accuracy, sd, truncated."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin", "accuracy", "sd", "truncated"])
        for t, (acc, sd, trunc) in enumerate(zip(curve.accuracy, curve.sd, curve.truncated)):
            writer.writerow([t, repr(float(acc)), repr(float(sd)), int(trunc)])


def write_traces_csv(traces, path, names=None):
    """Rows of ``traces`` (n_series, n_timesteps) as ``series, bin, value``."""
    traces = np.asarray(traces)
    names = names or [str(i) for i in range(traces.shape[0])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "bin", "value"])
        for name, row in zip(names, traces):
            for t, v in enumerate(row):
                writer.writerow([name, t, repr(float(v))])
