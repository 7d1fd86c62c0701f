"""CSV and JSON persistence with byte-stable formatting."""
from __future__ import annotations

import csv
import io
import json

import numpy as np

from ..regressor import Dataset


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_csv(path, rows, columns):
    """Write dict rows; floats use ``repr`` so reruns give identical bytes."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        # JSON has no NaN or infinity
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def dataset_columns(d):
    return [f"x_{i}" for i in range(1, d + 1)] + ["y"]


def write_dataset(path, data: Dataset):
    cols = dataset_columns(data.dim)
    rows = []
    for x, y in zip(data.X, data.y):
        row = {f"x_{i + 1}": float(v) for i, v in enumerate(x)}
        row["y"] = float(y)
        rows.append(row)
    write_csv(path, rows, cols)


def read_dataset(path):
    """Read a CSV with columns ``x_1..x_d, y``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        xcols = sorted((c for c in reader.fieldnames if c.startswith("x_")),
                       key=lambda c: int(c[2:]))
        if "y" not in reader.fieldnames or not xcols:
            raise ValueError(f"{path}: expected columns x_1..x_d and y")
        X, y = [], []
        for row in reader:
            X.append([float(row[c]) for c in xcols])
            y.append(float(row["y"]))
    return Dataset(np.array(X, dtype=float).reshape(len(y), len(xcols)), np.array(y))
