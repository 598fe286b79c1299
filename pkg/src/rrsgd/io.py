"""CSV and JSON schemas for datasets, trajectories, summaries, sweeps and profiles.

Floats are written with 17 significant digits so that reading a file and
writing it again reproduces it byte for byte.
"""
import csv
import io as _io
import json
import math
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .model import Dataset

TRAJECTORY_COLUMNS = ["epoch", "position", "sq_dev"]
SUMMARY_COLUMNS = ["epoch", "position", "mean_sq_dev", "stderr", "msd_db"]
SWEEP_COLUMNS = ["mu", "msd", "msd_db", "stderr_db", "predicted_rr", "predicted_us"]


def fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


@contextmanager
def _open(target, mode):
    if target is None or target == "-":
        import sys
        yield sys.stdout if "w" in mode else sys.stdin
    elif hasattr(target, "write") or hasattr(target, "read"):
        yield target
    else:
        with open(Path(target), mode, newline="") as fh:
            yield fh


def write_rows(target, header, rows):
    with _open(target, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def read_rows(source):
    """Header and rows (as lists of strings) of a CSV file."""
    with _open(source, "r") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty CSV")
    return rows[0], rows[1:]


def _num(s):
    try:
        return int(s)
    except ValueError:
        return float(s)


def read_table(source, expected=None):
    header, rows = read_rows(source)
    if expected is not None and header != list(expected):
        raise ValueError(f"unexpected columns {header}; want {list(expected)}")
    return header, [[_num(v) for v in r] for r in rows]


def to_csv_string(header, rows):
    buf = _io.StringIO()
    write_rows(buf, header, rows)
    return buf.getvalue()


# datasets

def write_dataset_csv(dataset, target):
    if dataset.kind == "quadratic":
        X = dataset.targets
        header = [f"target_{j}" for j in range(X.shape[1])]
        rows = X.tolist()
    else:
        X = dataset.features
        header = [f"feature_{j}" for j in range(X.shape[1])] + ["label"]
        rows = [list(x) + [int(y)] for x, y in zip(X.tolist(), dataset.labels)]
    write_rows(target, header, rows)


def read_dataset_csv(source):
    header, rows = read_rows(source)
    arr = np.array([[float(v) for v in r] for r in rows], dtype=float)
    if header and all(h.startswith("target_") for h in header):
        return Dataset(targets=arr)
    if header[-1] != "label" or not all(h.startswith("feature_") for h in header[:-1]):
        raise ValueError(f"unrecognized dataset header {header}")
    return Dataset(features=arr[:, :-1], labels=arr[:, -1])


# trajectories and summaries

def write_trajectory_csv(trajectory, target):
    write_rows(target, TRAJECTORY_COLUMNS, trajectory.rows())


def write_summary_csv(curve, target):
    write_rows(target, SUMMARY_COLUMNS, curve.rows())


def write_sweep_csv(rows, target):
    """``rows`` are dicts (or sequences) with the sweep columns."""
    out = [[r[c] for c in SWEEP_COLUMNS] if isinstance(r, dict) else r for r in rows]
    write_rows(target, SWEEP_COLUMNS, out)


def write_profile_csv(target, n, values, beta=None, bruteforce=None):
    header = (["beta"] if beta is not None else []) + ["n", "f_value"] + \
             (["f_bruteforce"] if bruteforce is not None else [])
    rows = []
    for k in range(len(n)):
        r = ([beta[k]] if beta is not None else []) + [int(n[k]), values[k]]
        if bruteforce is not None:
            r.append(bruteforce[k])
        rows.append(r)
    write_rows(target, header, rows)


# json

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, target):
    text = dumps_json(obj)
    with _open(target, "w") as fh:
        fh.write(text)


def read_json(source):
    with _open(source, "r") as fh:
        return json.load(fh)
