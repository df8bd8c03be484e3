"""On-disk formats.

A dataset is a directory with ``manifest.json``::

    {"format": "ringlasso-dataset", "version": 1, "n": 2, "p": 3,
     "rows": [10, 12], "files": ["task_000.csv", "task_001.csv"]}

and one headerless CSV per task whose rows are ``y, x_1, ..., x_p``.
Coefficient matrices are written as ``p`` CSV rows of ``n`` values.  Floats
are written with ``repr`` (shortest round-trip form), so files are
byte-stable and reload exactly.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .exceptions import DatasetFormatError
from .model import MultiTaskDataset, Task

MANIFEST = "manifest.json"
FORMAT_NAME = "ringlasso-dataset"
FORMAT_VERSION = 1


def fmt(x):
    """Shortest decimal string that reads back to the same double."""
    x = float(x)
    if x == 0:
        return "0.0"  # folds -0.0 as well
    return repr(x)


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (str, int)) and not isinstance(v, bool)
                        else fmt(v) for v in row])


def _read_numeric_csv(path, width=None):
    rows = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DatasetFormatError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if width is not None and len(row) != width:
                raise DatasetFormatError(
                    f"{path}: row {lineno} has {len(row)} columns, expected {width}")
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise DatasetFormatError(f"{path}: row {lineno}: {exc}") from exc
            if not all(np.isfinite(vals)):
                raise DatasetFormatError(f"{path}: row {lineno} has a non-finite value")
            if width is None:
                width = len(row)
            rows.append(vals)
    return np.array(rows, dtype=float).reshape(-1, width or 0)


def write_dataset(dataset, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = []
    for i, t in enumerate(dataset.tasks):
        name = f"task_{i:03d}.csv"
        write_rows(d / name, np.column_stack([t.response, t.design]))
        files.append(name)
    manifest = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "n": dataset.n,
                "p": dataset.p, "rows": dataset.rows, "files": files}
    (d / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n")
    return d / MANIFEST


def read_dataset(path):
    """Load a dataset from its manifest (or the directory holding it)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise DatasetFormatError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(manifest, dict):
        raise DatasetFormatError(f"{path}: manifest must be an object")
    missing = {"n", "p", "rows", "files"} - manifest.keys()
    if missing:
        raise DatasetFormatError(f"{path}: manifest lacks {sorted(missing)}")
    if manifest.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise DatasetFormatError(f"{path}: unknown format {manifest['format']!r}")
    if manifest.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {manifest['version']!r}")
    n, p = manifest["n"], manifest["p"]
    files, rows = manifest["files"], manifest["rows"]
    if not (len(files) == len(rows) == n):
        raise DatasetFormatError(f"{path}: n={n} but {len(files)} files and {len(rows)} row counts")
    tasks = []
    for name, m in zip(files, rows):
        f = path.parent / name
        Z = _read_numeric_csv(f, width=p + 1)
        if Z.shape[0] != m:
            raise DatasetFormatError(f"{f}: {Z.shape[0]} rows, manifest says {m}")
        tasks.append(Task(Z[:, 1:], Z[:, 0]))
    return MultiTaskDataset(tuple(tasks))


def write_coef(B, path):
    write_rows(path, np.atleast_2d(np.asarray(B, dtype=float)))


def read_coef(path, shape=None):
    B = _read_numeric_csv(path)
    if shape is not None and B.shape != tuple(shape):
        raise DatasetFormatError(f"{path}: coefficients have shape {B.shape}, expected {tuple(shape)}")
    return B


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if hasattr(v, "to_dict"):
        return v.to_dict()
    raise TypeError(f"cannot serialise {type(v).__name__}")
