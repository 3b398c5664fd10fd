"""CSV and JSON writers with byte-stable output."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else
                                                  ("inf" if x > 0 else "-inf"))
    return str(x)


def csv_text(columns, rows):
    """CSV with a header row, ``\\n`` line endings and round-trip floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def table_rows(columns: dict):
    """Rows from a mapping of equal-length columns."""
    return list(zip(*columns.values()))


def read_csv_columns(text):
    """Float columns keyed by header from CSV text."""
    reader = csv.reader(io.StringIO(text.strip()))
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return {h.strip(): data[:, i] for i, h in enumerate(header)}


def plain(obj):
    """JSON-ready copy with numpy scalars and arrays converted."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def json_text(obj):
    return json.dumps(plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def sha256_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_text(path: Path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
