"""JSON and CSV artifact writers with byte-stable float rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

CSV_SCHEMA_VERSION = 1


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps_json(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=False) + "\n"


def format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def dumps_csv(columns, rows):
    buf = io.StringIO()
    buf.write(f"# schema_version={CSV_SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def read_csv(path):
    """Parse a CSV written by :func:`dumps_csv` into (columns, list of str dicts)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return reader.fieldnames, list(reader)


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_json(path, obj):
    return write_text(path, dumps_json(obj))


def write_csv(path, columns, rows):
    return write_text(path, dumps_csv(columns, rows))


def write_report(report, out_dir, extra=None):
    """``<theorem_id>_<seed>.json`` and ``.csv``; returns the written paths."""
    tag = f"{report.theorem_id}_{report.seed if report.seed is not None else 'none'}"
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    out = Path(out_dir)
    return [write_json(out / f"{tag}.json", payload),
            write_csv(out / f"{tag}.csv", report.columns, report.rows)]
