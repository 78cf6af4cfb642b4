"""Deterministic file output: canonical fingerprints and atomic CSV/JSON writes.

Every CSV starts with a single ``#``-prefixed JSON line holding provenance,
followed by a plain header row and the data rows.  Floats are written with
``repr`` (shortest round-trip form), so reruns are byte-identical.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np


def _plain(value):
    """Convert dataclasses, numpy scalars and arrays into JSON-safe builtins."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)
                if f.init}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not math.isfinite(value):
            return repr(value)
        return value
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(value):
    """Key-sorted compact JSON; the basis of every fingerprint."""
    return json.dumps(_plain(value), sort_keys=True, separators=(",", ":"), allow_nan=False)


def fingerprint(value):
    """SHA-256 hex digest of :func:`canonical_json`."""
    return hashlib.sha256(canonical_json(value).encode()).hexdigest()


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary sibling and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, columns, rows):
    """Render the documented CSV layout as a string.

    Parameters
    ----------
    header : dict
        Provenance blob written as the leading ``#`` JSON line.
    columns : sequence of str
    rows : iterable of sequences
    """
    lines = ["# " + canonical_json(header), ",".join(columns)]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, columns, rows):
    return atomic_write_text(path, csv_text(header, columns, rows))


def write_json(path, payload):
    text = json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"
    return atomic_write_text(path, text)


def read_csv(path):
    """Parse a file written by :func:`write_csv` into (header, columns, float array)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing provenance header")
        header = json.loads(first[2:])
        columns = fh.readline().strip().split(",")
        data = [[_parse(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    return header, columns, np.array(data, dtype=float).reshape(-1, len(columns))


def _parse(token):
    if token == "true":
        return 1.0
    if token == "false":
        return 0.0
    return float(token)
