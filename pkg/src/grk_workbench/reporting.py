"""JSON and CSV serialization with fixed float formatting and atomic file writes.

Floats are written with 17 significant digits so every value round-trips
exactly; NaN and infinities become JSON null.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, is_dataclass
from enum import Enum

import numpy as np

EXTREMAL_HEADER = ("t", "psi_t", "psi_ntt", "psi_u", "p1", "p2", "p3", "phi1", "phi2", "phi3", "control", "H")
LANDSCAPE_HEADER = ("k1", "k2", "queries", "residual_probability")


class OutputError(OSError):
    pass


def format_float(x: float) -> str:
    return "%.17g" % x


def _plain(obj):
    """Reduce reports, numpy values and containers to JSON-ready Python values."""
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    return obj


def _encode(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj) if math.isfinite(obj) else "null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(k) + ": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(report) -> str:
    out: list[str] = []
    _encode(_plain(report), out)
    return "".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(float(v)) if math.isfinite(v) else ""
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def trajectory_rows(traj):
    for i, t in enumerate(traj.times):
        yield (t, *traj.psi[i], *traj.p[i], *traj.phi[i], traj.control[i], traj.hamiltonian[i])


def landscape_rows(table: np.ndarray):
    for k1 in range(table.shape[0]):
        for k2 in range(table.shape[1]):
            yield (k1, k2, k1 + k2 + 1, float(table[k1, k2]))


def emit_report(report, format: str = "json") -> bytes:
    """Serialize a report.  ``format`` is "json", "csv-extremal" or "csv-landscape"."""
    if format == "json":
        return to_json(report).encode()
    if format == "csv-extremal":
        return to_csv(EXTREMAL_HEADER, trajectory_rows(report)).encode()
    if format == "csv-landscape":
        return to_csv(LANDSCAPE_HEADER, landscape_rows(np.asarray(report))).encode()
    raise ValueError(f"unknown format {format!r}")


def write_atomic(path: str, data: bytes) -> None:
    """Write to a temporary file beside ``path`` and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OutputError(f"cannot write {path}: {exc}") from exc
