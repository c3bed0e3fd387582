"""Report and plot-data emission: schema-versioned JSON, delimited CSV.

Numbers in JSON reports are serialized with 17 significant digits so that
reports round-trip float values exactly; eigenvalue tracks go to CSV with
the header ``t,j,lambda`` and complex plane dumps use adjacent re,im
columns.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .config import SCHEMA_VERSION
from .errors import ConfigError

__all__ = [
    "dumps17",
    "emit_report",
    "emit_error_report",
    "emit_tracks",
    "read_tracks",
    "emit_crossings",
    "dump_plane",
    "write_plane_path_csv",
    "read_plane_path_csv",
    "read_reference_plane_csv",
    "write_reference_plane_csv",
]


def _format_float(x):
    if not np.isfinite(x):
        raise ValueError("non-finite number in report")
    return f"{x:.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, complex):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def dumps17(obj, indent=2):
    """JSON text with floats at 17 significant digits."""

    def render(node, depth):
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
        if isinstance(node, dict):
            if not node:
                return "{}"
            items = (f'{pad_in}{json.dumps(str(k))}: {render(v, depth + 1)}'
                     for k, v in node.items())
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(node, list):
            if not node:
                return "[]"
            items = (f"{pad_in}{render(v, depth + 1)}" for v in node)
            return "[\n" + ",\n".join(items) + "\n" + pad + "]"
        if isinstance(node, bool):
            return "true" if node else "false"
        if node is None:
            return "null"
        if isinstance(node, float):
            return _format_float(node)
        return json.dumps(node)

    return render(_jsonable(obj), 0) + "\n"


def emit_report(report, path, *, command=None):
    """Write a schema-versioned JSON report."""
    payload = {"schema_version": SCHEMA_VERSION}
    if command is not None:
        payload["command"] = command
    payload.update(_jsonable(report))
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(dumps17(payload))
    except OSError as exc:
        raise ConfigError(f"cannot write report {path}: {exc}") from exc
    return payload


def emit_error_report(exc, path, *, command=None):
    report = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    return emit_report(report, path, command=command)


def emit_tracks(t, tracks, path):
    """Eigenvalue tracks as CSV rows t,j,lambda."""
    t = np.asarray(t, dtype=float)
    arr = np.asarray(tracks, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write("t,j,lambda\n")
            for i, ti in enumerate(t):
                for j in range(arr.shape[1]):
                    fh.write(f"{_format_float(ti)},{j},{_format_float(arr[i, j])}\n")
    except OSError as exc:
        raise ConfigError(f"cannot write tracks {path}: {exc}") from exc


def read_tracks(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,j,lambda":
            raise ConfigError(f"unexpected tracks header {header!r} in {path}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = {}
    for ts, js, lam in rows:
        data.setdefault(float(ts), {})[int(js)] = float(lam)
    ts = sorted(data)
    width = max(len(v) for v in data.values())
    arr = np.full((len(ts), width), np.nan)
    for i, ti in enumerate(ts):
        for j, lam in data[ti].items():
            arr[i, j] = lam
    return np.asarray(ts), arr


def emit_crossings(crossings, path):
    """Crossing inventory as CSV: location, dimension, signature."""
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w") as fh:
            fh.write("s,dim,signature\n")
            for c in crossings:
                loc = c.get("s", c.get("t", c.get("theta")))
                sign = c.get("signature", c.get("direction"))
                fh.write(f"{_format_float(float(loc))},{int(c['dim']) if 'dim' in c else ''},"
                         f"{'' if sign is None else int(sign)}\n")
    except OSError as exc:
        raise ConfigError(f"cannot write crossings {path}: {exc}") from exc


def dump_plane(plane, path):
    """Debug dump: the 2n x n basis matrix with re,im cell pairs."""
    B = plane.basis
    with open(path, "w") as fh:
        fh.write(",".join(f"b{j}_re,b{j}_im" for j in range(B.shape[1])) + "\n")
        for row in B:
            fh.write(",".join(f"{_format_float(z.real)},{_format_float(z.imag)}"
                              for z in row) + "\n")


def write_plane_path_csv(samples, path):
    """Sampled plane path: one basis vector per row, (s, j, components).

    ``samples`` is a list of (s, basis_matrix) pairs.
    """
    dim = samples[0][1].shape[0]
    with open(path, "w") as fh:
        cols = ",".join(f"c{i}_re,c{i}_im" for i in range(dim))
        fh.write(f"s,j,{cols}\n")
        for s, B in samples:
            for j in range(B.shape[1]):
                comps = ",".join(f"{_format_float(z.real)},{_format_float(z.imag)}"
                                 for z in B[:, j])
                fh.write(f"{_format_float(s)},{j},{comps}\n")


def _parse_vector_rows(rows, lead):
    if not rows:
        raise ConfigError("empty plane CSV")
    width = len(rows[0]) - lead
    if width % 2:
        raise ConfigError("plane CSV must hold re,im column pairs")
    dim = width // 2
    out = []
    for row in rows:
        vec = np.array([float(row[lead + 2 * i]) + 1j * float(row[lead + 2 * i + 1])
                        for i in range(dim)])
        out.append((row[:lead], vec))
    return dim, out


def read_plane_path_csv(path):
    """Inverse of :func:`write_plane_path_csv`: {s: basis matrix}."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("s,j,"):
            raise ConfigError(f"unexpected plane-path header in {path}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    dim, parsed = _parse_vector_rows(rows, 2)
    groups = {}
    for (s, j), vec in parsed:
        groups.setdefault(float(s), {})[int(j)] = vec
    out = {}
    for s, cols in sorted(groups.items()):
        B = np.column_stack([cols[j] for j in sorted(cols)])
        out[s] = B
    return out


def read_reference_plane_csv(path):
    """A single plane: rows (j, components)."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("j,"):
            raise ConfigError(f"unexpected reference-plane header in {path}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    _, parsed = _parse_vector_rows(rows, 1)
    cols = {int(j[0]): vec for j, vec in parsed}
    return np.column_stack([cols[j] for j in sorted(cols)])


def write_reference_plane_csv(basis, path):
    basis = np.asarray(basis, dtype=complex)
    with open(path, "w") as fh:
        cols = ",".join(f"c{i}_re,c{i}_im" for i in range(basis.shape[0]))
        fh.write(f"j,{cols}\n")
        for j in range(basis.shape[1]):
            comps = ",".join(f"{_format_float(z.real)},{_format_float(z.imag)}"
                             for z in basis[:, j])
            fh.write(f"{j},{comps}\n")
