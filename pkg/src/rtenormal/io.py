"""Raw field files, JSON sidecars and PGM export."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .grid import AngularField, BoundaryData, GridSpec, ScalarField

__all__ = [
    "SCHEMA_VERSION",
    "write_field",
    "write_array",
    "read_field",
    "read_array",
    "render_pgm",
    "read_pgm",
    "boundary_to_polar",
]

SCHEMA_VERSION = 1

_KINDS = {"ScalarField": ScalarField, "AngularField": AngularField, "BoundaryData": BoundaryData}


def _stem(path):
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".f64", ".json") else p


def _describe(arr, kind, spec, extra):
    meta = {
        "kind": kind,
        "n_x": spec.n_x if spec else None,
        "n_d": spec.n_d if spec else None,
        "shape": list(arr.shape),
        "dtype": "<f8",
        "min": float(arr.min()) if arr.size else 0.0,
        "max": float(arr.max()) if arr.size else 0.0,
        "schema_version": SCHEMA_VERSION,
    }
    if extra:
        meta.update(extra)
    return meta


def write_array(path, arr, kind="array", spec=None, extra=None):
    """Write ``<stem>.f64`` (little-endian float64, C order) and ``<stem>.json``."""
    stem = _stem(path)
    arr = np.ascontiguousarray(arr, dtype="<f8")
    try:
        stem.parent.mkdir(parents=True, exist_ok=True)
        arr.tofile(stem.with_suffix(".f64"))
        meta = _describe(arr, kind, spec, extra)
        stem.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"{stem}: {exc}") from exc
    return stem.with_suffix(".f64")


def write_field(path, field, extra=None):
    return write_array(path, field.values, type(field).__name__, field.spec, extra)


def read_array(path):
    """Return ``(array, metadata)``."""
    stem = _stem(path)
    try:
        meta = json.loads(stem.with_suffix(".json").read_text())
        arr = np.fromfile(stem.with_suffix(".f64"), dtype="<f8")
    except OSError as exc:
        raise OSError(f"{stem}: {exc}") from exc
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{stem}: unsupported schema_version {meta.get('schema_version')!r}")
    shape = tuple(meta["shape"])
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"{stem}: {arr.size} values on disk, sidecar says {shape}")
    return arr.reshape(shape).astype(np.float64), meta


def read_field(path):
    arr, meta = read_array(path)
    cls = _KINDS.get(meta["kind"])
    if cls is None:
        raise ValueError(f"{path}: not a field file (kind {meta['kind']!r})")
    return cls(GridSpec(meta["n_x"], meta["n_d"]), arr)


def render_pgm(field, path, flip=True):
    """8-bit binary PGM, min-max normalized; a constant image maps to 0.

    Rows are flipped so that ``+y`` points up. The normalization goes to
    ``<path>.json``.
    """
    values = field.values if hasattr(field, "values") else np.asarray(field, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("render_pgm needs a 2-D image")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: cannot render non-finite values")
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    if span > 0:
        pix = np.rint(255.0 * (values - lo) / span)
    else:
        pix = np.zeros_like(values)
    pix = pix.astype(np.uint8)
    if flip:
        pix = pix[::-1]
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(f"P5\n{pix.shape[1]} {pix.shape[0]}\n255\n".encode("ascii"))
            fh.write(pix.tobytes())
        side = {"min": lo, "max": hi, "scale": 255.0 / span if span > 0 else 0.0, "rows_flipped": bool(flip),
                "schema_version": SCHEMA_VERSION}
        Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"{path}: {exc}") from exc
    return path


def read_pgm(path):
    """Pixels of a binary PGM as written by :func:`render_pgm` (file row order)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


def boundary_to_polar(b, n_pos=None):
    """Resample boundary data onto (boundary position angle, direction) axes.

    Returns ``(values, positions)`` with ``values[k, i]`` the outgoing value
    at the boundary point of polar angle ``positions[k]`` in direction
    ``eta_i``; the chord is ``y = sin(position - eta)``, linearly
    interpolated, and incoming pairs (``cos(position - eta) <= 0``) are 0.
    """
    spec = b.spec
    n_pos = spec.n_x if n_pos is None else int(n_pos)
    positions = 2.0 * np.pi * (np.arange(n_pos) + 0.5) / n_pos
    rel = positions[:, None] - spec.angles[None, :]
    y = np.sin(rel)
    out = np.zeros((n_pos, spec.n_d))
    for i in range(spec.n_d):
        out[:, i] = np.interp(y[:, i], spec.nodes, b.values[i], left=0.0, right=0.0)
    out[np.cos(rel) <= 0] = 0.0
    return out, positions
