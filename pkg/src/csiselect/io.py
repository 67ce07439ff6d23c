"""File formats: embeddings/matrices as CSV or raw binary, dataset CSV round-trips.

Binary matrix layout: 8-byte header of two little-endian uint32 (rows, cols),
followed by rows*cols little-endian float64 values in row-major order.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<II")


def write_matrix_bin(path, M: np.ndarray) -> None:
    M = np.ascontiguousarray(np.asarray(M, dtype=np.float64))
    if M.ndim != 2:
        raise ValueError("binary matrix format is 2-D only")
    n, d = M.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, d))
        fh.write(M.astype("<f8", copy=False).tobytes(order="C"))


def read_matrix_bin(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise OSError(f"{path}: truncated header")
        n, d = _HEADER.unpack(head)
        raw = fh.read()
    if len(raw) != n * d * 8:
        raise OSError(f"{path}: expected {n * d * 8} payload bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype="<f8").reshape(n, d).astype(np.float64)


def _is_numeric_row(tokens) -> bool:
    try:
        for t in tokens:
            float(t)
    except ValueError:
        return False
    return len(tokens) > 0


def read_embeddings_csv(path) -> np.ndarray:
    """Read a points-by-dimensions CSV; a single leading header row is allowed."""
    with open(path, "r", newline="") as fh:
        first = fh.readline()
    tokens = [t.strip() for t in first.strip().split(",")]
    skip = 0 if _is_numeric_row(tokens) else 1
    E = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2, dtype=np.float64)
    if E.size == 0:
        raise OSError(f"{path}: no data rows")
    return E


def write_embeddings_csv(path, E: np.ndarray, header: bool = True) -> None:
    E = np.asarray(E, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{j}" for j in range(E.shape[1])])
        for row in E:
            w.writerow([repr(float(v)) for v in row])


def read_labels_csv(path) -> np.ndarray:
    """One integer class label per line; a single non-numeric header row is allowed."""
    with open(path, "r", newline="") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise OSError(f"{path}: empty label file")
    start = 0 if _is_numeric_row(lines[0].split(",")) else 1
    return np.array([int(float(ln.split(",")[0])) for ln in lines[start:]], dtype=np.int64)


def write_indices_txt(path, indices) -> None:
    with open(path, "w") as fh:
        for i in indices:
            fh.write(f"{int(i)}\n")


def read_indices_txt(path) -> list[int]:
    with open(path) as fh:
        return [int(ln) for ln in fh.read().split()]


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# --- dataset CSV (embeddings plus per-point metadata columns) ----------------

def write_dataset_csv(path, E: np.ndarray, columns: dict) -> None:
    """Write embeddings with named metadata columns appended after the x* columns."""
    E = np.asarray(E, dtype=np.float64)
    names = [f"x{j}" for j in range(E.shape[1])] + list(columns)
    cols = [np.asarray(c) for c in columns.values()]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for i in range(E.shape[0]):
            row = [repr(float(v)) for v in E[i]]
            for c in cols:
                v = c[i]
                row.append(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v))
            w.writerow(row)


def read_dataset_csv(path) -> tuple[np.ndarray, dict]:
    """Inverse of write_dataset_csv: returns (embeddings, metadata columns)."""
    with open(path, "r", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise OSError(f"{path}: no data rows")
    header = rows[0]
    emb_cols = [i for i, name in enumerate(header) if name.startswith("x") and name[1:].isdigit()]
    if not emb_cols:
        raise OSError(f"{path}: no embedding columns (x0, x1, ...) in header")
    meta_cols = [i for i in range(len(header)) if i not in emb_cols]
    E = np.array([[float(r[i]) for i in emb_cols] for r in rows[1:]], dtype=np.float64)
    meta = {}
    for i in meta_cols:
        vals = [r[i] for r in rows[1:]]
        if all(_is_numeric_row([v]) for v in vals):
            arr = np.array([float(v) for v in vals])
            if np.all(arr == np.round(arr)):
                arr = arr.astype(np.int64)
            meta[header[i]] = arr
        else:
            meta[header[i]] = np.array(vals, dtype=object)
    return E, meta


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
