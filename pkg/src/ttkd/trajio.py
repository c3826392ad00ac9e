"""File formats: binary/CSV trajectories with metadata sidecars, results
JSON, and eigenfunction CSV exports.

Binary trajectory layout: magic "TTKD", u32 version 1, u64 d, u64 m, then m
snapshots of d little-endian float64 each (snapshot-contiguous). The CSV
alternative has a header row of column names and one snapshot per row.
Floats in text outputs use 17 significant digits so values round-trip.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import SchemaError, ValidationError

__all__ = [
    "write_trajectory",
    "read_trajectory",
    "write_metadata",
    "read_metadata",
    "write_results",
    "read_results",
    "write_phi_csv",
    "read_phi_csv",
    "write_grid_eval_csv",
    "read_grid_eval_csv",
]

MAGIC = b"TTKD"
VERSION = 1
FLOAT_FMT = "%.17g"
RESULTS_SCHEMA_VERSION = 1


def write_trajectory(path, data: np.ndarray) -> None:
    """Write a (d, m) trajectory; '.csv' suffix selects the text format."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    path = Path(path)
    d, m = data.shape
    if path.suffix == ".csv":
        header = ",".join(f"x{i + 1}" for i in range(d))
        np.savetxt(path, data.T, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")
        return
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<QQ", d, m))
        fh.write(data.T.astype("<f8").tobytes())  # snapshot-contiguous


def read_trajectory(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".csv":
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return arr.T.copy()
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SchemaError(f"{path} is not a trajectory file (bad magic {magic!r})")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise SchemaError(f"unsupported trajectory version {version}")
        d, m = struct.unpack("<QQ", fh.read(16))
        payload = fh.read(8 * d * m)
        if len(payload) != 8 * d * m:
            raise SchemaError(f"{path} is truncated")
        return np.frombuffer(payload, dtype="<f8").reshape(m, d).T.copy()


def _meta_path(path) -> Path:
    return Path(str(path) + ".meta.json")


def write_metadata(path, meta: dict) -> None:
    with open(_meta_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metadata(path) -> dict | None:
    meta_path = _meta_path(path)
    if not meta_path.exists():
        return None
    with open(meta_path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_results(path, results: dict) -> None:
    results = dict(results)
    results.setdefault("schema_version", RESULTS_SCHEMA_VERSION)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_results(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "eigenvalues" not in doc:
        raise SchemaError(f"{path} is not a results document")
    if doc.get("schema_version") != RESULTS_SCHEMA_VERSION:
        raise SchemaError(f"unsupported results schema {doc.get('schema_version')}")
    return doc


def eigenvalues_to_json(values) -> list[dict]:
    out = []
    for lam in np.asarray(values):
        lam = complex(lam)
        out.append({"re": lam.real, "im": lam.imag})
    return out


def eigenvalues_from_json(entries) -> np.ndarray:
    try:
        vals = np.array([complex(e["re"], e["im"]) for e in entries])
    except (KeyError, TypeError) as exc:
        raise SchemaError("eigenvalue entries need 're' and 'im'") from exc
    if vals.size and np.max(np.abs(vals.imag)) == 0.0:
        return vals.real
    return vals


def write_phi_csv(path, phi: np.ndarray) -> None:
    """One row per eigenfunction, m columns (real parts)."""
    phi = np.atleast_2d(np.asarray(phi))
    np.savetxt(path, np.real(phi), fmt=FLOAT_FMT, delimiter=",")


def read_phi_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_grid_eval_csv(path, points: np.ndarray, phi: np.ndarray) -> None:
    """Eigenfunction values at every snapshot: columns x1..xd, phi_1..phi_q."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    phi = np.real(np.atleast_2d(np.asarray(phi)))
    if points.shape[1] != phi.shape[1]:
        raise ValidationError("point count and eigenfunction length differ")
    d, q = points.shape[0], phi.shape[0]
    header = ",".join(
        [f"x{i + 1}" for i in range(d)] + [f"phi_{k + 1}" for k in range(q)]
    )
    table = np.vstack([points, phi]).T
    np.savetxt(path, table, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")


def read_grid_eval_csv(path):
    """Returns (points (d, m), phi (q, m)) split on the column names."""
    with open(path, "r", encoding="utf-8") as fh:
        names = fh.readline().strip().split(",")
    n_coord = sum(1 for n in names if n.startswith("x"))
    n_phi = sum(1 for n in names if n.startswith("phi_"))
    if n_coord + n_phi != len(names) or n_coord == 0 or n_phi == 0:
        raise SchemaError(f"unexpected grid-eval columns {names}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).T
    return table[:n_coord], table[n_coord:]
