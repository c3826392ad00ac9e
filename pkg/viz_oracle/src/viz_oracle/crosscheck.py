"""Independent dense re-computation of EDMD/CCA spectra.

Re-reads the trajectory, basis spec, and results files with its own parsers,
rebuilds the dense transformed data matrices, runs the textbook AMUSE
reductions, and compares eigenvalues against the results file. No code is
shared with the producing library.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .results import SchemaError, eigenvalues_of, load_results

DENSE_LIMIT = 2000
PASS_THRESHOLD = 1e-6


class CapacityError(ValueError):
    """Instance too large for the dense oracle."""


def read_trajectory(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".csv":
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2).T
    raw = path.read_bytes()
    if raw[:4] != b"TTKD":
        raise SchemaError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != 1:
        raise SchemaError(f"{path}: unsupported version {version}")
    d, m = struct.unpack_from("<QQ", raw, 8)
    data = np.frombuffer(raw, dtype="<f8", count=d * m, offset=24)
    return data.reshape(m, d).T.copy()


def read_pair_m(path) -> int | None:
    meta = Path(str(path) + ".meta.json")
    if not meta.exists():
        return None
    doc = json.loads(meta.read_text(encoding="utf-8"))
    return doc.get("pair_m")


def _basis_function(entry):
    kind = entry.get("kind")
    if kind == "constant":
        return lambda x: np.ones_like(x)
    if kind == "gaussian":
        c, s = entry["c"], entry["s"]
        return lambda x: np.exp(-((x - c) ** 2) / (2.0 * s))
    if kind == "periodic_gaussian":
        c, s = entry["c"], entry["s"]
        return lambda x: np.exp(-(np.sin(0.5 * (x - c)) ** 2) / (2.0 * s))
    if kind == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if kind == "monomial":
        deg = entry["degree"]
        return lambda x: np.asarray(x, dtype=float) ** deg
    raise SchemaError(f"unknown basis kind {kind!r}")


def load_basis(path):
    """Basis spec -> list of (coordinate, [functions]) per tensor dimension."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    dims = []
    for entry in doc["dimensions"]:
        funcs = [_basis_function(f) for f in entry["functions"]]
        dims.append((int(entry["coordinate"]), funcs))
    return dims


def dense_transform(x: np.ndarray, basis) -> np.ndarray:
    """Product-basis feature matrix, first dimension's index fastest."""
    x = np.atleast_2d(x)
    m = x.shape[1]
    n_total = math.prod(len(funcs) for _, funcs in basis)
    if n_total > DENSE_LIMIT:
        raise CapacityError(
            f"basis has {n_total} functions; dense oracle is limited to {DENSE_LIMIT}"
        )
    out = np.ones((1, m))
    for coordinate, funcs in basis:
        block = np.stack([f(x[coordinate - 1]) for f in funcs])
        out = (block[:, None, :] * out[None, :, :]).reshape(-1, m)
    return out


def _reduced_svd(a: np.ndarray, trunc: float):
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    keep = s > max(trunc, 1e-14) * s[0]
    keep[0] = True
    return u[:, keep], s[keep], vt[keep]


def amuse_eigenvalues(psi_x, psi_y, trunc=0.0, symmetrize=False) -> np.ndarray:
    """Algorithm "AMUSE for EDMD": eigenvalues of the reduced matrix."""
    u, s, vt = _reduced_svd(psi_x, trunc)
    m_red = vt @ psi_y.T @ u / s[None, :]
    if symmetrize:
        m_red = 0.5 * (m_red + m_red.T)
        return np.sort(np.linalg.eigvalsh(m_red))[::-1].astype(complex)
    vals = np.linalg.eigvals(m_red)
    order = np.lexsort((-vals.imag, -np.abs(vals), -vals.real))
    return vals[order]


def cca_eigenvalues(psi_x, psi_y, trunc=0.0) -> np.ndarray:
    """Algorithm "AMUSE for CCA": squared singular values of V_Y^T V_X."""
    _, _, vxt = _reduced_svd(psi_x, trunc)
    _, _, vyt = _reduced_svd(psi_y, trunc)
    sigma = np.linalg.svd(vyt @ vxt.T, compute_uv=False)
    return (sigma**2).astype(complex)


def oracle_crosscheck(traj_path, basis_path, results_path, traj_y_path=None) -> dict:
    """Recompute the spectrum densely and compare with the results file.

    ``traj_y_path`` covers runs that used separate X/Y trajectory files;
    otherwise the pair comes from the lag in the results' config or from the
    trajectory's pair metadata. Returns a report dict with the recomputed
    and reported leading eigenvalues, their maximum absolute difference, and
    a pass flag at the 1e-6 threshold.
    """
    doc = load_results(results_path)
    reported = eigenvalues_of(doc)
    cfg = doc.get("config", {})
    kind = doc.get("kind")
    trunc = float(doc.get("eps", 0.0))
    basis = load_basis(basis_path)
    z = read_trajectory(traj_path)

    lag = cfg.get("lag")
    if traj_y_path is not None:
        x_mat, y_mat = z, read_trajectory(traj_y_path)
    elif lag is not None:
        ix = np.arange(0, z.shape[1] - int(lag))
        x_mat, y_mat = z[:, ix], z[:, ix + int(lag)]
    else:
        pair_m = read_pair_m(traj_path)
        if pair_m is None:
            raise SchemaError("results lack a lag and the trajectory is not paired")
        x_mat, y_mat = z[:, :pair_m], z[:, pair_m : 2 * pair_m]
    psi_x = dense_transform(x_mat, basis)
    psi_y = dense_transform(y_mat, basis)

    if kind == "edmd":
        recomputed = amuse_eigenvalues(
            psi_x, psi_y, trunc, bool(doc.get("symmetrized"))
        )
    elif kind == "cca":
        recomputed = cca_eigenvalues(psi_x, psi_y, trunc)
    else:
        raise SchemaError(f"unknown result kind {kind!r}")

    n = min(len(reported), len(recomputed))
    diff = float(np.max(np.abs(reported[:n] - recomputed[:n]))) if n else math.inf
    return {
        "kind": kind,
        "n_compared": n,
        "max_abs_diff": diff,
        "passed": bool(diff <= PASS_THRESHOLD and n > 0),
        "reported": [complex(v) for v in reported[:n]],
        "recomputed": [complex(v) for v in recomputed[:n]],
    }
