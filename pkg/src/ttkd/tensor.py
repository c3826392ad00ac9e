"""Dense tensors, index conventions, unfoldings, and subspace distances.

Convention used throughout the package: multi-indices are 1-based and the
first index varies fastest in every grouped/linearized index. A flat array in
this convention corresponds to a numpy array reshaped with ``order="F"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import BoundsError, DegenerateInputError, ValidationError

__all__ = [
    "DenseTensor",
    "multi_to_single",
    "single_to_multi",
    "unfold",
    "fold",
    "subspace_distance",
]

ORTHO_TOL = 1e-8


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(n) for n in dims)
    if not dims or any(n < 1 for n in dims):
        raise ValidationError(f"mode sizes must be positive, got {dims}")
    return dims


def multi_to_single(mi, dims) -> int:
    """Linearize a 1-based multi-index, first index fastest.

    Returns ``1 + sum_k (i_k - 1) * prod_{l<k} n_l``.
    """
    dims = _check_dims(dims)
    mi = tuple(int(i) for i in mi)
    if len(mi) != len(dims):
        raise BoundsError(f"multi-index {mi} has wrong length for dims {dims}")
    flat = 0
    stride = 1
    for i, n in zip(mi, dims):
        if not 1 <= i <= n:
            raise BoundsError(f"index {i} out of range 1..{n} in {mi}")
        flat += (i - 1) * stride
        stride *= n
    return flat + 1


def single_to_multi(i: int, dims) -> tuple[int, ...]:
    """Inverse of :func:`multi_to_single`."""
    dims = _check_dims(dims)
    i = int(i)
    if not 1 <= i <= prod(dims):
        raise BoundsError(f"flat index {i} out of range 1..{prod(dims)}")
    rem = i - 1
    mi = []
    for n in dims:
        mi.append(rem % n + 1)
        rem //= n
    return tuple(mi)


@dataclass(frozen=True)
class DenseTensor:
    """Dense real tensor stored flat in first-index-fastest order."""

    dims: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dims", _check_dims(self.dims))
        data = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        if data.size != prod(self.dims):
            raise ValidationError(
                f"data length {data.size} does not match dims {self.dims}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "DenseTensor":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr.shape, arr.ravel(order="F"))

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.dims, order="F")

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.data.size

    def __getitem__(self, mi) -> float:
        if isinstance(mi, int):
            mi = (mi,)
        return float(self.data[multi_to_single(mi, self.dims) - 1])

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


def unfold(t: DenseTensor, k: int) -> np.ndarray:
    """Mode-k unfolding: rows linearize modes 1..k, columns modes k+1..p.

    Both groupings are first-index-fastest, so the unfolding is a plain
    Fortran-order reshape of the flat data.
    """
    if not 1 <= k <= t.order - 1:
        raise ValidationError(f"split position {k} out of range 1..{t.order - 1}")
    rows = prod(t.dims[:k])
    return t.data.reshape(rows, t.size // rows, order="F")


def fold(m: np.ndarray, dims, k: int) -> DenseTensor:
    """Inverse of :func:`unfold`; shapes must match exactly."""
    dims = _check_dims(dims)
    if not 1 <= k <= len(dims) - 1:
        raise ValidationError(f"split position {k} out of range 1..{len(dims) - 1}")
    m = np.asarray(m, dtype=np.float64)
    rows, cols = prod(dims[:k]), prod(dims[k:])
    if m.shape != (rows, cols):
        raise ValidationError(f"matrix shape {m.shape} does not match ({rows}, {cols})")
    return DenseTensor(dims, m.ravel(order="F"))


def _check_orthonormal(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat[:, None]
    if mat.ndim != 2 or mat.shape[1] == 0:
        raise ValidationError(f"{name} must be a nonempty matrix of column vectors")
    gram = mat.T @ mat
    dev = np.max(np.abs(gram - np.eye(mat.shape[1])))
    if dev > ORTHO_TOL:
        raise ValidationError(
            f"columns of {name} are not orthonormal (Gram deviation {dev:.2e})"
        )
    return mat


def subspace_distance(f: np.ndarray, g: np.ndarray) -> float:
    """Distance ``||(I - G G^T) F||_2`` between spans of orthonormal bases.

    Equals the largest approximation error of unit vectors of span(F) by
    vectors of span(G) whenever dim F <= dim G.
    """
    f = _check_orthonormal(f, "F")
    g = _check_orthonormal(g, "G")
    if f.shape[0] != g.shape[0]:
        raise ValidationError(
            f"ambient dimensions differ: {f.shape[0]} vs {g.shape[0]}"
        )
    resid = f - g @ (g.T @ f)
    if resid.size == 0:
        raise DegenerateInputError("empty basis")
    return float(np.linalg.norm(resid, 2))
