"""Tensor trains: representation, orthonormalization sweeps, and global SVD.

Cores are order-3 arrays of shape (r_{k-1}, n_k, r_k) with boundary ranks
r_0 = r_p = 1. All core unfoldings follow the package-wide first-index-fastest
convention (Fortran-order reshapes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import (
    BoundsError,
    CapacityError,
    DegenerateInputError,
    ValidationError,
)
from .tensor import DenseTensor

__all__ = [
    "TensorTrain",
    "GlobalSVD",
    "truncated_svd",
    "tt_entry",
    "tt_to_dense",
    "tt_from_dense",
    "left_orthonormalize",
    "global_svd",
    "segment_gram",
    "segment_to_matrix",
]

# Relative level below which singular values count as exact zeros (used when
# the caller asks for eps=0 truncation, to avoid rank explosion from noise).
ZERO_TOL = 1e-14

DENSE_GUARD = 10**7


def truncated_svd(a: np.ndarray, eps: float, max_rank: int | None = None):
    """Reduced SVD of ``a`` with relative truncation and a sign convention.

    Singular values below ``max(eps, 1e-14) * sigma_1`` are discarded; at
    least one is always kept. Each left singular vector is scaled so that its
    entry of largest magnitude is positive, for reproducible outputs.

    Returns (u, s, vt) with ``u`` of shape (rows, r), ``s`` of shape (r,) and
    ``vt`` of shape (r, cols).
    """
    if eps < 0:
        raise ValidationError(f"truncation eps must be >= 0, got {eps}")
    a = np.asarray(a, dtype=np.float64)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] > 0:
        r = int(np.sum(s > max(eps, ZERO_TOL) * s[0]))
    else:
        r = 1
    r = max(r, 1)
    if max_rank is not None:
        r = min(r, int(max_rank))
    u, s, vt = u[:, :r].copy(), s[:r].copy(), vt[:r].copy()
    for j in range(r):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return u, s, vt


class TensorTrain:
    """Immutable chain of order-3 TT cores.

    Parameters
    ----------
    cores : sequence of arrays
        Core k must have shape (r_{k-1}, n_k, r_k); adjacent ranks must chain
        and the boundary ranks must be 1.
    """

    __slots__ = ("cores",)

    def __init__(self, cores):
        # always copy so freezing the cores never affects caller-owned arrays
        cores = tuple(np.array(c, dtype=np.float64, order="C") for c in cores)
        if not cores:
            raise ValidationError("a tensor train needs at least one core")
        for k, c in enumerate(cores):
            if c.ndim != 3:
                raise ValidationError(f"core {k + 1} is not order 3: shape {c.shape}")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValidationError("boundary ranks r_0 and r_p must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValidationError(
                    f"rank mismatch between cores {k + 1} and {k + 2}: "
                    f"{cores[k].shape[2]} vs {cores[k + 1].shape[0]}"
                )
        for c in cores:
            c.setflags(write=False)
        object.__setattr__(self, "cores", cores)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("TensorTrain is immutable")

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    @property
    def size(self) -> int:
        return prod(self.dims)

    def __repr__(self) -> str:
        return f"TensorTrain(dims={self.dims}, ranks={self.ranks})"


def tt_entry(tt: TensorTrain, mi) -> float:
    """Entry of the represented tensor: the product chain over core slices."""
    mi = tuple(int(i) for i in mi)
    dims = tt.dims
    if len(mi) != len(dims):
        raise BoundsError(f"multi-index {mi} has wrong length for dims {dims}")
    for i, n in zip(mi, dims):
        if not 1 <= i <= n:
            raise BoundsError(f"index {i} out of range 1..{n} in {mi}")
    vec = tt.cores[0][:, mi[0] - 1, :]  # (1, r_1)
    for k in range(1, len(mi)):
        vec = vec @ tt.cores[k][:, mi[k] - 1, :]
    return float(vec[0, 0])


def tt_to_dense(tt: TensorTrain) -> DenseTensor:
    """Materialize the full tensor (guarded to at most 10^7 entries)."""
    if tt.size > DENSE_GUARD:
        raise CapacityError(
            f"dense tensor would have {tt.size} entries (guard {DENSE_GUARD})"
        )
    block = _contract_chain(tt.cores)
    return DenseTensor(tt.dims, block.ravel(order="F"))


def _contract_chain(cores) -> np.ndarray:
    """Contract TT cores into the (n_1...n_p) x r_p unfolding, rows F-order."""
    block = cores[0][0]  # (n_1, r_1)
    for core in cores[1:]:
        r, n, r2 = core.shape
        rows = block.shape[0]
        w = (block @ core.reshape(r, n * r2)).reshape(rows, n, r2)
        block = w.reshape(rows * n, r2, order="F")
    return block


def tt_from_dense(t: DenseTensor, eps: float = 0.0) -> TensorTrain:
    """Sequential SVD sweep (TT-SVD) with per-split relative truncation."""
    dims = t.dims
    cores = []
    m = t.data.reshape(1, -1)
    r = 1
    for k in range(len(dims) - 1):
        m = m.reshape(r * dims[k], -1, order="F")
        u, s, vt = truncated_svd(m, eps)
        cores.append(u.reshape(r, dims[k], -1, order="F"))
        r = s.size
        m = s[:, None] * vt
    cores.append(m.reshape(r, dims[-1], 1, order="F"))
    return TensorTrain(cores)


def _right_orthogonalize(cores):
    """Exact right-to-left pass giving cores 2..p orthonormal-row unfoldings.

    Afterwards each split's left-sweep matrix carries the true singular values
    of the corresponding tensor unfolding, so ranks can never exceed the
    unfolding rank on either side of the split.
    """
    for k in range(len(cores) - 1, 0, -1):
        r, n, r2 = cores[k].shape
        u, s, vt = truncated_svd(cores[k].reshape(r, n * r2, order="F"), 0.0)
        cores[k] = vt.reshape(-1, n, r2, order="F")
        cores[k - 1] = np.einsum("anb,bc->anc", cores[k - 1], u * s)
    return cores


def left_orthonormalize(
    tt: TensorTrain, eps: float = 0.0, max_ranks=None
) -> TensorTrain:
    """Sweep making cores 1..p-1 left-orthonormal via truncated SVDs.

    After the sweep, each non-final core unfolded to (r_{k-1} n_k, r_k) has
    orthonormal columns; singular values below ``eps`` times the split's
    largest singular value are discarded along the way.
    """
    cores = _right_orthogonalize([np.array(c) for c in tt.cores])
    for k in range(len(cores) - 1):
        r, n, r2 = cores[k].shape
        cap = None if max_ranks is None else max_ranks[k]
        u, s, vt = truncated_svd(cores[k].reshape(r * n, r2, order="F"), eps, cap)
        cores[k] = u.reshape(r, n, -1, order="F")
        carry = s[:, None] * vt
        cores[k + 1] = np.einsum("ab,bnc->anc", carry, cores[k + 1])
    return TensorTrain(cores)


@dataclass(frozen=True)
class GlobalSVD:
    """SVD of the mode-p unfolding of an order-(p+1) tensor train.

    ``u_cores`` form a left-orthonormal TT segment of shape
    n_1 x ... x n_p x r (trailing rank r, so it is stored as a plain core
    tuple rather than a TensorTrain), ``sigma`` holds the positive singular
    values in descending order, and ``v`` is an (n_{p+1} x r) matrix with
    orthonormal columns.
    """

    u_cores: tuple[np.ndarray, ...]
    sigma: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.u_cores)


def global_svd(tt: TensorTrain, eps: float = 0.0, truncate_sweep: bool = True) -> GlobalSVD:
    """Global SVD of the mode-p unfolding of an order-(p+1) tensor train.

    Left-orthonormalizes cores 1..p, then takes an exact SVD of the final
    core reshaped to (r_p, n_{p+1}) and absorbs its left factor into core p.
    ``truncate_sweep`` controls whether eps also truncates during the
    orthonormalization sweep or only at the final SVD.
    """
    if tt.order < 2:
        raise ValidationError("global SVD needs a tensor train of order >= 2")
    sweep_eps = eps if truncate_sweep else 0.0
    ortho = left_orthonormalize(tt, sweep_eps)
    last = ortho.cores[-1]
    r_p, m = last.shape[0], last.shape[1]
    uf, s, vt = truncated_svd(last.reshape(r_p, m), eps)
    if s[0] <= 0.0:
        raise DegenerateInputError("tensor has no positive singular values")
    u_cores = list(ortho.cores[:-1])
    u_cores[-1] = np.einsum("anb,br->anr", u_cores[-1], uf)
    return GlobalSVD(tuple(u_cores), s, vt.T.copy())


def segment_gram(cores) -> np.ndarray:
    """Gram matrix U^T U of a TT segment, contracted core by core.

    Never materializes the dense tensor; for a left-orthonormal segment the
    result is the identity.
    """
    g = np.ones((1, 1))
    for c in cores:
        g = np.einsum("ac,anb,cnd->bd", g, c, c, optimize=True)
    return g


def segment_to_matrix(cores, guard: int = DENSE_GUARD) -> np.ndarray:
    """Contract a TT segment into its (n_1...n_p) x r unfolding (guarded)."""
    n_total = prod(c.shape[1] for c in cores)
    r = cores[-1].shape[2]
    if n_total * r > guard:
        raise CapacityError(
            f"segment matrix would have {n_total * r} entries (guard {guard})"
        )
    return _contract_chain(cores)
