"""Higher-order CUR cross-approximation of transformed data tensors.

Index-set bookkeeping follows the package-wide convention: all public indices
are 1-based and grouped indices linearize with the first component fastest.
Row sets extend multi-indices over a prefix of modes, column sets over a
suffix whose last mode is the snapshot index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np
import scipy.linalg

from .basis import BasisSpec, eval_basis_dim
from .errors import (
    BoundsError,
    DegenerateInputError,
    SingularMatrixError,
    ValidationError,
)
from .tt import TensorTrain

__all__ = [
    "MaxvolResult",
    "HocurConfig",
    "maxvol",
    "independent_columns",
    "eval_subtensor",
    "extend_row_set",
    "extend_column_set",
    "hocur_transform",
]

RANK_TOL = 1e-10
RIDGE_SCALE = 1e-12


@dataclass(frozen=True)
class MaxvolResult:
    """Rows selected by maxvol (1-based, in working order) plus diagnostics."""

    rows: tuple[int, ...]
    converged: bool
    n_swaps: int
    max_entry: float

    def __iter__(self):
        return iter(self.rows)


def maxvol(a: np.ndarray, tol: float = 5e-2, max_iter: int = 100) -> MaxvolResult:
    """Select r rows of a tall k x r matrix by the maximum-volume principle.

    Starting from pivoted-QR row pivots, swaps the (row, column) pair with the
    largest entry of |A A_I^{-1}| until every entry is at most 1 + tol
    (dominance certificate) or ``max_iter`` swaps were made.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] == 0:
        raise ValidationError(f"maxvol needs a tall matrix, got shape {a.shape}")
    k, r = a.shape
    _, rq, piv = scipy.linalg.qr(a.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(rq))
    if diag[0] <= 0 or diag[min(r, len(diag)) - 1] <= RANK_TOL * diag[0]:
        raise SingularMatrixError("matrix is rank deficient within 1e-10")
    rows = list(piv[:r])
    n_swaps = 0
    while True:
        coeff = np.linalg.solve(a[rows].T, a.T).T  # A A_I^{-1}
        i, j = np.unravel_index(np.argmax(np.abs(coeff)), coeff.shape)
        worst = abs(coeff[i, j])
        if worst <= 1.0 + tol:
            return MaxvolResult(tuple(int(q) + 1 for q in rows), True, n_swaps, worst)
        if n_swaps >= max_iter:
            return MaxvolResult(tuple(int(q) + 1 for q in rows), False, n_swaps, worst)
        rows[j] = int(i)
        n_swaps += 1


def independent_columns(m: np.ndarray, tol: float = RANK_TOL, rmax: int | None = None):
    """Pivoted-QR selection of numerically independent columns.

    Keeps pivots whose diagonal R magnitude exceeds ``tol`` times the first
    one, truncated to ``rmax``; returns 1-based column indices in pivot order.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ValidationError(f"need a nonempty matrix, got shape {m.shape}")
    _, rq, piv = scipy.linalg.qr(m, pivoting=True, mode="economic")
    diag = np.abs(np.diag(rq))
    if diag.size == 0 or diag[0] <= 0.0:
        raise DegenerateInputError("all columns are zero; empty selection")
    count = int(np.sum(diag > tol * diag[0]))
    if rmax is not None:
        count = min(count, int(rmax))
    return tuple(int(p) + 1 for p in piv[:count])


def _check_sets(entries, n_modes, name):
    out = []
    seen = set()
    for e in entries:
        e = tuple(int(i) for i in e)
        if len(e) != n_modes:
            raise BoundsError(f"{name} entry {e} must cover {n_modes} modes")
        if e in seen:
            raise ValidationError(f"duplicate {name} entry {e}")
        seen.add(e)
        out.append(e)
    if not out:
        raise ValidationError(f"{name} set is empty")
    return out


def eval_subtensor(x, spec: BasisSpec, rows, cols, q: int) -> np.ndarray:
    """Submatrix of the transformed data tensor on a cross of index sets.

    Rows run over ``rows`` (multi-indices over modes 1..q) paired with the
    free mode q+1, row-block index fastest; columns run over ``cols``
    (multi-indices over modes q+2..p+1, the last component being the snapshot
    index). For q = p the free mode is the snapshot mode itself and ``cols``
    must be the singleton empty multi-index. Entries are products of basis
    evaluations at the column's snapshot; the full tensor is never formed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    p = spec.order
    if not 0 <= q <= p:
        raise ValidationError(f"q must be in 0..{p}, got {q}")
    rows = _check_sets(rows, q, "row")
    cols = _check_sets(cols, p - q, "column")
    dims = spec.dims
    for e in rows:
        for a, i in enumerate(e):
            if not 1 <= i <= dims[a]:
                raise BoundsError(f"row index {e} out of range for dims {dims}")
    for e in cols:
        for off, i in enumerate(e[:-1] if q < p else e):
            if not 1 <= i <= dims[q + 1 + off]:
                raise BoundsError(f"column index {e} out of range for dims {dims}")

    if q == p:
        # free mode is the snapshot index; single empty column
        prefix = np.ones((len(rows), m))
        for a in range(p):
            block = eval_basis_dim(spec, a + 1, x)
            idx = np.array([e[a] - 1 for e in rows])
            prefix *= block[idx, :]
        return prefix.reshape(len(rows) * m, 1, order="F")

    snaps = np.array([e[-1] for e in cols], dtype=int)
    if np.any(snaps < 1) or np.any(snaps > m):
        raise BoundsError(f"snapshot index out of range 1..{m}")
    xs = x[:, snaps - 1]  # (d, |cols|)
    prefix = np.ones((len(rows), len(cols)))
    for a in range(q):
        block = eval_basis_dim(spec, a + 1, xs)
        idx = np.array([e[a] - 1 for e in rows])
        prefix *= block[idx, :]
    mid = eval_basis_dim(spec, q + 1, xs)  # (n_{q+1}, |cols|)
    suffix = np.ones(len(cols))
    for off in range(p - q - 1):
        block = eval_basis_dim(spec, q + 2 + off, xs)
        idx = np.array([e[off] - 1 for e in cols])
        suffix *= block[idx, np.arange(len(cols))]
    mat = prefix[:, None, :] * mid[None, :, :] * suffix[None, None, :]
    return mat.reshape(len(rows) * mid.shape[0], len(cols), order="F")


def extend_row_set(i_q, picks, n_next: int):
    """Extend a row set by one mode from flat maxvol picks.

    Flat pick i maps to (l, i_next) with the row-block index l fastest,
    matching the row layout of :func:`eval_subtensor`; pick order is kept.
    """
    i_q = [tuple(int(v) for v in e) for e in i_q]
    r = len(i_q)
    out = []
    for pick in picks:
        pick = int(pick)
        if not 1 <= pick <= r * n_next:
            raise BoundsError(f"flat pick {pick} out of range 1..{r * n_next}")
        l, i_next = (pick - 1) % r, (pick - 1) // r
        out.append(i_q[l] + (i_next + 1,))
    return out


def extend_column_set(picks, j_next, n_mode: int):
    """Extend a column set by one mode on the left from flat maxvol picks.

    Mirrors the row-side mapping: the existing-set index j is the fast
    component, so flat pick c maps to (i_mode, j) with j = ((c-1) mod s) + 1.
    Prefix initial sets therefore cycle through all suffixes (and in
    particular all snapshots) before repeating a mode index.
    """
    j_next = [tuple(int(v) for v in e) for e in j_next]
    s = len(j_next)
    out = []
    for pick in picks:
        pick = int(pick)
        if not 1 <= pick <= n_mode * s:
            raise BoundsError(f"flat pick {pick} out of range 1..{n_mode * s}")
        j, i_mode = (pick - 1) % s, (pick - 1) // s
        out.append((i_mode + 1,) + j_next[j])
    return out


@dataclass(frozen=True)
class HocurConfig:
    """Parameters of the cross-approximation sweep (Algorithm-style loop).

    ``max_ranks`` caps ranks r_1..r_p and must satisfy
    r_q <= n_{q+1} r_{q+1} with n_{p+1} = m; ``alpha`` oversamples the
    deterministic initial column sets.
    """

    max_ranks: tuple[int, ...]
    n_iter: int = 2
    alpha: float = 5.0
    maxvol_tol: float = 5e-2
    maxvol_max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "max_ranks", tuple(int(r) for r in self.max_ranks))
        if any(r < 1 for r in self.max_ranks):
            raise ValidationError("ranks must be positive")
        if self.n_iter < 1:
            raise ValidationError("need at least one sweep")
        if not self.alpha > 1.0:
            raise ValidationError("alpha must exceed 1")


@dataclass
class HocurInfo:
    """Diagnostics of a hocur run: final index sets and warning flags."""

    row_sets: dict = field(default_factory=dict)
    col_sets: dict = field(default_factory=dict)
    ranks: tuple[int, ...] = ()
    n_sweeps: int = 0
    warnings: list[str] = field(default_factory=list)


def _solve_cross(inter: np.ndarray, rhs: np.ndarray, side: str, info: HocurInfo):
    """Solve against the (square) intersection matrix with a ridge fallback."""
    try:
        cond = np.linalg.cond(inter)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned intersection")
        if side == "right":  # rhs @ inter^{-1}
            return np.linalg.solve(inter.T, rhs.T).T
        return np.linalg.solve(inter, rhs)
    except np.linalg.LinAlgError:
        lam = RIDGE_SCALE * np.linalg.norm(inter)
        info.warnings.append(f"singular intersection matrix; ridge {lam:.3e}")
        if side == "right":
            reg = inter @ inter.T + lam * np.eye(inter.shape[0])
            return np.linalg.solve(reg, inter @ rhs.T).T
        reg = inter.T @ inter + lam * np.eye(inter.shape[1])
        return np.linalg.solve(reg, inter.T @ rhs)


def _maxvol_with_fallback(mat, cfg: HocurConfig, info: HocurInfo):
    """maxvol with a pivoted-QR column-reduction fallback.

    Returns (row picks, keep), where ``keep`` is None unless the columns of
    ``mat`` had to be re-selected; then the picks refer to the reduced matrix
    and the caller must prune its bookkeeping to the surviving columns.
    """
    def run(matrix):
        mv = maxvol(matrix, cfg.maxvol_tol, cfg.maxvol_max_iter)
        if not mv.converged:
            info.warnings.append(
                f"maxvol hit max_iter with certificate {mv.max_entry:.3e}"
            )
        return mv.rows

    if mat.shape[0] >= mat.shape[1]:
        try:
            return run(mat), None
        except SingularMatrixError:
            pass
    # progressively stricter independence thresholds until maxvol accepts
    for tol in (RANK_TOL, 1e-8, 1e-6, 1e-4):
        keep = independent_columns(mat, tol, mat.shape[0])
        try:
            picks = run(mat[:, [k - 1 for k in keep]])
        except SingularMatrixError:
            continue
        info.warnings.append(
            f"degenerate maxvol input {mat.shape} reduced to {len(keep)} columns"
        )
        return picks, keep
    raise SingularMatrixError(
        f"no independent column subset of shape {mat.shape} found"
    )


def hocur_transform(
    x, spec: BasisSpec, config: HocurConfig, return_info: bool = False
):
    """Cross-approximate the transformed data tensor (order p+1) in TT form.

    Nested initial column sets are deterministic prefixes; forward sweeps
    update row sets via maxvol on cross submatrices and set cores to
    M M_{I,:}^{-1}; backward sweeps update column sets on the transposed
    reshaped submatrices and set cores to M_{:,J}^{-1} M. Independent-column
    pruning runs in the first forward sweep only. The first core is filled
    from the final cross submatrix.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    p = spec.order
    if len(config.max_ranks) != p:
        raise ValidationError(f"max_ranks must have {p} entries")
    dims = spec.dims + (m,)  # n_1..n_p, n_{p+1} = m
    ranks = [1] + list(config.max_ranks) + [1]  # r_0..r_{p+1}
    for qq in range(1, p + 1):
        if ranks[qq] > dims[qq] * ranks[qq + 1]:
            raise ValidationError(
                f"rank r_{qq}={ranks[qq]} exceeds n_{qq + 1}*r_{qq + 1}"
                f"={dims[qq] * ranks[qq + 1]}"
            )

    info = HocurInfo()
    # nested initial column sets J_l over modes l..p+1, deterministic prefixes
    col_sets = {p + 2: [()]}
    for l in range(p + 1, 1, -1):
        capacity = dims[l - 1] * len(col_sets[l + 1])
        want = min(ceil(config.alpha * ranks[l - 1]), capacity)
        col_sets[l] = extend_column_set(range(1, want + 1), col_sets[l + 1], dims[l - 1])
    row_sets = {0: [()]}
    cores: list[np.ndarray | None] = [None] * (p + 1)

    for sweep in range(config.n_iter):
        before = (
            tuple(tuple(row_sets.get(l, [])) for l in range(p + 1)),
            tuple(tuple(col_sets.get(l, [])) for l in range(2, p + 3)),
        )
        for l in range(1, p + 1):  # forward: update row sets
            mat = eval_subtensor(x, spec, row_sets[l - 1], col_sets[l + 1], l - 1)
            if sweep == 0:
                keep = independent_columns(mat, RANK_TOL, ranks[l])
                col_sets[l + 1] = [col_sets[l + 1][j - 1] for j in keep]
                mat = mat[:, [j - 1 for j in keep]]
            picks, keep = _maxvol_with_fallback(mat, config, info)
            if keep is not None:
                col_sets[l + 1] = [col_sets[l + 1][j - 1] for j in keep]
                mat = mat[:, [j - 1 for j in keep]]
            ranks[l] = mat.shape[1]
            row_sets[l] = extend_row_set(row_sets[l - 1], picks, dims[l - 1])
            inter = mat[[r - 1 for r in picks], :]
            core = _solve_cross(inter, mat, "right", info)
            cores[l - 1] = core.reshape(
                len(row_sets[l - 1]), dims[l - 1], ranks[l], order="F"
            )
        for l in range(p + 1, 1, -1):  # backward: update column sets
            mat = eval_subtensor(x, spec, row_sets[l - 1], col_sets[l + 1], l - 1)
            r_prev, r_next = len(row_sets[l - 1]), len(col_sets[l + 1])
            # columns (j, i) with the suffix-set index j fastest, matching
            # extend_column_set
            mat2 = (
                mat.reshape(r_prev, dims[l - 1], r_next, order="F")
                .transpose(0, 2, 1)
                .reshape(r_prev, dims[l - 1] * r_next, order="F")
            )
            picks, keep = _maxvol_with_fallback(mat2.T, config, info)
            if keep is not None:  # dependent rows dropped from the row set
                row_sets[l - 1] = [row_sets[l - 1][i - 1] for i in keep]
                mat2 = mat2[[i - 1 for i in keep], :]
                r_prev = len(keep)
                ranks[l - 1] = r_prev
            col_sets[l] = extend_column_set(picks, col_sets[l + 1], dims[l - 1])
            inter = mat2[:, [c - 1 for c in picks]]
            core = _solve_cross(inter, mat2, "left", info)
            cores[l - 1] = np.ascontiguousarray(
                core.reshape(r_prev, r_next, dims[l - 1], order="F").transpose(0, 2, 1)
            )
        info.n_sweeps = sweep + 1
        after = (
            tuple(tuple(row_sets.get(l, [])) for l in range(p + 1)),
            tuple(tuple(col_sets.get(l, [])) for l in range(2, p + 3)),
        )
        if after == before:
            break

    first = eval_subtensor(x, spec, row_sets[0], col_sets[2], 0)
    cores[0] = first.reshape(1, dims[0], len(col_sets[2]), order="F")
    tt = TensorTrain(cores)
    info.row_sets = {l: list(v) for l, v in row_sets.items()}
    info.col_sets = {l: list(v) for l, v in col_sets.items()}
    info.ranks = tt.ranks
    if return_info:
        return tt, info
    return tt
