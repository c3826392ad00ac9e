"""Reduced eigenvalue solvers: dense AMUSE/CCA oracles and the tensor-train
AMUSEt variants for EDMD and CCA, plus eigenfunction post-processing.

The dense solvers work directly on transformed data matrices and serve as
oracles for the tensor pipeline, which only ever touches the interface matrix
R of the left-orthonormalized transformed data tensor: restricting R to the
snapshot index sets and one further SVD yields the reduced matrix, and the
eigenfunction time series collapse to small matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import inf, log, nan

import numpy as np

from .basis import BasisSpec, transform_exact, transform_streamed
from .errors import DegenerateInputError, ValidationError
from .hocur import HocurConfig, hocur_transform
from .tensor import subspace_distance
from .tt import left_orthonormalize, segment_to_matrix, truncated_svd

__all__ = [
    "TrajectoryPair",
    "SpectralResult",
    "amuse_dense",
    "cca_dense",
    "amuset_edmd",
    "amuset_cca",
    "implied_timescales",
    "assign_two_state",
    "empirical_subspace_convergence",
]

WHITENING_TOL = 1e-10


class TrajectoryPair:
    """Snapshot matrices X, Y held as one matrix Z with index sets I_X, I_Y.

    Index sets are 1-based; for a sliding window of lag tau (in frames),
    I_X = 1..m-tau and I_Y = 1+tau..m.
    """

    __slots__ = ("z", "ix", "iy")

    def __init__(self, z: np.ndarray, ix, iy):
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        ix = np.asarray(ix, dtype=int)
        iy = np.asarray(iy, dtype=int)
        if ix.size != iy.size or ix.size == 0:
            raise ValidationError("index sets must be nonempty and equally long")
        m_total = z.shape[1]
        for name, idx in (("I_X", ix), ("I_Y", iy)):
            if idx.min() < 1 or idx.max() > m_total:
                raise ValidationError(f"{name} indices must lie in 1..{m_total}")
        self.z = z
        self.ix = ix
        self.iy = iy

    @classmethod
    def from_matrices(cls, x: np.ndarray, y: np.ndarray) -> "TrajectoryPair":
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        if x.shape != y.shape:
            raise ValidationError(f"shape mismatch: {x.shape} vs {y.shape}")
        m = x.shape[1]
        z = np.concatenate([x, y], axis=1)
        return cls(z, np.arange(1, m + 1), np.arange(m + 1, 2 * m + 1))

    @classmethod
    def from_trajectory(cls, z: np.ndarray, lag: int) -> "TrajectoryPair":
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        m_total = z.shape[1]
        if not 1 <= lag < m_total:
            raise ValidationError(f"lag must be in 1..{m_total - 1}, got {lag}")
        return cls(z, np.arange(1, m_total - lag + 1), np.arange(1 + lag, m_total + 1))

    @property
    def n_pairs(self) -> int:
        return int(self.ix.size)

    @property
    def x(self) -> np.ndarray:
        return self.z[:, self.ix - 1]

    @property
    def y(self) -> np.ndarray:
        return self.z[:, self.iy - 1]


@dataclass(frozen=True)
class SpectralResult:
    """Eigen/singular data of a reduced evolution-operator problem.

    ``values`` holds eigenvalues (EDMD; possibly complex) or squared singular
    values (CCA), sorted by descending real part with conjugate pairs
    adjacent. ``eigenfunctions`` holds one time series per retained value
    (q x m). ``singular_values`` is CCA-only.
    """

    kind: str
    values: np.ndarray
    reduced_vectors: np.ndarray = field(repr=False)
    eigenfunctions: np.ndarray = field(repr=False)
    ranks: tuple[int, ...]
    truncation: float
    method: str = "dense"
    symmetrized: bool = False
    singular_values: np.ndarray | None = field(default=None, repr=False)
    back_transform: np.ndarray | None = field(default=None, repr=False)
    whitening_deviation: float | None = None
    warnings: tuple[str, ...] = ()

    @property
    def n_values(self) -> int:
        return int(self.values.size)


def _sort_eigenpairs(values, vectors):
    """Descending real part, ties by magnitude; +imag before -imag."""
    order = np.lexsort((-values.imag, -np.abs(values), -values.real))
    return values[order], vectors[:, order]


def _as_real_if_possible(arr, tol=1e-12):
    if np.iscomplexobj(arr) and np.max(np.abs(arr.imag)) <= tol * max(
        1.0, np.max(np.abs(arr.real))
    ):
        return arr.real.copy()
    return arr


def amuse_dense(
    psi_x: np.ndarray,
    psi_y: np.ndarray,
    trunc: float = 0.0,
    symmetrize: bool = False,
    q: int | None = None,
) -> SpectralResult:
    """AMUSE on dense transformed data matrices (EDMD oracle).

    Reduced SVD of psi_x (relative threshold ``trunc``), then the reduced
    matrix M = V^T psi_y^T U Sigma^{-1} is diagonalized; eigenvectors are
    back-transformed by U Sigma^{-1} and eigenfunction time series are
    evaluated literally as xi^T psi_x.
    """
    psi_x = np.atleast_2d(np.asarray(psi_x, dtype=np.float64))
    psi_y = np.atleast_2d(np.asarray(psi_y, dtype=np.float64))
    if psi_x.shape != psi_y.shape:
        raise ValidationError(f"shape mismatch: {psi_x.shape} vs {psi_y.shape}")
    if not np.any(psi_x):
        raise DegenerateInputError("transformed data matrix is identically zero")
    u, s, vt = truncated_svd(psi_x, trunc)
    m_red = vt @ psi_y.T @ (u / s)
    if symmetrize:
        m_red = 0.5 * (m_red + m_red.T)
        values, vectors = np.linalg.eigh(m_red)
        values = values.astype(complex)
    else:
        values, vectors = np.linalg.eig(m_red)
    values, vectors = _sort_eigenpairs(values, vectors)
    if q is not None:
        if q > values.size:
            raise ValidationError(f"q={q} exceeds retained rank {values.size}")
        values, vectors = values[:q], vectors[:, :q]
    back = u / s  # maps reduced vectors to basis coefficients
    xi = back @ vectors
    phi = xi.T @ psi_x
    return SpectralResult(
        kind="edmd",
        values=_as_real_if_possible(values),
        reduced_vectors=vectors,
        eigenfunctions=_as_real_if_possible(phi),
        ranks=(int(s.size),),
        truncation=trunc,
        method="dense",
        symmetrized=symmetrize,
        back_transform=back,
    )


def cca_dense(
    psi_x: np.ndarray,
    psi_y: np.ndarray,
    trunc: float = 0.0,
    q: int | None = None,
) -> SpectralResult:
    """AMUSE for CCA on dense transformed data matrices (oracle).

    Whitens both matrices by their reduced SVDs, forms M = V_Y^T V_X, and
    reports lambda_k = sigma_k^2. The Galerkin mass matrices of the whitened
    subspaces are verified to be identities within 1e-10.
    """
    psi_x = np.atleast_2d(np.asarray(psi_x, dtype=np.float64))
    psi_y = np.atleast_2d(np.asarray(psi_y, dtype=np.float64))
    if psi_x.shape[1] != psi_y.shape[1]:
        raise ValidationError("snapshot counts differ")
    if not np.any(psi_x) or not np.any(psi_y):
        raise DegenerateInputError("transformed data matrix is identically zero")
    ux, sx, vxt = truncated_svd(psi_x, trunc)
    uy, sy, vyt = truncated_svd(psi_y, trunc)
    # whitening check: transformed mass matrices must be identities
    dev = 0.0
    for u, s, psi in ((ux, sx, psi_x), (uy, sy, psi_y)):
        t = (u / s).T @ psi
        dev = max(dev, float(np.max(np.abs(t @ t.T - np.eye(s.size)))))
    if dev > WHITENING_TOL:
        raise DegenerateInputError(f"whitened mass matrix deviates by {dev:.2e}")
    m_red = vyt @ vxt.T
    _, sigma, wt = np.linalg.svd(m_red)
    w = wt.T
    if q is not None:
        if q > sigma.size:
            raise ValidationError(f"q={q} exceeds retained rank {sigma.size}")
        sigma, w = sigma[:q], w[:, :q]
    phi = (vxt.T @ w).T
    return SpectralResult(
        kind="cca",
        values=sigma**2,
        reduced_vectors=w,
        eigenfunctions=phi,
        ranks=(int(sx.size), int(sy.size)),
        truncation=trunc,
        method="dense",
        singular_values=sigma,
        back_transform=ux / sx,
        whitening_deviation=dev,
    )


def _build_interface(z, spec, eps, method, hocur_config):
    """Interface matrix R (r_p x m) of the left-orthonormalized data tensor."""
    warnings: tuple[str, ...] = ()
    if method == "streamed":
        build = transform_streamed(z, spec, eps)
        return build.interface, build.ranks, warnings
    if method == "exact":
        tt = transform_exact(z, spec)
    elif method == "hocur":
        if hocur_config is None:
            raise ValidationError("method 'hocur' needs a HocurConfig")
        tt, info = hocur_transform(z, spec, hocur_config, return_info=True)
        warnings = tuple(info.warnings)
    else:
        raise ValidationError(f"unknown method {method!r}")
    ortho = left_orthonormalize(tt, eps)
    last = ortho.cores[-1]
    return last.reshape(last.shape[0], last.shape[1]), ortho.ranks, warnings


def amuset_edmd(
    data: TrajectoryPair,
    spec: BasisSpec,
    eps: float = 0.0,
    method: str = "streamed",
    q: int | None = None,
    symmetrize: bool = False,
    hocur_config: HocurConfig | None = None,
) -> SpectralResult:
    """Tensor-train AMUSE for EDMD.

    Builds the transformed data tensor of the full trajectory by the chosen
    method, left-orthonormalizes it, restricts the interface to the snapshot
    index sets, and solves the reduced problem
    M = V_X^T M_Y^T U_X Sigma_X^{-1}. Eigenfunction time series are
    Phi = W^T V_X^T; the orthonormal segment is never contracted.
    """
    interface, ranks, warnings = _build_interface(
        data.z, spec, eps, method, hocur_config
    )
    m_x = interface[:, data.ix - 1]
    m_y = interface[:, data.iy - 1]
    if not np.any(m_x):
        raise DegenerateInputError("interface restricted to I_X is zero")
    ux, sx, vxt = truncated_svd(m_x, eps)
    m_red = vxt @ m_y.T @ (ux / sx)
    if symmetrize:
        m_red = 0.5 * (m_red + m_red.T)
        values, vectors = np.linalg.eigh(m_red)
        values = values.astype(complex)
    else:
        values, vectors = np.linalg.eig(m_red)
    values, vectors = _sort_eigenpairs(values, vectors)
    if q is not None:
        if q > values.size:
            raise ValidationError(f"q={q} exceeds retained rank {values.size}")
        values, vectors = values[:q], vectors[:, :q]
    phi = vectors.T @ vxt
    return SpectralResult(
        kind="edmd",
        values=_as_real_if_possible(values),
        reduced_vectors=vectors,
        eigenfunctions=_as_real_if_possible(phi),
        ranks=tuple(ranks) + (int(sx.size),),
        truncation=eps,
        method=method,
        symmetrized=symmetrize,
        warnings=warnings,
    )


def amuset_cca(
    x: np.ndarray,
    y: np.ndarray,
    spec_x: BasisSpec,
    spec_y: BasisSpec | None = None,
    eps: float = 0.0,
    method: str = "streamed",
    q: int | None = None,
    hocur_config: HocurConfig | None = None,
) -> SpectralResult:
    """Tensor-train AMUSE for CCA (forward-backward operator).

    Transformed data tensors of X and Y are built and orthonormalized
    independently; the reduced matrix is the contraction V_Y^T V_X of the two
    global SVDs' last cores.
    """
    spec_y = spec_x if spec_y is None else spec_y
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != y.shape[1]:
        raise ValidationError("snapshot counts differ")
    r_x, ranks_x, warn_x = _build_interface(x, spec_x, eps, method, hocur_config)
    r_y, _, warn_y = _build_interface(y, spec_y, eps, method, hocur_config)
    if not np.any(r_x) or not np.any(r_y):
        raise DegenerateInputError("interface matrix is zero")
    _, sx, vxt = truncated_svd(r_x, eps)
    _, _, vyt = truncated_svd(r_y, eps)
    m_red = vyt @ vxt.T
    _, sigma, wt = np.linalg.svd(m_red)
    w = wt.T
    if q is not None:
        if q > sigma.size:
            raise ValidationError(f"q={q} exceeds retained rank {sigma.size}")
        sigma, w = sigma[:q], w[:, :q]
    phi = (vxt.T @ w).T
    return SpectralResult(
        kind="cca",
        values=sigma**2,
        reduced_vectors=w,
        eigenfunctions=phi,
        ranks=tuple(ranks_x) + (int(sx.size),),
        truncation=eps,
        method=method,
        singular_values=sigma,
        warnings=warn_x + warn_y,
    )


def implied_timescales(values, tau: float) -> list[float]:
    """t_k = -tau / ln(Re lambda_k); +inf for lambda >= 1, NaN when undefined.

    Eigenvalues with a relative imaginary part above 1e-6, or with
    non-positive real part, get the undefined marker (NaN) rather than an
    error.
    """
    if not tau > 0:
        raise ValidationError(f"lag time must be positive, got {tau}")
    out = []
    for lam in np.asarray(values):
        lam = complex(lam)
        mag = abs(lam)
        if mag > 0 and abs(lam.imag) / mag > 1e-6:
            out.append(nan)
        elif lam.real >= 1.0:
            out.append(inf)
        elif lam.real <= 0.0:
            out.append(nan)
        else:
            out.append(-tau / log(lam.real))
    return out


def assign_two_state(phi2) -> list[str]:
    """Two-state labels from the sign of the median-centered eigenfunction."""
    phi2 = np.asarray(phi2, dtype=np.float64).ravel()
    centered = phi2 - np.median(phi2)
    if np.ptp(phi2) == 0.0:
        raise DegenerateInputError("eigenfunction is constant; no state split")
    return ["A" if v >= 0 else "B" for v in centered]


def empirical_subspace_convergence(
    sample,
    spec: BasisSpec,
    m_list,
    ranks,
    eps: float = 0.0,
    seed: int = 0,
) -> list[float]:
    """Distances of fixed-rank streamed subspaces to the largest-m subspace.

    ``sample(m, rng)`` must return a (d, m) data matrix. For each m the
    streamed transform is built at fixed ranks, the orthonormal segment is
    contracted to a basis of R^{prod n_k} (guarded), and its distance to the
    subspace obtained at the largest m is returned (final entry 0 by
    construction).
    """
    m_list = [int(m) for m in m_list]
    if len(m_list) < 2 or any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise ValidationError("m_list must be ascending with at least 2 entries")
    rng = np.random.default_rng(seed)
    bases = []
    for m in m_list:
        x = sample(m, rng)
        build = transform_streamed(x, spec, eps, max_ranks=ranks)
        bases.append(segment_to_matrix(build.u_cores, guard=10**5))
    reference = bases[-1]
    return [subspace_distance(b, reference) for b in bases]
