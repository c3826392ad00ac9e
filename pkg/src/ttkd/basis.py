"""Product bases and transformed data tensors.

A basis spec assigns to each tensor dimension one coordinate of the
d-dimensional snapshots and a list of univariate functions of that
coordinate. Three constructions of the transformed data tensor are provided:
a dense oracle matrix, an exact tensor train with block-diagonal interior
cores, and a memory-bounded streamed build that left-orthonormalizes on the
fly and only ever holds one (r_{k-1} n_k) x m sweep matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import prod

import numpy as np

from .errors import CapacityError, DataError, SchemaError, ValidationError
from .tt import TensorTrain, truncated_svd

__all__ = [
    "BasisFunction",
    "BasisDimension",
    "BasisSpec",
    "StreamedBuild",
    "constant",
    "gaussian",
    "periodic_gaussian",
    "identity",
    "monomial",
    "gaussian_grid_spec",
    "eval_basis_dim",
    "dense_transform",
    "transform_exact",
    "transform_streamed",
]

DENSE_TRANSFORM_GUARD = 5 * 10**7
EXACT_CORE_GUARD = 2 * 10**7

_KINDS = ("constant", "gaussian", "periodic_gaussian", "identity", "monomial")


@dataclass(frozen=True)
class BasisFunction:
    """Univariate basis function; Gaussian kinds use exp(-(.)^2 / (2 s))."""

    kind: str
    c: float | None = None
    s: float | None = None
    degree: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown basis kind {self.kind!r}")
        if self.kind in ("gaussian", "periodic_gaussian"):
            if self.c is None or self.s is None:
                raise ValidationError(f"{self.kind} needs center c and scale s")
            if not self.s > 0:
                raise ValidationError(f"scale must be positive, got {self.s}")
        if self.kind == "monomial" and (self.degree is None or self.degree < 0):
            raise ValidationError("monomial needs a non-negative degree")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "constant":
            return np.ones_like(x)
        if self.kind == "gaussian":
            return np.exp(-((x - self.c) ** 2) / (2.0 * self.s))
        if self.kind == "periodic_gaussian":
            return np.exp(-(np.sin(0.5 * (x - self.c)) ** 2) / (2.0 * self.s))
        if self.kind == "identity":
            return x + 0.0
        return x**self.degree

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.c is not None:
            d["c"] = self.c
        if self.s is not None:
            d["s"] = self.s
        if self.degree is not None:
            d["degree"] = self.degree
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BasisFunction":
        try:
            kind = d["kind"]
        except KeyError as exc:
            raise SchemaError("basis function entry lacks 'kind'") from exc
        extra = set(d) - {"kind", "c", "s", "degree"}
        if extra:
            raise SchemaError(f"unknown basis function keys {sorted(extra)}")
        return cls(kind, d.get("c"), d.get("s"), d.get("degree"))


def constant() -> BasisFunction:
    return BasisFunction("constant")


def gaussian(c: float, s: float) -> BasisFunction:
    return BasisFunction("gaussian", c=float(c), s=float(s))


def periodic_gaussian(c: float, s: float) -> BasisFunction:
    return BasisFunction("periodic_gaussian", c=float(c), s=float(s))


def identity() -> BasisFunction:
    return BasisFunction("identity")


def monomial(degree: int) -> BasisFunction:
    return BasisFunction("monomial", degree=int(degree))


@dataclass(frozen=True)
class BasisDimension:
    """Functions of one snapshot coordinate forming one tensor dimension."""

    coordinate: int  # 1-based index into the snapshot vector
    functions: tuple[BasisFunction, ...]

    def __post_init__(self):
        if self.coordinate < 1:
            raise ValidationError("coordinate indices are 1-based")
        if not self.functions:
            raise ValidationError("a basis dimension needs at least one function")
        object.__setattr__(self, "functions", tuple(self.functions))


@dataclass(frozen=True)
class BasisSpec:
    """Per-dimension univariate bases defining the product trial space."""

    dimensions: tuple[BasisDimension, ...]

    def __post_init__(self):
        if not self.dimensions:
            raise ValidationError("a basis spec needs at least one dimension")
        object.__setattr__(self, "dimensions", tuple(self.dimensions))

    @property
    def order(self) -> int:
        return len(self.dimensions)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(len(d.functions) for d in self.dimensions)

    @property
    def full_dimension(self) -> int:
        return prod(self.dims)

    def max_coordinate(self) -> int:
        return max(d.coordinate for d in self.dimensions)

    def to_json(self) -> str:
        doc = {
            "dimensions": [
                {
                    "coordinate": d.coordinate,
                    "functions": [f.to_dict() for f in d.functions],
                }
                for d in self.dimensions
            ]
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "BasisSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"basis spec is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "dimensions" not in doc:
            raise SchemaError("basis spec must be an object with 'dimensions'")
        dims = []
        for entry in doc["dimensions"]:
            if "coordinate" not in entry or "functions" not in entry:
                raise SchemaError("each dimension needs 'coordinate' and 'functions'")
            dims.append(
                BasisDimension(
                    int(entry["coordinate"]),
                    tuple(BasisFunction.from_dict(f) for f in entry["functions"]),
                )
            )
        return cls(tuple(dims))

    @classmethod
    def load(cls, path) -> "BasisSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")


def gaussian_grid_spec(
    d: int, n_per_dim: int, lo: float, hi: float, variance: float, periodic: bool = False
) -> BasisSpec:
    """Coordinate-major spec: Gaussians on an equidistant grid per coordinate."""
    centers = np.linspace(lo, hi, n_per_dim, endpoint=not periodic)
    make = periodic_gaussian if periodic else gaussian
    return BasisSpec(
        tuple(
            BasisDimension(k + 1, tuple(make(c, variance) for c in centers))
            for k in range(d)
        )
    )


def eval_basis_dim(spec: BasisSpec, k: int, x: np.ndarray) -> np.ndarray:
    """Evaluate dimension k's functions on snapshot(s) x.

    ``x`` may be one snapshot (d,) or a matrix (d, m); the result is (n_k,)
    or (n_k, m). Only the configured coordinate is read.
    """
    if not 1 <= k <= spec.order:
        raise ValidationError(f"dimension {k} out of range 1..{spec.order}")
    dim = spec.dimensions[k - 1]
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[:, None]
    if x.shape[0] < dim.coordinate:
        raise ValidationError(
            f"dimension {k} reads coordinate {dim.coordinate}, snapshot has {x.shape[0]}"
        )
    coord = x[dim.coordinate - 1]
    if not np.all(np.isfinite(coord)):
        raise DataError(f"non-finite value in coordinate {dim.coordinate}")
    out = np.stack([f(coord) for f in dim.functions])
    return out[:, 0] if single else out


def _eval_all(spec: BasisSpec, x: np.ndarray) -> list[np.ndarray]:
    return [eval_basis_dim(spec, k, x) for k in range(1, spec.order + 1)]


def dense_transform(x: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """Dense transformed data matrix (N x m); column t vectorizes the product
    tensor of basis evaluations at snapshot t, first index fastest.

    Oracle-sized only; guarded against large N*m.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    n_full = spec.full_dimension
    if n_full * m > DENSE_TRANSFORM_GUARD:
        raise CapacityError(
            f"dense transform would hold {n_full * m} entries "
            f"(guard {DENSE_TRANSFORM_GUARD})"
        )
    evals = _eval_all(spec, x)
    out = evals[0]
    for block in evals[1:]:
        # prepend slower-varying mode: C-order flatten of (n_k, N_prev) keeps
        # the previous rows fastest
        out = (block[:, None, :] * out[None, :, :]).reshape(-1, m)
    return out


def transform_exact(x: np.ndarray, spec: BasisSpec) -> TensorTrain:
    """Exact TT of the transformed data tensor (order p+1, interior ranks m).

    First core stacks the dimension-1 evaluations, interior cores are
    block-diagonal in the snapshot index, and the last core stacks the unit
    vectors e_t. Dense interior cores cost m^2 n_k each, so this construction
    is capacity-guarded; use :func:`transform_streamed` beyond the guard.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    dims = spec.dims
    total = dims[0] * m + sum(m * n * m for n in dims[1:]) + m * m
    if total > EXACT_CORE_GUARD:
        raise CapacityError(
            f"exact TT cores would hold {total} entries (guard {EXACT_CORE_GUARD}); "
            "use transform_streamed for large snapshot counts"
        )
    evals = _eval_all(spec, x)
    cores = [evals[0][None, :, :]]
    diag = np.arange(m)
    for block in evals[1:]:
        core = np.zeros((m, block.shape[0], m))
        core[diag, :, diag] = block.T
        cores.append(core)
    cores.append(np.eye(m)[:, :, None])
    return TensorTrain(cores)


@dataclass(frozen=True)
class StreamedBuild:
    """Left-orthonormal TT segment plus the (r_p x m) interface matrix.

    The interface rows are the time series of the subspace basis selected by
    the sweep (scaled right singular vectors of the final compression step).
    """

    u_cores: tuple[np.ndarray, ...]
    interface: np.ndarray = field(repr=False)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(c.shape[2] for c in self.u_cores)

    @property
    def rank(self) -> int:
        return int(self.interface.shape[0])

    def to_tensor_train(self) -> TensorTrain:
        return TensorTrain(list(self.u_cores) + [self.interface[:, :, None]])


def transform_streamed(
    x: np.ndarray, spec: BasisSpec, eps: float = 0.0, max_ranks=None
) -> StreamedBuild:
    """Left-orthonormalized transformed data tensor built one sweep matrix
    at a time.

    For k = 1..p the sweep forms B_k with B[(l,i),t] = R_{k-1}[l,t] *
    psi_{k,i}(x_t), truncates its SVD at ``eps`` (and at ``max_ranks[k-1]``
    when given), stores the left factor as core k, and carries R_k = S V^T.
    Peak memory is O(max_k r_{k-1} n_k m).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    m = x.shape[1]
    if max_ranks is not None and len(max_ranks) != spec.order:
        raise ValidationError("max_ranks must give one cap per dimension")
    r = np.ones((1, m))
    cores = []
    for k in range(1, spec.order + 1):
        block = eval_basis_dim(spec, k, x)  # (n_k, m)
        b = (block[None, :, :] * r[:, None, :]).reshape(-1, m, order="F")
        cap = None if max_ranks is None else max_ranks[k - 1]
        u, s, vt = truncated_svd(b, eps, cap)
        cores.append(u.reshape(r.shape[0], block.shape[0], -1, order="F"))
        r = s[:, None] * vt
    return StreamedBuild(tuple(cores), r)
