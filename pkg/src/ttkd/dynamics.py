"""Synthetic data generation: ABC flow on the 3-torus and a reversible
double-well Langevin process.

The flow map is integrated with an embedded Dormand-Prince 5(4) pair and a
shared adaptive step over whole batches of initial conditions, which keeps
the 25^3-point dataset vectorized; a fixed-step mode exists for convergence
tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, ValidationError

__all__ = [
    "FlowConfig",
    "SdeConfig",
    "abc_rhs",
    "integrate",
    "generate_abc_dataset",
    "simulate_double_well",
]

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau (autonomous field, so the stage times are not
# needed); propagation uses the 5th-order weights B5.
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@dataclass(frozen=True)
class FlowConfig:
    """ABC-flow parameters and integrator controls on the torus [0, 2pi)^3."""

    a: float = math.sqrt(3.0)
    b: float = math.sqrt(2.0)
    c: float = 1.0
    tau: float = 5.0
    dt_initial: float = 1e-2
    atol: float = 1e-8
    rtol: float = 1e-8

    def __post_init__(self):
        # tau = 0 is allowed so the flow map degenerates to the identity
        if self.tau < 0:
            raise ValidationError("lag time tau must be non-negative")
        if not (self.atol > 0 and self.rtol > 0 and self.dt_initial > 0):
            raise ValidationError("integrator tolerances must be positive")


@dataclass(frozen=True)
class SdeConfig:
    """Euler-Maruyama setup for dx = -V'(x) dt + sqrt(2/beta) dW with the
    double-well potential V(x) = (x^2 - 1)^2; beta = inf switches noise off."""

    beta: float = 3.0
    dt: float = 1e-3
    n_steps: int = 10_000
    x0: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("time step must be positive")
        if not self.beta > 0:
            raise ValidationError("inverse temperature must be positive")


def abc_rhs(z: np.ndarray, cfg: FlowConfig) -> np.ndarray:
    """Velocity field of the ABC flow; z has shape (3,) or (3, n)."""
    z = np.asarray(z, dtype=np.float64)
    z1, z2, z3 = z[0], z[1], z[2]
    return np.stack(
        [
            cfg.a * np.sin(z3) + cfg.c * np.cos(z2),
            cfg.b * np.sin(z1) + cfg.a * np.cos(z3),
            cfg.c * np.sin(z2) + cfg.b * np.cos(z1),
        ]
    )


def _dp_step(f, y, h):
    """One Dormand-Prince step: returns (5th-order update, error estimate)."""
    stages = [f(y)]
    for i in range(1, 7):
        incr = sum(a * k for a, k in zip(_DP_A[i], stages))
        stages.append(f(y + h * incr))
    update = h * sum(b * k for b, k in zip(_DP_B5, stages) if b != 0.0)
    err = h * sum(
        (b5 - b4) * k for b5, b4, k in zip(_DP_B5, _DP_B4, stages) if b5 != b4
    )
    return y + update, err


def integrate(
    z0: np.ndarray, cfg: FlowConfig, wrap: bool = True, n_fixed_steps: int | None = None
) -> np.ndarray:
    """Flow map over time tau for one point (3,) or a batch (3, n).

    Adaptive mode controls the max over the batch of the RMS scaled error;
    ``n_fixed_steps`` disables step control for convergence studies. The
    endpoint is wrapped into [0, 2pi)^3 unless ``wrap`` is False.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    single = z0.ndim == 1
    y = z0[:, None].copy() if single else z0.copy()
    f = lambda state: abc_rhs(state, cfg)

    if cfg.tau == 0.0:
        if wrap:
            y = np.mod(y, TWO_PI)
        return y[:, 0] if single else y
    if n_fixed_steps is not None:
        h = cfg.tau / n_fixed_steps
        for _ in range(n_fixed_steps):
            y, _err = _dp_step(f, y, h)
    else:
        t, h = 0.0, min(cfg.dt_initial, cfg.tau)
        while t < cfg.tau:
            h = min(h, cfg.tau - t)
            if h < 1e-14 * cfg.tau:
                raise IntegrationError(f"step size underflow at t={t}")
            y_new, err = _dp_step(f, y, h)
            # error-per-unit-time budget, so the global error tracks (atol, rtol)
            scale = (cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y_new))) * (
                h / cfg.tau
            )
            err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=0)).max()
            if err_norm <= 1.0:
                t += h
                y = y_new
            factor = 0.9 * (err_norm + 1e-16) ** -0.2
            h *= min(5.0, max(0.2, factor))
    if wrap:
        y = np.mod(y, TWO_PI)
    return y[:, 0] if single else y


def generate_abc_dataset(
    n_per_dim: int, cfg: FlowConfig, mode: str = "grid", seed: int | None = None
):
    """Test points X in [0, 2pi)^3 and their flow images Y = Phi_tau(X).

    ``mode="grid"`` places n_per_dim^3 points on a uniform torus grid (first
    coordinate fastest); ``mode="random"`` draws them i.i.d. uniform with the
    given seed. Returns (X, Y), both of shape (3, n_per_dim^3).
    """
    if n_per_dim < 2:
        raise ValidationError("need at least 2 points per dimension")
    if mode == "grid":
        axis = np.linspace(0.0, TWO_PI, n_per_dim, endpoint=False)
        g1, g2, g3 = np.meshgrid(axis, axis, axis, indexing="ij")
        x = np.stack(
            [g1.ravel(order="F"), g2.ravel(order="F"), g3.ravel(order="F")]
        )
    elif mode == "random":
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, TWO_PI, size=(3, n_per_dim**3))
    else:
        raise ValidationError(f"unknown sampling mode {mode!r}")
    y = integrate(x, cfg)
    return x, y


def simulate_double_well(cfg: SdeConfig) -> np.ndarray:
    """Euler-Maruyama trajectory (1, n_steps) of the double-well diffusion."""
    noise_scale = 0.0 if math.isinf(cfg.beta) else math.sqrt(2.0 * cfg.dt / cfg.beta)
    rng = np.random.default_rng(cfg.seed)
    noise = (
        noise_scale * rng.standard_normal(cfg.n_steps - 1)
        if noise_scale > 0
        else np.zeros(cfg.n_steps - 1)
    )
    x = np.empty(cfg.n_steps)
    x[0] = cfg.x0
    for i in range(1, cfg.n_steps):
        xi = x[i - 1]
        x[i] = xi - 4.0 * xi * (xi * xi - 1.0) * cfg.dt + noise[i - 1]
    return x[None, :]
