"""Shared numerical kernels: fixed-step RK4 integration and eigenvalue checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Eigenvalues with real part above this margin are treated as unstable.
HURWITZ_MARGIN = -1e-10


class DivergenceError(RuntimeError):
    """Raised when an integrated state stops being finite."""

    def __init__(self, time: float, state: np.ndarray):
        super().__init__(f"state became non-finite at t = {time:.6g}")
        self.time = time
        self.state = state


@dataclass(frozen=True, eq=False)
class OdeSystem:
    """An autonomous-in-shape ODE: ``rhs(t, x) -> dx/dt`` with fixed dimension."""

    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError("dim must be a positive integer")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step classical fourth-order Runge-Kutta settings."""

    step: float = 1e-3
    t_end: float = 50.0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.t_end / self.step > 2**53:
            raise ValueError("t_end/step does not fit in a machine integer")


def _rk4_step(rhs, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    sys: OdeSystem,
    x0,
    cfg: IntegratorConfig,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
) -> np.ndarray:
    """Integrate ``sys`` from t = 0 to ``cfg.t_end`` with classical RK4.

    The observer, when given, is called with ``(t, state)`` at the initial
    point and after every accepted step.  If ``t_end`` is not an integer
    multiple of the step, a final shorter step lands exactly on ``t_end``.
    Deterministic for fixed inputs: the step time is computed as k*h, never
    accumulated.

    Raises DivergenceError as soon as any state component is non-finite.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (sys.dim,):
        raise ValueError(f"x0 must have shape ({sys.dim},), got {x.shape}")
    h = cfg.step
    n_full = int(np.floor(cfg.t_end / h + 1e-9))
    remainder = cfg.t_end - n_full * h
    if remainder < 1e-9 * max(1.0, cfg.t_end):
        remainder = 0.0

    if observer is not None:
        observer(0.0, x)
    for k in range(n_full):
        t = k * h
        x = _rk4_step(sys.rhs, t, x, h)
        t_new = (k + 1) * h
        if not np.isfinite(x).all():
            raise DivergenceError(t_new, x)
        if observer is not None:
            observer(t_new, x)
    if remainder > 0.0:
        x = _rk4_step(sys.rhs, n_full * h, x, remainder)
        if not np.isfinite(x).all():
            raise DivergenceError(cfg.t_end, x)
        if observer is not None:
            observer(cfg.t_end, x)
    return x


def is_hurwitz(A) -> bool:
    """True iff every eigenvalue of the square matrix has real part < -1e-10."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    eig = np.linalg.eigvals(A)
    return bool(np.max(eig.real) < HURWITZ_MARGIN)


def min_eig_symmetric(M) -> float:
    """Smallest eigenvalue of a symmetric matrix (rejects asymmetric input)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.size and np.max(np.abs(M - M.T)) > 1e-10:
        raise ValueError("matrix is not symmetric within 1e-10")
    if M.shape[0] == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(M)[0])
