"""Controller synthesis and dynamics.

Two cooperating layers per agent:

- an optimal signal generator, a consensus-coupled gradient flow whose state
  r_i converges to the global minimizer (its gradient input is either the
  measured plant output or its own analytic state);
- a high-gain adaptive tracker that pins the plant output to r_i while
  estimating the unknown plant parameters by a Lyapunov-based law.

Synthesis: feedback gains come from pole placement on the tracking-error
companion matrix, and the adaptation law is scaled through the solution of
a Lyapunov equation for that matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .costs import CostSet
from .graph import Topology, laplacian
from .numerics import is_hurwitz

VARIANTS = ("online", "offline", "sigma_mod")
GRADIENT_SOURCES = ("measured", "analytic")

# Tight residual demanded from every Lyapunov solve/check.
LYAPUNOV_RESIDUAL_TOL = 1e-9


def design_gains(order: int, desired_roots=None) -> np.ndarray:
    """Feedback gains k placing the tracking-error poles at the desired roots.

    The error dynamics have characteristic polynomial
    s^n - k_n s^(n-1) - ... - k_2 s - k_1, so k_j is minus the coefficient of
    s^(j-1) in the expanded pole polynomial.  Roots must be conjugate-closed
    with negative real parts.  Default: all roots at -2.
    """
    if not isinstance(order, (int, np.integer)) or order < 1:
        raise ValueError("order must be a positive integer")
    if desired_roots is None:
        roots = np.full(order, -2.0, dtype=complex)
    else:
        roots = np.asarray(desired_roots, dtype=complex).reshape(-1)
    if len(roots) != order:
        raise ValueError(f"expected {order} roots, got {len(roots)}")
    if np.any(roots.real >= 0.0):
        raise ValueError("all desired roots must have negative real part")
    if not np.allclose(np.sort_complex(roots), np.sort_complex(roots.conj()),
                       rtol=0.0, atol=1e-9):
        raise ValueError("desired roots must be closed under conjugation")
    coeffs = np.poly(roots)
    if np.max(np.abs(coeffs.imag)) > 1e-9:
        raise ValueError("pole polynomial is not real; check the root set")
    return -coeffs.real[1:][::-1]


def companion(k) -> np.ndarray:
    """Companion matrix of the gain vector: shift rows stacked over k.

    Its eigenvalues are exactly the designed roots.
    """
    k = np.asarray(k, dtype=float).reshape(-1)
    n = len(k)
    if n < 1:
        raise ValueError("k must be nonempty")
    A = np.zeros((n, n))
    if n > 1:
        A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = k
    return A


def solve_lyapunov(A) -> np.ndarray:
    """Solve A'P + PA = -2I for the symmetric positive definite P.

    Dense Kronecker vectorization; the matrices here are tiny (agent order),
    so the O(n^6) solve is irrelevant.  Rejects non-Hurwitz input and verifies
    the residual and positive definiteness of the result.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not is_hurwitz(A):
        raise ValueError("A must be Hurwitz for the Lyapunov equation to have "
                         "a positive definite solution")
    n = A.shape[0]
    eye = np.eye(n)
    coeff = np.kron(A.T, eye) + np.kron(eye, A.T)
    vec_p = np.linalg.solve(coeff, (-2.0 * eye).reshape(-1))
    P = vec_p.reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.max(np.abs(A.T @ P + P @ A + 2.0 * eye))
    if residual > LYAPUNOV_RESIDUAL_TOL:
        raise RuntimeError(f"Lyapunov residual {residual:.3g} exceeds tolerance")
    if np.linalg.eigvalsh(P)[0] <= 0.0:
        raise RuntimeError("Lyapunov solution is not positive definite")
    return P


@dataclass(frozen=True, eq=False)
class GainSet:
    """Synthesized tracker constants for one agent.

    k: feedback gains; epsilon: the high-gain scaling; A: the error companion
    matrix; P: its Lyapunov matrix (A'P + PA = -2I); b1/b2: first/last
    standard basis vectors of the error space.
    """

    k: np.ndarray
    epsilon: float
    A: np.ndarray
    P: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float).reshape(-1)
        n = len(k)
        if n < 1:
            raise ValueError("k must be nonempty")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        A = np.asarray(self.A, dtype=float)
        P = np.asarray(self.P, dtype=float)
        if A.shape != (n, n) or P.shape != (n, n):
            raise ValueError("A and P must be square with the order of k")
        if not is_hurwitz(A):
            raise ValueError("gain polynomial is not Hurwitz")
        residual = np.max(np.abs(A.T @ P + P @ A + 2.0 * np.eye(n)))
        if residual > LYAPUNOV_RESIDUAL_TOL:
            raise ValueError(f"Lyapunov residual {residual:.3g} exceeds tolerance")
        if np.max(np.abs(P - P.T)) > 1e-12 or np.linalg.eigvalsh(P)[0] <= 0.0:
            raise ValueError("P must be symmetric positive definite")
        b1 = np.asarray(self.b1, dtype=float).reshape(-1)
        b2 = np.asarray(self.b2, dtype=float).reshape(-1)
        e1 = np.zeros(n)
        e1[0] = 1.0
        en = np.zeros(n)
        en[-1] = 1.0
        if not np.array_equal(b1, e1):
            raise ValueError("b1 must be the first standard basis vector")
        if not np.array_equal(b2, en):
            raise ValueError("b2 must be the last standard basis vector")
        for name, arr in (("k", k), ("A", A), ("P", P), ("b1", b1), ("b2", b2)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def order(self) -> int:
        return len(self.k)


def build_gains(order: int, epsilon: float, poles=None) -> GainSet:
    """Pole-place, solve the Lyapunov equation, and bundle the GainSet."""
    k = design_gains(order, poles)
    A = companion(k)
    P = solve_lyapunov(A)
    b1 = np.zeros(order)
    b1[0] = 1.0
    b2 = np.zeros(order)
    b2[-1] = 1.0
    return GainSet(k=k, epsilon=epsilon, A=A, P=P, b1=b1, b2=b2)


@dataclass(frozen=True, eq=False)
class AdaptiveLaw:
    """Parameter-estimator settings for one agent.

    variant: "online" (measured-output gradients), "offline" (analytic
    generator gradients), or "sigma_mod" (online plus a leak -sigma*theta_hat
    for robustness at the price of a small bias).  Lambda is the positive
    definite adaptation gain; sigma is used only by sigma_mod.
    """

    variant: str
    Lambda: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}"
            )
        lam = np.asarray(self.Lambda, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise ValueError("Lambda must be a square matrix")
        if lam.size:
            if np.max(np.abs(lam - lam.T)) > 1e-12:
                raise ValueError("Lambda must be symmetric")
            if np.linalg.eigvalsh(lam)[0] <= 0.0:
                raise ValueError("Lambda must be positive definite")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.variant == "sigma_mod" and not self.sigma > 0.0:
            raise ValueError("sigma must be positive for the sigma_mod variant")
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "Lambda", lam)

    @property
    def gradient_source(self) -> str:
        """Which signal feeds the generator's gradient for this variant."""
        return "analytic" if self.variant == "offline" else "measured"


@dataclass
class ControllerState:
    """Per-agent controller state: generator pair (r, lam) and estimate."""

    r: float
    lam: float
    theta_hat: np.ndarray

    def __post_init__(self):
        self.theta_hat = np.asarray(self.theta_hat, dtype=float).reshape(-1)


def generator_rhs(costs: CostSet, topology: Topology, r, lam,
                  gradient_source: str, y=None, lap=None):
    """Consensus-coupled gradient flow producing the reference signals.

    r_i' = -grad f_i(s_i) - sum_j a_ij (lam_i - lam_j)
    lam_i' = sum_j a_ij (r_i - r_j)

    with s = y (measured outputs) or s = r (the generator's own state).
    ``lap`` optionally supplies a precomputed Laplacian.  Returns (r', lam').
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    n = topology.n_agents
    if len(costs) != n or len(r) != n or len(lam) != n:
        raise ValueError("costs, r, and lam must all match the agent count")
    if gradient_source not in GRADIENT_SOURCES:
        raise ValueError(
            f"gradient_source must be one of {GRADIENT_SOURCES}, "
            f"got {gradient_source!r}"
        )
    if gradient_source == "measured":
        if y is None:
            raise ValueError("measured gradient source requires y")
        s = np.asarray(y, dtype=float).reshape(-1)
        if len(s) != n:
            raise ValueError("y must match the agent count")
    else:
        s = r
    if lap is None:
        lap = laplacian(topology)
    g = np.array([costs.costs[i].grad(s[i]) for i in range(n)], dtype=float)
    r_dot = -g - lap @ lam
    lam_dot = lap @ r
    return r_dot, lam_dot


def error_transform(x, r: float, epsilon: float) -> np.ndarray:
    """Scaled tracking-error coordinates (x1 - r, eps*x2, ..., eps^(n-1)*xn)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    x_hat = epsilon ** np.arange(len(x)) * x
    x_hat[0] = x[0] - r
    return x_hat


def control_input(gains: GainSet, x, r: float, theta_hat, basis_value) -> float:
    """Certainty-equivalence input: cancel theta_hat' p, then high-gain feedback.

    u = -theta_hat' p + (k_1 (x1 - r) + sum_{j>=2} eps^(j-1) k_j x_j) / eps^n
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = gains.order
    if len(x) != n:
        raise ValueError(f"x must have length {n}, got {len(x)}")
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    basis_value = np.asarray(basis_value, dtype=float).reshape(-1)
    if len(theta_hat) != len(basis_value):
        raise ValueError("theta_hat and basis_value must have equal length")
    eps = gains.epsilon
    c = gains.k * eps ** np.arange(n) / eps ** n
    return float(c @ x - c[0] * r - theta_hat @ basis_value)


def adaptation_rhs(law: AdaptiveLaw, gains: GainSet, basis_value, x_hat,
                   theta_hat) -> np.ndarray:
    """Estimator derivative: Lambda * p * (b2' P x_hat), with an optional leak.

    The sigma_mod variant adds -sigma * theta_hat; online and offline share
    the same law (they differ only in the generator's gradient source).
    """
    basis_value = np.asarray(basis_value, dtype=float).reshape(-1)
    x_hat = np.asarray(x_hat, dtype=float).reshape(-1)
    theta_hat = np.asarray(theta_hat, dtype=float).reshape(-1)
    if len(x_hat) != gains.order:
        raise ValueError(f"x_hat must have length {gains.order}")
    if len(basis_value) != len(theta_hat):
        raise ValueError("basis_value and theta_hat must have equal length")
    s = float(gains.b2 @ (gains.P @ x_hat))
    d_theta = law.Lambda @ (basis_value * s)
    if law.variant == "sigma_mod":
        d_theta = d_theta - law.sigma * theta_hat
    return d_theta
