"""Agent dynamics: integrator chains with linearly parameterized uncertainty.

Each agent is a chain of integrators of order n whose last state is driven by
theta' p(x, t) + u, where p is a known basis vector and theta an unknown
constant parameter.  The output is the first state.  Sinusoidal input
disturbances generated by a marginally stable exosystem are folded into the
basis as sin/cos components with unknown amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


# --- named basis components -------------------------------------------------
#
# Module-level functions so config-built models can cross process boundaries.


def neg_x1(x, t):
    """-x1: linear stiffness regressor."""
    return -x[0]


def vdp_damping(x, t):
    """(1 - x1^2) x2: Van der Pol nonlinear damping regressor."""
    return (1.0 - x[0] * x[0]) * x[1]


def sin_t(x, t):
    """sin(t): unit-frequency disturbance quadrature component."""
    return math.sin(t)


def cos_t(x, t):
    """cos(t): unit-frequency disturbance in-phase component."""
    return math.cos(t)


BASIS_REGISTRY = {
    "neg_x1": neg_x1,
    "vdp_damping": vdp_damping,
    "sin_t": sin_t,
    "cos_t": cos_t,
}


@dataclass(frozen=True, eq=False)
class BasisVector:
    """Known regressor vector p(x, t): a tuple of scalar component maps."""

    components: tuple
    names: Optional[tuple] = None

    def __post_init__(self):
        comps = tuple(self.components)
        for f in comps:
            if not callable(f):
                raise ValueError("basis components must be callables (x, t) -> float")
        object.__setattr__(self, "components", comps)
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != len(comps):
                raise ValueError("names must match the number of components")
            object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, x, t: float) -> np.ndarray:
        return np.array([f(x, t) for f in self.components], dtype=float)

    def label(self, j: int) -> str:
        if self.names is not None:
            return self.names[j]
        return f"component_{j + 1}"


def basis_from_names(names: Sequence[str]) -> BasisVector:
    """Look up registered component names and assemble a BasisVector."""
    comps = []
    for name in names:
        fn = BASIS_REGISTRY.get(name)
        if fn is None:
            raise ValueError(
                f"unknown basis component {name!r}; registered: "
                f"{sorted(BASIS_REGISTRY)}"
            )
        comps.append(fn)
    return BasisVector(components=tuple(comps), names=tuple(names))


@dataclass(frozen=True, eq=False)
class AgentModel:
    """Chain of integrators of the given order with uncertainty theta' p(x, t)."""

    order: int
    basis: BasisVector
    true_theta: np.ndarray

    def __post_init__(self):
        if not isinstance(self.order, (int, np.integer)) or self.order < 1:
            raise ValueError("order must be a positive integer")
        th = np.asarray(self.true_theta, dtype=float)
        if th.ndim != 1 or len(th) != self.basis.dim:
            raise ValueError(
                f"true_theta must be a vector of length {self.basis.dim}, "
                f"got shape {th.shape}"
            )
        th = th.copy()
        th.setflags(write=False)
        object.__setattr__(self, "true_theta", th)


def agent_rhs(model: AgentModel, x, u: float, t: float) -> np.ndarray:
    """State derivative of one agent under input u at time t.

    The first order-1 components shift (pure chain); the last is
    theta' p(x, t) + u.  The measured output is x[0].
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (model.order,):
        raise ValueError(f"x must have shape ({model.order},), got {x.shape}")
    dx = np.empty(model.order)
    dx[:-1] = x[1:]
    dx[-1] = float(model.true_theta @ model.basis(x, t)) + u
    return dx


# --- sinusoidal disturbance exosystem ----------------------------------------

_ROTATION_S = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class Exosystem:
    """Marginally stable generator of the disturbance d(t) = D exp(S t) v0."""

    D: np.ndarray
    S: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=float).reshape(-1)
        S = np.asarray(self.S, dtype=float)
        v0 = np.asarray(self.v0, dtype=float).reshape(-1)
        if D.shape != (2,):
            raise ValueError("D must be a length-2 row")
        if S.shape != (2, 2):
            raise ValueError("S must be 2x2")
        if v0.shape != (2,):
            raise ValueError("v0 must be a length-2 vector")
        for name, arr in (("D", D), ("S", S), ("v0", v0)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def rhs(self, t: float, v) -> np.ndarray:
        """Exosystem dynamics v' = S v (for integration oracles)."""
        return self.S @ np.asarray(v, dtype=float)

    def disturbance_amplitudes(self) -> tuple[float, float]:
        """(A1, A2) with d(t) = A1 sin t + A2 cos t.

        Closed form for the unit-rotation generator S = [[0, 1], [-1, 0]]:
        exp(S t) rotates v0, giving A1 = D1 v02 - D2 v01 and
        A2 = D1 v01 + D2 v02.  Rejects any other S.
        """
        if not np.array_equal(self.S, _ROTATION_S):
            raise ValueError(
                "closed-form amplitudes require S = [[0, 1], [-1, 0]]"
            )
        d1, d2 = self.D
        v01, v02 = self.v0
        a1 = d1 * v02 - d2 * v01
        a2 = d1 * v01 + d2 * v02
        return float(a1), float(a2)


def vdp_preset(a: float, b: float, exo: Exosystem) -> AgentModel:
    """Controlled Van der Pol oscillator with an additive sinusoidal disturbance.

    Order 2 with basis (-x1, (1 - x1^2) x2, sin t, cos t) and true parameters
    (a, b, A1, A2), where the disturbance amplitudes follow from the
    exosystem's initial state.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not b > 0:
        raise ValueError("b must be positive")
    a1, a2 = exo.disturbance_amplitudes()
    basis = basis_from_names(("neg_x1", "vdp_damping", "sin_t", "cos_t"))
    return AgentModel(order=2, basis=basis,
                      true_theta=np.array([a, b, a1, a2]))
