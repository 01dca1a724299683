"""Scalar convex local costs, their gradients, and the global optimum oracle.

Each agent owns a differentiable cost f_i(y); the network's goal is to agree
on the minimizer of the sum.  Builtin costs carry hand-derived gradients that
are exercised against finite differences in the test suite, because the
closed loop evaluates gradients inside a stiff integration loop where
numerical differentiation would be both slow and noisy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class LocalCost:
    """One agent's differentiable scalar cost.

    ``eval`` and ``grad`` accept a float or an ndarray and act elementwise.
    ``convexity_lower`` / ``lipschitz_upper``, when given, bound every secant
    slope of the gradient (strong-convexity and smoothness constants).
    """

    eval: Callable
    grad: Callable
    convexity_lower: Optional[float] = None
    lipschitz_upper: Optional[float] = None

    def __post_init__(self):
        if not callable(self.eval) or not callable(self.grad):
            raise ValueError("eval and grad must be callables")
        if self.convexity_lower is not None and not self.convexity_lower > 0:
            raise ValueError("convexity_lower must be positive when given")
        if self.lipschitz_upper is not None and not self.lipschitz_upper > 0:
            raise ValueError("lipschitz_upper must be positive when given")


@dataclass(frozen=True, eq=False)
class CostSet:
    """The per-agent costs whose sum defines the global objective."""

    costs: tuple

    def __post_init__(self):
        costs = tuple(self.costs)
        if not costs:
            raise ValueError("CostSet must contain at least one cost")
        for c in costs:
            if not isinstance(c, LocalCost):
                raise ValueError("CostSet entries must be LocalCost instances")
        object.__setattr__(self, "costs", costs)

    def __len__(self) -> int:
        return len(self.costs)

    def __iter__(self):
        return iter(self.costs)


# --- builtin cost catalogue -------------------------------------------------
#
# All evaluators/gradients are module-level functions (or partials of them) so
# cost sets built from config dictionaries can cross process boundaries.


def _quadratic_value(c, y):
    return (y - c) ** 2


def _quadratic_grad(c, y):
    return 2.0 * (y - c)


def _quad_over_sqrt_value(y):
    y2 = np.square(y)
    return y2 / (20.0 * np.sqrt(y2 + 1.0)) + y2


def _quad_over_sqrt_grad(y):
    y2 = np.square(y)
    return y * (y2 + 2.0) / (20.0 * (y2 + 1.0) ** 1.5) + 2.0 * y


def _quad_over_log_value(y):
    y2 = np.square(y)
    return y2 / (80.0 * np.log(y2 + 2.0)) + (y - 5.0) ** 2


def _quad_over_log_grad(y):
    y2 = np.square(y)
    lg = np.log(y2 + 2.0)
    return y * (lg - y2 / (y2 + 2.0)) / (40.0 * lg * lg) + 2.0 * (y - 5.0)


def _logsumexp_quad_value(y):
    z = 0.05 * np.asarray(y, dtype=float)
    return np.logaddexp(-z, z) + np.square(y)


def _logsumexp_quad_grad(y):
    return 0.05 * np.tanh(0.05 * np.asarray(y, dtype=float)) + 2.0 * y


def _make_quadratic(params: Sequence[float], kind: str) -> LocalCost:
    if len(params) != 1:
        raise ValueError(f"{kind} takes exactly one parameter (the center)")
    c = float(params[0])
    return LocalCost(
        eval=partial(_quadratic_value, c),
        grad=partial(_quadratic_grad, c),
        convexity_lower=2.0,
        lipschitz_upper=2.0,
    )


def _make_parameterless(params: Sequence[float], kind: str, ev, gr) -> LocalCost:
    if len(params) != 0:
        raise ValueError(f"{kind} takes no parameters")
    return LocalCost(eval=ev, grad=gr)


BUILTIN_KINDS = ("quadratic", "consensus", "quad_over_sqrt", "quad_over_log",
                 "logsumexp_quad")


def builtin_cost(kind: str, params: Sequence[float] = ()) -> LocalCost:
    """Construct a catalogued cost by name.

    Kinds:
      - ``quadratic(c)``: (y - c)^2
      - ``consensus(y0)``: (y - y0)^2, the output-averaging special case
      - ``quad_over_sqrt``: y^2 / (20 sqrt(y^2 + 1)) + y^2
      - ``quad_over_log``: y^2 / (80 ln(y^2 + 2)) + (y - 5)^2
      - ``logsumexp_quad``: ln(e^{-0.05 y} + e^{0.05 y}) + y^2
    """
    if kind in ("quadratic", "consensus"):
        return _make_quadratic(params, kind)
    if kind == "quad_over_sqrt":
        return _make_parameterless(params, kind, _quad_over_sqrt_value,
                                   _quad_over_sqrt_grad)
    if kind == "quad_over_log":
        return _make_parameterless(params, kind, _quad_over_log_value,
                                   _quad_over_log_grad)
    if kind == "logsumexp_quad":
        return _make_parameterless(params, kind, _logsumexp_quad_value,
                                   _logsumexp_quad_grad)
    raise ValueError(f"unknown cost kind {kind!r}; known kinds: {BUILTIN_KINDS}")


def global_gradient(costs: CostSet, y: float) -> float:
    """Gradient of the summed objective at y."""
    return float(sum(c.grad(y) for c in costs))


def minimize_global(costs: CostSet, bracket=(-100.0, 100.0),
                    tol: float = 1e-8) -> float:
    """Minimizer of the summed objective by bisection on its gradient.

    The global gradient of a sum of strongly convex costs is strictly
    increasing, so bisection on a sign-changing bracket converges
    unconditionally.  Returns y* with |sum of gradients at y*| <= tol.

    Raises ValueError when the bracket does not straddle the minimizer and
    RuntimeError if float resolution is hit before the gradient tolerance.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    if not tol > 0:
        raise ValueError("tol must be positive")
    g_lo = global_gradient(costs, lo)
    g_hi = global_gradient(costs, hi)
    if abs(g_lo) <= tol:
        return lo
    if abs(g_hi) <= tol:
        return hi
    if g_lo > 0.0 or g_hi < 0.0:
        raise ValueError(
            "bracket does not straddle the minimizer: the global gradient has "
            f"the same sign at both ends (grad({lo}) = {g_lo:.3g}, "
            f"grad({hi}) = {g_hi:.3g}); widen the bracket"
        )
    while hi - lo > 4.0 * np.finfo(float).eps * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        g = global_gradient(costs, mid)
        if abs(g) <= tol:
            return mid
        if g < 0.0:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(
        "bisection reached float resolution before meeting the gradient "
        f"tolerance {tol:g}"
    )


def sampled_curvature_bounds(cost: LocalCost, lo: float, hi: float,
                             n: int = 401) -> tuple[float, float]:
    """Extreme secant slopes of the gradient sampled on [lo, hi].

    A positive lower bound certifies strong convexity on the sampled grid
    (not globally); useful for costs whose curvature constants are unknown.
    """
    ys = np.linspace(lo, hi, n)
    g = np.asarray(cost.grad(ys), dtype=float)
    slopes = np.diff(g) / np.diff(ys)
    return float(slopes.min()), float(slopes.max())
