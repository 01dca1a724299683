import math

import numpy as np
import pytest

from embopt import (
    BUILTIN_KINDS,
    CostSet,
    LocalCost,
    builtin_cost,
    global_gradient,
    minimize_global,
    sampled_curvature_bounds,
)


def flagship_costs() -> CostSet:
    return CostSet(
        (
            builtin_cost("quadratic", [8.0]),
            builtin_cost("quad_over_sqrt"),
            builtin_cost("quad_over_log"),
            builtin_cost("logsumexp_quad"),
        )
    )


def sample_cost(kind: str) -> LocalCost:
    return builtin_cost(kind, [2.5] if kind in ("quadratic", "consensus") else [])


def test_quadratic_values_and_gradient():
    cost = builtin_cost("quadratic", [8.0])
    assert cost.eval(8.0) == 0.0
    assert cost.grad(8.0) == 0.0
    assert cost.eval(0.0) == 64.0
    assert cost.grad(0.0) == -16.0
    assert cost.convexity_lower == 2.0
    assert cost.lipschitz_upper == 2.0


def test_logsumexp_quad_at_origin():
    cost = builtin_cost("logsumexp_quad")
    assert abs(cost.eval(0.0) - math.log(2.0)) <= 1e-15
    assert cost.grad(0.0) == 0.0


def test_builtin_cost_validation():
    with pytest.raises(ValueError, match="unknown cost kind"):
        builtin_cost("cubic")
    with pytest.raises(ValueError, match="exactly one parameter"):
        builtin_cost("quadratic")
    with pytest.raises(ValueError, match="takes no parameters"):
        builtin_cost("quad_over_sqrt", [1.0])


def test_cost_set_validation():
    with pytest.raises(ValueError, match="at least one"):
        CostSet(())
    with pytest.raises(ValueError, match="LocalCost"):
        CostSet((builtin_cost("quadratic", [1.0]), "not a cost"))
    costs = flagship_costs()
    assert len(costs) == 4
    assert all(isinstance(c, LocalCost) for c in costs)


def test_local_cost_validation():
    with pytest.raises(ValueError, match="callable"):
        LocalCost(eval=1.0, grad=lambda y: y)
    with pytest.raises(ValueError, match="convexity_lower"):
        LocalCost(eval=lambda y: y, grad=lambda y: y, convexity_lower=0.0)


def test_global_gradient_examples():
    quads = CostSet(tuple(builtin_cost("quadratic", [c]) for c in (1.0, 2.0, 3.0, 4.0)))
    assert global_gradient(quads, 2.5) == 0.0
    single = CostSet((builtin_cost("quadratic", [8.0]),))
    assert global_gradient(single, 0.0) == -16.0


def test_minimize_global_quadratics():
    quads = CostSet(tuple(builtin_cost("quadratic", [c]) for c in (1.0, 2.0, 3.0, 4.0)))
    assert abs(minimize_global(quads) - 2.5) <= 1e-8
    single = CostSet((builtin_cost("quadratic", [8.0]),))
    assert abs(minimize_global(single) - 8.0) <= 1e-8


def test_minimize_global_bad_bracket():
    single = CostSet((builtin_cost("quadratic", [8.0]),))
    with pytest.raises(ValueError, match="widen the bracket"):
        minimize_global(single, bracket=(10.0, 20.0))
    with pytest.raises(ValueError, match="lo < hi"):
        minimize_global(single, bracket=(5.0, 5.0))


def test_minimize_global_flagship_band_and_repeatability():
    costs = flagship_costs()
    y_star = minimize_global(costs)
    assert abs(y_star - 3.24) <= 0.005
    assert abs(global_gradient(costs, y_star)) <= 1e-8
    # restarting from a tight bracket around the answer moves it by at most
    # 2*tol/(total convexity) — use 2*tol as a generous cap
    again = minimize_global(costs, bracket=(y_star - 0.5, y_star + 0.5))
    assert abs(again - y_star) <= 2e-8


def test_global_gradient_strictly_increasing():
    costs = flagship_costs()
    ys = np.linspace(-100.0, 100.0, 20001)
    total = np.zeros_like(ys)
    for cost in costs:
        total += np.asarray(cost.grad(ys), dtype=float)
    assert np.all(np.diff(total) > 0.0)


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_gradient_matches_finite_differences(kind):
    cost = sample_cost(kind)
    step = 1e-5
    for y in np.linspace(-10.0, 10.0, 21):
        grad = float(cost.grad(y))
        approx = (float(cost.eval(y + step)) - float(cost.eval(y - step))) / (2.0 * step)
        assert abs(grad - approx) <= 1e-5 * (1.0 + abs(grad))


@pytest.mark.parametrize("kind", BUILTIN_KINDS)
def test_sampled_curvature_positive(kind):
    cost = sample_cost(kind)
    lower, upper = sampled_curvature_bounds(cost, -100.0, 100.0)
    assert 0.0 < lower <= upper
    if cost.convexity_lower is not None:
        assert lower >= cost.convexity_lower - 1e-9
    if cost.lipschitz_upper is not None:
        assert upper <= cost.lipschitz_upper + 1e-9
    if kind in ("quadratic", "consensus"):
        assert abs(lower - 2.0) <= 1e-9
        assert abs(upper - 2.0) <= 1e-9
