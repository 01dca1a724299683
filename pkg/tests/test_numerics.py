import math

import numpy as np
import pytest

from embopt import (
    DivergenceError,
    IntegratorConfig,
    OdeSystem,
    integrate,
    is_hurwitz,
    min_eig_symmetric,
)


def test_integrate_scalar_linear_decay():
    system = OdeSystem(dim=1, rhs=lambda t, x: -x)
    final = integrate(system, np.array([1.0]), IntegratorConfig(step=0.01, t_end=1.0))
    assert abs(final[0] - math.exp(-1.0)) <= 1e-9


def test_integrate_rotation_full_period():
    spin = np.array([[0.0, 1.0], [-1.0, 0.0]])
    system = OdeSystem(dim=2, rhs=lambda t, v: spin @ v)
    final = integrate(
        system, np.array([1.0, 0.0]), IntegratorConfig(step=1e-3, t_end=2.0 * math.pi)
    )
    np.testing.assert_allclose(final, [1.0, 0.0], atol=1e-7)


def test_integrate_observer_grid_and_endpoints():
    seen = []
    system = OdeSystem(dim=1, rhs=lambda t, x: np.zeros(1))
    final = integrate(
        system,
        np.array([3.5]),
        IntegratorConfig(step=0.25, t_end=1.1),
        observer=lambda t, x: seen.append((t, x[0])),
    )
    times = [t for t, _ in seen]
    assert times[0] == 0.0
    np.testing.assert_allclose(times, [0.0, 0.25, 0.5, 0.75, 1.0, 1.1], atol=1e-12)
    assert all(value == 3.5 for _, value in seen)
    assert final[0] == 3.5


def test_integrate_exact_step_count_without_remainder():
    times = []
    system = OdeSystem(dim=1, rhs=lambda t, x: np.ones(1))
    integrate(
        system,
        np.zeros(1),
        IntegratorConfig(step=0.1, t_end=0.3),
        observer=lambda t, x: times.append(t),
    )
    np.testing.assert_allclose(times, [0.0, 0.1, 0.2, 0.3], atol=1e-15)
    assert len(times) == 4


def test_integrate_fourth_order_convergence():
    system = OdeSystem(dim=1, rhs=lambda t, x: -x)
    exact = math.exp(-1.0)

    def error(step):
        final = integrate(system, np.array([1.0]), IntegratorConfig(step=step, t_end=1.0))
        return abs(final[0] - exact)

    ratio = error(0.02) / error(0.01)
    assert 12.0 <= ratio <= 20.0


def test_integrate_is_deterministic():
    system = OdeSystem(dim=2, rhs=lambda t, x: np.array([x[1], -x[0] - 0.1 * x[1]]))

    def trace():
        states = []
        integrate(
            system,
            np.array([1.0, -2.0]),
            IntegratorConfig(step=1e-2, t_end=3.0),
            observer=lambda t, x: states.append(x.copy()),
        )
        return np.array(states)

    np.testing.assert_array_equal(trace(), trace())


def test_integrate_raises_on_finite_time_blowup():
    system = OdeSystem(dim=1, rhs=lambda t, x: x**2)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(DivergenceError) as info:
            integrate(system, np.array([1.0]), IntegratorConfig(step=1e-3, t_end=2.0))
    # solution of x' = x^2, x(0)=1 escapes at t = 1
    assert 0.9 < info.value.time < 1.1
    assert not np.all(np.isfinite(info.value.state))


def test_integrate_input_validation():
    system = OdeSystem(dim=2, rhs=lambda t, x: x)
    with pytest.raises(ValueError, match="shape"):
        integrate(system, np.zeros(3), IntegratorConfig(step=0.1, t_end=1.0))
    with pytest.raises(ValueError, match="positive"):
        IntegratorConfig(step=0.0, t_end=1.0)
    with pytest.raises(ValueError, match="positive"):
        IntegratorConfig(step=0.1, t_end=-1.0)
    with pytest.raises(ValueError, match="positive"):
        OdeSystem(dim=0, rhs=lambda t, x: x)


def test_is_hurwitz_examples():
    assert is_hurwitz(np.array([[-1.0]]))
    assert is_hurwitz(np.array([[0.0, 1.0], [-4.0, -4.0]]))
    assert not is_hurwitz(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not is_hurwitz(np.array([[1e-6]]))
    with pytest.raises(ValueError, match="square"):
        is_hurwitz(np.zeros((2, 3)))


def test_min_eig_symmetric_examples():
    assert abs(min_eig_symmetric(np.array([[math.pi / 2]])) - math.pi / 2) <= 1e-15
    assert abs(min_eig_symmetric(np.diag([3.0, 1.0])) - 1.0) <= 1e-15
    assert abs(min_eig_symmetric(np.array([[1.0, 1.0], [1.0, 1.0]]))) <= 1e-12
    assert min_eig_symmetric(np.zeros((0, 0))) == math.inf
    with pytest.raises(ValueError, match="symmetric"):
        min_eig_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
