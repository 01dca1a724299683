"""Shared fixtures: expensive closed-loop runs reused across test modules.

All fixtures are session-scoped so each configuration is simulated once no
matter how many tests consume it.  Fixtures that feed timing assertions
return the wall-clock duration of the run alongside the trajectory.
"""

from __future__ import annotations

import time

import pytest

from embopt import load_scenario, run


def _timed_run(scenario):
    start = time.perf_counter()
    trajectory = run(scenario)
    return trajectory, time.perf_counter() - start


@pytest.fixture(scope="session")
def vdp4_run50():
    """Bundled scenario, default settings, horizon 50 s (timed)."""
    scenario = load_scenario("vdp4")
    trajectory, elapsed = _timed_run(scenario)
    return scenario, trajectory, elapsed


@pytest.fixture(scope="session")
def vdp4_run100():
    """Bundled scenario extended to 100 s for estimate/excitation checks."""
    scenario = load_scenario("vdp4", t_end=100.0)
    return scenario, run(scenario)


@pytest.fixture(scope="session")
def offline_runs():
    """Offline-gradient variant at several time-scale separations."""
    results = {}
    for epsilon in (0.2, 0.5, 1.0):
        scenario = load_scenario("vdp4", variant="offline", epsilon=epsilon)
        results[epsilon] = (scenario, run(scenario))
    return results


@pytest.fixture(scope="session")
def sigma_runs():
    """Leaky-adaptation variant at decreasing leak rates."""
    results = {}
    for sigma in (0.2, 0.1, 0.05):
        scenario = load_scenario("vdp4", variant="sigma_mod", sigma=sigma)
        results[sigma] = (scenario, run(scenario))
    return results


@pytest.fixture(scope="session")
def epsilon_runs(vdp4_run50):
    """Default variant at decreasing epsilon (0.2 reuses the timed run)."""
    results = {0.2: (vdp4_run50[0], vdp4_run50[1])}
    for epsilon in (0.4, 0.1):
        scenario = load_scenario("vdp4", epsilon=epsilon)
        results[epsilon] = (scenario, run(scenario))
    return results
