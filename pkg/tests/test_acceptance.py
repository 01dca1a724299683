"""Release acceptance suite: one test per criterion, sharing cached runs.

Each test prints one pass/fail line under ``pytest -v``.  Expensive
closed-loop trajectories come from the session-scoped fixtures in
``conftest.py`` so every configuration is simulated exactly once.
"""

import math
import time

import numpy as np

from embopt import (
    AdaptiveLaw,
    AgentModel,
    CostSet,
    IntegratorConfig,
    OdeSystem,
    Scenario,
    Topology,
    basis_from_names,
    build_gains,
    builtin_cost,
    companion,
    default_controller_states,
    design_gains,
    generator_rhs,
    integrate,
    laplacian,
    metrics,
    minimize_global,
    pe_monitor,
    run,
    solve_lyapunov,
    topology_from_edges,
)

GAP_LIMIT = 0.05
SPREAD_LIMIT = 0.1
ESTIMATE_LIMIT = 0.1


def flagship_costs() -> CostSet:
    return CostSet(
        (
            builtin_cost("quadratic", [8.0]),
            builtin_cost("quad_over_sqrt"),
            builtin_cost("quad_over_log"),
            builtin_cost("logsumexp_quad"),
        )
    )


def ring_with_chord() -> Topology:
    return topology_from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 2, 1.0)])


def random_stable_roots(rng, order):
    roots = []
    remaining = order
    while remaining:
        if remaining >= 2 and rng.random() < 0.5:
            re = -rng.uniform(0.2, 3.0)
            im = rng.uniform(0.1, 3.0)
            roots += [complex(re, im), complex(re, -im)]
            remaining -= 2
        else:
            roots.append(complex(-rng.uniform(0.2, 3.0), 0.0))
            remaining -= 1
    return np.array(roots)


def test_criterion_01_global_optimum():
    costs = flagship_costs()
    start = time.perf_counter()
    y_star = minimize_global(costs)
    elapsed = time.perf_counter() - start
    assert abs(y_star - 3.24) <= 0.005, f"optimum {y_star!r} outside 3.24 +/- 0.005"
    assert elapsed < 1.0, f"optimum took {elapsed:.3f} s (limit 1 s)"


def test_criterion_02_flagship_consensus_run(vdp4_run50):
    _, trajectory, elapsed = vdp4_run50
    assert trajectory.times[-1] == 50.0
    gap = float(trajectory.gap[-1].max())
    outputs = trajectory.y[-1]
    spread = float(outputs.max() - outputs.min())
    assert gap <= GAP_LIMIT, f"final optimality gap {gap:.4f} exceeds {GAP_LIMIT}"
    assert spread <= SPREAD_LIMIT, f"final spread {spread:.4f} exceeds {SPREAD_LIMIT}"
    assert elapsed < 30.0, f"50 s run took {elapsed:.1f} s wall clock (limit 30 s)"


def test_criterion_03_estimates_converge_under_excitation(vdp4_run100):
    scenario, trajectory = vdp4_run100
    report = pe_monitor(trajectory, scenario)
    end = trajectory.index_at(100.0)
    checked = {0: "linear stiffness", 2: "disturbance sine amplitude",
               3: "disturbance cosine amplitude"}
    problems = []
    for i in range(scenario.n_agents):
        agent = report.agents[i]
        if bool(agent.component_excited[1]):
            problems.append(
                f"agent {i + 1}: transient damping regressor flagged as excited"
            )
        estimate = trajectory.theta_hat[i][end]
        truth = trajectory.theta_true[i]
        for j, label in checked.items():
            err = abs(float(estimate[j] - truth[j]))
            if err > ESTIMATE_LIMIT:
                problems.append(
                    f"agent {i + 1} {label}: estimate error {err:.3f} at t = 100 "
                    f"exceeds {ESTIMATE_LIMIT}"
                )
    assert not problems, "\n" + "\n".join(problems)


def test_criterion_04_offline_variant_across_epsilon(offline_runs):
    for epsilon, (_, trajectory) in offline_runs.items():
        summary = metrics(trajectory)
        assert summary.final_gap_max <= GAP_LIMIT, (
            f"epsilon {epsilon}: gap {summary.final_gap_max:.4f}"
        )
        assert summary.consensus_spread_final <= SPREAD_LIMIT, (
            f"epsilon {epsilon}: spread {summary.consensus_spread_final:.4f}"
        )


def test_criterion_05_generator_exponential_convergence():
    centers = (1.0, 2.0, 3.0, 4.0)
    costs = CostSet(tuple(builtin_cost("quadratic", [c]) for c in centers))
    topology = ring_with_chord()
    lap = laplacian(topology)

    def rhs(t, z):
        r_dot, lam_dot = generator_rhs(costs, topology, z[:4], z[4:],
                                       "analytic", lap=lap)
        return np.concatenate([r_dot, lam_dot])

    times, deviations = [], []

    def observer(t, z):
        times.append(t)
        deviations.append(np.linalg.norm(z[:4] - 2.5))

    final = integrate(OdeSystem(dim=8, rhs=rhs), np.zeros(8),
                      IntegratorConfig(step=1e-3, t_end=30.0), observer)
    times = np.asarray(times)
    deviations = np.asarray(deviations)

    np.testing.assert_allclose(final[:4], 2.5, atol=1e-6)
    mask = times >= 5.0
    log_dev = np.log(deviations[mask])
    slope, intercept = np.polyfit(times[mask], log_dev, 1)
    fit = slope * times[mask] + intercept
    ss_res = float(np.sum((log_dev - fit) ** 2))
    ss_tot = float(np.sum((log_dev - log_dev.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot
    assert slope < 0.0, f"deviation is not decaying (slope {slope:.4f})"
    assert r_squared >= 0.99, f"decay is not exponential (R^2 {r_squared:.5f})"


def test_criterion_06_gain_synthesis_random_poles():
    hand_A = np.array([[0.0, 1.0], [-4.0, -4.0]])
    hand_P = np.array([[2.25, 0.25], [0.25, 0.3125]])
    np.testing.assert_allclose(solve_lyapunov(hand_A), hand_P, atol=1e-12)

    rng = np.random.default_rng(987654321)
    for _ in range(100):
        order = int(rng.integers(1, 7))
        A = companion(design_gains(order, random_stable_roots(rng, order)))
        P = solve_lyapunov(A)
        residual = np.max(np.abs(A.T @ P + P @ A + 2.0 * np.eye(order)))
        assert residual <= 1e-9, f"residual {residual:.3g} for order {order}"
        assert np.linalg.eigvalsh(P)[0] > 0.0


def test_criterion_07_multiplier_conservation(vdp4_run50, vdp4_run100,
                                              offline_runs, sigma_runs,
                                              epsilon_runs):
    trajectories = [vdp4_run50[1], vdp4_run100[1]]
    trajectories += [t for _, t in offline_runs.values()]
    trajectories += [t for _, t in sigma_runs.values()]
    trajectories += [t for _, t in epsilon_runs.values()]
    for trajectory in trajectories:
        lam_sum = trajectory.lam.sum(axis=1)
        drift = float(np.abs(lam_sum - lam_sum[0]).max())
        assert drift <= 1e-6, f"multiplier sum drifted by {drift:.3g}"


def test_criterion_08_excitation_monitor_analytic_case():
    basis = basis_from_names(("sin_t", "cos_t"))
    agent = AgentModel(order=1, basis=basis, true_theta=np.zeros(2))
    initial_x = (np.zeros(1),)
    scenario = Scenario(
        topology=Topology(1, np.zeros((1, 1))),
        costs=CostSet((builtin_cost("quadratic", [0.0]),)),
        agents=(agent,),
        gains=(build_gains(1, 0.5),),
        laws=(AdaptiveLaw(variant="online", Lambda=np.eye(2)),),
        initial_x=initial_x,
        initial_ctrl=default_controller_states((agent,), initial_x),
        integrator=IntegratorConfig(step=1e-3, t_end=8.0),
        pe_window=math.pi,
        pe_start=0.5,
        pe_floor=0.05,
    )
    report = pe_monitor(run(scenario), scenario)
    excitation = report.agents[0]
    assert len(excitation.window_starts) > 0
    target = 0.5 * np.eye(2)
    worst = float(np.abs(excitation.grams - target).max())
    assert worst <= 1e-4, f"windowed average deviates from I/2 by {worst:.2e}"
    np.testing.assert_allclose(excitation.min_eigs, 0.5, atol=1e-4)
    assert excitation.pe_satisfied


def test_criterion_09_monotone_parameter_trends(epsilon_runs, sigma_runs):
    tracking = [metrics(epsilon_runs[eps][1]).tracking_error_final_max
                for eps in (0.4, 0.2, 0.1)]
    assert tracking[0] >= tracking[1] >= tracking[2], (
        f"tracking errors not monotone in epsilon: {tracking}"
    )
    gaps = [metrics(sigma_runs[sigma][1]).final_gap_max
            for sigma in (0.2, 0.1, 0.05)]
    assert gaps[0] >= gaps[1] >= gaps[2], (
        f"optimality gaps not monotone in the leak rate: {gaps}"
    )


def test_criterion_10_builtin_gradients_match_differences():
    catalogue = (
        builtin_cost("quadratic", [8.0]),
        builtin_cost("consensus", [2.5]),
        builtin_cost("quad_over_sqrt"),
        builtin_cost("quad_over_log"),
        builtin_cost("logsumexp_quad"),
    )
    step = 1e-5
    for cost in catalogue:
        for y in np.linspace(-10.0, 10.0, 21):
            grad = float(cost.grad(y))
            approx = (float(cost.eval(y + step))
                      - float(cost.eval(y - step))) / (2.0 * step)
            assert abs(grad - approx) <= 1e-5 * (1.0 + abs(grad))
