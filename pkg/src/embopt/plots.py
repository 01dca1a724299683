"""Static vector-graphics figures rendered from a recorded trajectory."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sim import Trajectory


def plot_outputs(trajectory: Trajectory, path: str) -> None:
    """All agent outputs over time with the global optimum as a reference line."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(trajectory.n_agents):
        ax.plot(trajectory.times, trajectory.y[:, i], label=f"agent {i + 1}")
    ax.axhline(trajectory.y_star, color="k", linestyle="--", linewidth=1,
               label="optimum")
    ax.set_xlabel("t")
    ax.set_ylabel("output y")
    ax.set_title("Agent outputs")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_estimates(trajectory: Trajectory, components, path: str) -> None:
    """Stacked panels of the selected estimate components for every agent.

    Each panel shows theta_hat[j] for all agents plus dashed lines at the
    true values.  Components beyond an agent's parameter count are skipped
    for that agent.
    """
    components = [int(c) for c in components]
    fig, axes = plt.subplots(len(components), 1, figsize=(7, 3 * len(components)),
                             sharex=True, squeeze=False)
    for row, j in enumerate(components):
        ax = axes[row, 0]
        for i in range(trajectory.n_agents):
            th = trajectory.theta_hat[i]
            if j < th.shape[1]:
                ax.plot(trajectory.times, th[:, j], label=f"agent {i + 1}")
                ax.axhline(trajectory.theta_true[i][j], color="k",
                           linestyle="--", linewidth=0.8)
        ax.set_ylabel(f"estimate {j + 1}")
        ax.legend(loc="best", fontsize=8)
    axes[-1, 0].set_xlabel("t")
    axes[0, 0].set_title("Parameter estimates (dashed: true values)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_run_plots(trajectory: Trajectory, out_dir: str) -> list:
    """Write the standard figure set for one run; returns the file paths."""
    import os

    written = []
    outputs = os.path.join(out_dir, "outputs.svg")
    plot_outputs(trajectory, outputs)
    written.append(outputs)
    d_max = max((th.shape[1] for th in trajectory.theta_hat), default=0)
    if d_max >= 1:
        p12 = os.path.join(out_dir, "estimates_12.svg")
        plot_estimates(trajectory, [j for j in (0, 1) if j < d_max], p12)
        written.append(p12)
    if d_max >= 3:
        p34 = os.path.join(out_dir, "estimates_34.svg")
        plot_estimates(trajectory, [j for j in (2, 3) if j < d_max], p34)
        written.append(p34)
    return written
