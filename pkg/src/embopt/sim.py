"""Closed-loop assembly, scenario runs, excitation monitoring, and metrics.

The composite state stacks every plant, both generator variables, and every
parameter estimate: [x_1 ... x_N | r (N) | lam (N) | theta_hat_1 ... theta_hat_N].
A run integrates that system with the deterministic fixed-step integrator,
records a decimated trajectory, and derives tracking/optimality/estimation
metrics against the independently computed global optimum.
"""

from __future__ import annotations

import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import (AdaptiveLaw, ControllerState, GainSet, control_input)
from .costs import CostSet, minimize_global
from .graph import Topology, is_connected, laplacian
from .numerics import DivergenceError, IntegratorConfig, OdeSystem, integrate
from .plant import AgentModel

# Any state component beyond this magnitude aborts the run as diverged.
DIVERGENCE_THRESHOLD = 1e6

DEFAULT_PE_WINDOW = 2.0 * math.pi
DEFAULT_PE_START = 10.0
DEFAULT_PE_FLOOR = 0.05


class StiffnessWarning(UserWarning):
    """The integration step is large relative to the fast tracking poles."""


class SimulationDiverged(RuntimeError):
    """A run left the admissible state region; carries blow-up time and agents."""

    def __init__(self, time: float, agents):
        agents = tuple(sorted(int(a) for a in agents))
        labels = ", ".join(str(a + 1) for a in agents)
        super().__init__(
            f"simulation diverged at t = {time:.6g} (agents: {labels or 'unknown'})"
        )
        self.time = time
        self.agents = agents


@dataclass(frozen=True, eq=False)
class StateLayout:
    """Index bookkeeping for the stacked closed-loop state vector."""

    x_slices: tuple
    r_slice: slice
    lam_slice: slice
    theta_slices: tuple
    y_indices: np.ndarray
    owner: np.ndarray
    dim: int


@dataclass(eq=False)
class Scenario:
    """Everything needed to reproduce one closed-loop experiment."""

    topology: Topology
    costs: CostSet
    agents: tuple
    gains: tuple
    laws: tuple
    initial_x: tuple
    initial_ctrl: tuple
    integrator: IntegratorConfig = IntegratorConfig()
    decimation: int = 10
    pe_window: float = DEFAULT_PE_WINDOW
    pe_start: float = DEFAULT_PE_START
    pe_floor: float = DEFAULT_PE_FLOOR
    y_bracket: tuple = (-100.0, 100.0)
    y_tol: float = 1e-8
    name: str = "scenario"

    def __post_init__(self):
        n = self.topology.n_agents
        self.agents = tuple(self.agents)
        self.gains = tuple(self.gains)
        self.laws = tuple(self.laws)
        for label, seq in (("agents", self.agents), ("gains", self.gains),
                           ("laws", self.laws), ("costs", self.costs.costs)):
            if len(seq) != n:
                raise ValueError(
                    f"{label} must have one entry per agent ({n}), got {len(seq)}"
                )
        if not is_connected(self.topology):
            raise ValueError("graph is not connected; the agents cannot agree")
        ix = []
        for i, x0 in enumerate(self.initial_x):
            x0 = np.asarray(x0, dtype=float).reshape(-1)
            if len(x0) != self.agents[i].order:
                raise ValueError(
                    f"initial x for agent {i + 1} must have length "
                    f"{self.agents[i].order}, got {len(x0)}"
                )
            ix.append(x0)
        if len(ix) != n:
            raise ValueError(f"initial_x must have one entry per agent ({n})")
        self.initial_x = tuple(ix)
        ictrl = tuple(self.initial_ctrl)
        if len(ictrl) != n:
            raise ValueError(f"initial_ctrl must have one entry per agent ({n})")
        for i, st in enumerate(ictrl):
            if not isinstance(st, ControllerState):
                raise ValueError("initial_ctrl entries must be ControllerState")
            if len(st.theta_hat) != self.agents[i].basis.dim:
                raise ValueError(
                    f"initial theta_hat for agent {i + 1} must have length "
                    f"{self.agents[i].basis.dim}"
                )
        self.initial_ctrl = ictrl
        for i in range(n):
            if self.gains[i].order != self.agents[i].order:
                raise ValueError(
                    f"gain order for agent {i + 1} must match the plant order"
                )
            d = self.agents[i].basis.dim
            if self.laws[i].Lambda.shape != (d, d):
                raise ValueError(
                    f"Lambda for agent {i + 1} must be {d}x{d} to match the basis"
                )
        if not isinstance(self.decimation, (int, np.integer)) or self.decimation < 1:
            raise ValueError("decimation must be a positive integer")
        if not self.pe_window > 0:
            raise ValueError("pe_window must be positive")
        if self.pe_start < 0:
            raise ValueError("pe_start must be nonnegative")
        if not self.pe_floor > 0:
            raise ValueError("pe_floor must be positive")
        for i, g in enumerate(self.gains):
            limit = g.epsilon ** 2 / 10.0
            if self.integrator.step > limit:
                warnings.warn(
                    f"integration step {self.integrator.step:g} exceeds "
                    f"epsilon^2/10 = {limit:g} for agent {i + 1}; the fast "
                    "tracking dynamics may be under-resolved",
                    StiffnessWarning,
                    stacklevel=2,
                )
        self.layout = _build_layout(self)

    @property
    def n_agents(self) -> int:
        return self.topology.n_agents


def default_controller_states(agents, initial_x) -> tuple:
    """Default controller initialization: r = x1(0), lam = 0, theta_hat = 0."""
    states = []
    for agent, x0 in zip(agents, initial_x):
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        states.append(ControllerState(r=float(x0[0]), lam=0.0,
                                      theta_hat=np.zeros(agent.basis.dim)))
    return tuple(states)


def _build_layout(scenario: Scenario) -> StateLayout:
    n = scenario.n_agents
    orders = [a.order for a in scenario.agents]
    dims = [a.basis.dim for a in scenario.agents]
    x_slices = []
    off = 0
    for o in orders:
        x_slices.append(slice(off, off + o))
        off += o
    r_slice = slice(off, off + n)
    lam_slice = slice(off + n, off + 2 * n)
    off += 2 * n
    theta_slices = []
    for d in dims:
        theta_slices.append(slice(off, off + d))
        off += d
    owner = np.empty(off, dtype=int)
    for i, sl in enumerate(x_slices):
        owner[sl] = i
    owner[r_slice] = np.arange(n)
    owner[lam_slice] = np.arange(n)
    for i, sl in enumerate(theta_slices):
        owner[sl] = i
    y_indices = np.array([sl.start for sl in x_slices])
    return StateLayout(x_slices=tuple(x_slices), r_slice=r_slice,
                       lam_slice=lam_slice, theta_slices=tuple(theta_slices),
                       y_indices=y_indices, owner=owner, dim=off)


def initial_state(scenario: Scenario) -> np.ndarray:
    """Stack the configured initial conditions into one state vector."""
    parts = list(scenario.initial_x)
    parts.append(np.array([st.r for st in scenario.initial_ctrl]))
    parts.append(np.array([st.lam for st in scenario.initial_ctrl]))
    parts.extend(st.theta_hat for st in scenario.initial_ctrl)
    return np.concatenate(parts) if parts else np.empty(0)


def _feedback_vectors(gains: GainSet) -> tuple[np.ndarray, float]:
    """Per-state feedback coefficients c with u_fb = c @ x - c[0] * r."""
    n = gains.order
    c = gains.k * gains.epsilon ** np.arange(n) / gains.epsilon ** n
    return c, float(c[0])


def assemble(scenario: Scenario) -> OdeSystem:
    """Wire plants, generators, and adaptation laws into one ODE system."""
    lay = scenario.layout
    n = scenario.n_agents
    lap = laplacian(scenario.topology)
    grads = tuple(c.grad for c in scenario.costs)
    analytic = tuple(law.gradient_source == "analytic" for law in scenario.laws)
    comps = tuple(a.basis.components for a in scenario.agents)
    theta_true = tuple(a.true_theta for a in scenario.agents)
    cs, c0s, eps_scales, p_rows = [], [], [], []
    for g in scenario.gains:
        c, c0 = _feedback_vectors(g)
        cs.append(c)
        c0s.append(c0)
        eps_scales.append(g.epsilon ** np.arange(g.order))
        p_rows.append(g.P[-1, :].copy())
    lambdas = tuple(law.Lambda for law in scenario.laws)
    leaks = tuple(law.sigma if law.variant == "sigma_mod" else 0.0
                  for law in scenario.laws)
    x_bounds = tuple((sl.start, sl.stop) for sl in lay.x_slices)
    t_bounds = tuple((sl.start, sl.stop) for sl in lay.theta_slices)
    r_lo, r_hi = lay.r_slice.start, lay.r_slice.stop
    l_lo, l_hi = lay.lam_slice.start, lay.lam_slice.stop
    y_idx = lay.y_indices

    def rhs(t, z):
        dz = np.empty_like(z)
        r = z[r_lo:r_hi]
        lam = z[l_lo:l_hi]
        y = z[y_idx]
        gv = np.empty(n)
        for i in range(n):
            s = r[i] if analytic[i] else y[i]
            gv[i] = grads[i](s)
        dz[r_lo:r_hi] = -gv - lap @ lam
        dz[l_lo:l_hi] = lap @ r
        for i in range(n):
            a0, a1 = x_bounds[i]
            x = z[a0:a1]
            b0, b1 = t_bounds[i]
            th = z[b0:b1]
            p = np.array([f(x, t) for f in comps[i]])
            u = cs[i] @ x - c0s[i] * r[i] - th @ p
            dz[a0:a1 - 1] = x[1:]
            dz[a1 - 1] = theta_true[i] @ p + u
            x_hat = eps_scales[i] * x
            x_hat[0] = x[0] - r[i]
            drive = p_rows[i] @ x_hat
            d_th = lambdas[i] @ (p * drive)
            if leaks[i]:
                d_th = d_th - leaks[i] * th
            dz[b0:b1] = d_th
        return dz

    return OdeSystem(dim=lay.dim, rhs=rhs)


@dataclass(eq=False)
class Trajectory:
    """Decimated record of one run plus derived series.

    Primary series share the time grid: per-agent plant states, outputs,
    generator pairs, inputs, and estimates.  Derived series: scaled tracking
    error norms, optimality gaps against y_star, and parameter error norms.
    """

    times: np.ndarray
    x: tuple
    y: np.ndarray
    r: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    theta_hat: tuple
    theta_true: tuple
    x_hat_norm: np.ndarray
    gap: np.ndarray
    param_err: np.ndarray
    y_star: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("times must be a 1-d array with at least two entries")
        if not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        self.times = t
        m = len(t)
        n = self.y.shape[1] if self.y.ndim == 2 else 0
        for label, arr in (("y", self.y), ("r", self.r), ("lam", self.lam),
                           ("u", self.u), ("x_hat_norm", self.x_hat_norm),
                           ("gap", self.gap), ("param_err", self.param_err)):
            if arr.shape != (m, n):
                raise ValueError(f"{label} must have shape ({m}, {n})")
            if not np.isfinite(arr).all():
                raise ValueError(f"{label} contains non-finite values; "
                                 "the run should have been marked diverged")
        for arr in self.x + self.theta_hat:
            if arr.shape[0] != m or not np.isfinite(arr).all():
                raise ValueError("per-agent series must be finite and share "
                                 "the time grid")

    @property
    def n_agents(self) -> int:
        return self.y.shape[1]

    def index_at(self, t: float) -> int:
        """Index of the recorded instant nearest to t (within half a cell)."""
        times = self.times
        idx = int(np.searchsorted(times, t))
        candidates = [j for j in (idx - 1, idx) if 0 <= j < len(times)]
        best = min(candidates, key=lambda j: abs(times[j] - t))
        spacing = np.diff(times).max()
        if abs(times[best] - t) > 0.5 * spacing + 1e-9:
            raise ValueError(f"no recorded instant near t = {t:g}")
        return best


def _input_series(scenario, times, xs, rs, th_hats) -> np.ndarray:
    n = scenario.n_agents
    m = len(times)
    u = np.empty((m, n))
    for i in range(n):
        gains = scenario.gains[i]
        comps = scenario.agents[i].basis.components
        c, c0 = _feedback_vectors(gains)
        x_i = xs[i]
        th_i = th_hats[i]
        for k in range(m):
            p = np.array([f(x_i[k], times[k]) for f in comps])
            u[k, i] = c @ x_i[k] - c0 * rs[k, i] - th_i[k] @ p
    return u


def _build_trajectory(scenario, times, xs, rs, lams, th_hats, y_star,
                      u=None) -> Trajectory:
    n = scenario.n_agents
    m = len(times)
    ys = np.column_stack([x[:, 0] for x in xs])
    if u is None:
        u = _input_series(scenario, times, xs, rs, th_hats)
    x_hat_norm = np.empty((m, n))
    param_err = np.empty((m, n))
    for i in range(n):
        scale = scenario.gains[i].epsilon ** np.arange(scenario.agents[i].order)
        xh = xs[i] * scale
        xh[:, 0] = xs[i][:, 0] - rs[:, i]
        x_hat_norm[:, i] = np.sqrt((xh * xh).sum(axis=1))
        diff = th_hats[i] - scenario.agents[i].true_theta
        param_err[:, i] = np.sqrt((diff * diff).sum(axis=1))
    gap = np.abs(ys - y_star)
    return Trajectory(times=times, x=tuple(xs), y=ys, r=rs, lam=lams, u=u,
                      theta_hat=tuple(th_hats),
                      theta_true=tuple(a.true_theta for a in scenario.agents),
                      x_hat_norm=x_hat_norm, gap=gap, param_err=param_err,
                      y_star=y_star)


def run(scenario: Scenario) -> Trajectory:
    """Integrate the assembled scenario and return its recorded trajectory.

    Records every ``decimation``-th step (plus the initial and final points)
    and aborts with SimulationDiverged, naming the offending agents, as soon
    as any state magnitude exceeds the divergence threshold.
    """
    y_star = minimize_global(scenario.costs, scenario.y_bracket, scenario.y_tol)
    system = assemble(scenario)
    z0 = initial_state(scenario)
    lay = scenario.layout
    dec = scenario.decimation
    times: list = []
    states: list = []
    counter = [0]
    last = [None]

    def observer(t, z):
        peak = np.abs(z).max()
        if not np.isfinite(peak) or peak > DIVERGENCE_THRESHOLD:
            bad = ~np.isfinite(z) | (np.abs(z) > DIVERGENCE_THRESHOLD)
            raise SimulationDiverged(t, set(lay.owner[bad].tolist()))
        k = counter[0]
        counter[0] = k + 1
        if k % dec == 0:
            times.append(t)
            states.append(z.copy())
        last[0] = (t, z)

    try:
        integrate(system, z0, scenario.integrator, observer)
    except DivergenceError as err:
        bad = ~np.isfinite(err.state)
        raise SimulationDiverged(err.time,
                                 set(lay.owner[bad].tolist())) from err
    t_last, z_last = last[0]
    if times[-1] != t_last:
        times.append(t_last)
        states.append(z_last.copy())
    grid = np.asarray(times)
    stack = np.vstack(states)
    xs = [stack[:, sl] for sl in lay.x_slices]
    rs = stack[:, lay.r_slice]
    lams = stack[:, lay.lam_slice]
    th_hats = [stack[:, sl] for sl in lay.theta_slices]
    return _build_trajectory(scenario, grid, xs, rs, lams, th_hats, y_star)


# --- excitation monitoring ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class AgentExcitation:
    """Windowed regressor statistics for one agent."""

    agent: int
    component_labels: tuple
    window_starts: np.ndarray
    grams: np.ndarray
    min_eigs: np.ndarray
    min_eig_inf: float
    pe_satisfied: bool
    component_infima: np.ndarray
    component_excited: np.ndarray
    regressor_sup: float
    regressor_bounded: bool


@dataclass(frozen=True, eq=False)
class PEReport:
    """Per-agent persistence-of-excitation verdicts for one trajectory."""

    floor: float
    window: float
    start: float
    agents: tuple

    def to_lines(self) -> list:
        lines = [
            f"floor = {self.floor!r}",
            f"window = {self.window!r}",
            f"start = {self.start!r}",
        ]
        for a in self.agents:
            lines.append(
                f"agent {a.agent + 1}: pe_satisfied={a.pe_satisfied} "
                f"min_eig_inf={a.min_eig_inf!r} "
                f"regressor_sup={a.regressor_sup!r} "
                f"bounded={a.regressor_bounded}"
            )
            for j, label in enumerate(a.component_labels):
                lines.append(
                    f"agent {a.agent + 1} component {j + 1} ({label}): "
                    f"excited={bool(a.component_excited[j])} "
                    f"min_avg={float(a.component_infima[j])!r}"
                )
        return lines


def pe_monitor(trajectory: Trajectory, scenario: Scenario) -> PEReport:
    """Windowed Gram analysis of every agent's regressor along the trajectory.

    For each eligible start t >= pe_start, integrates p p' over
    [t, t + pe_window] by trapezoid on the recorded grid with a fractional
    final cell, normalized by the window length.  An agent is persistently
    excited when the infimum of the Gram's smallest eigenvalue clears the
    floor; a single component is excited when its averaged square does.
    """
    t = trajectory.times
    window = scenario.pe_window
    start = scenario.pe_start
    floor = scenario.pe_floor
    if t[-1] < start + window - 1e-9:
        raise ValueError(
            "excitation window extends past the recorded trajectory "
            f"(need t >= {start + window:g}, have {t[-1]:g})"
        )
    m = len(t)
    results = []
    for i, agent in enumerate(scenario.agents):
        d = agent.basis.dim
        labels = tuple(agent.basis.label(j) for j in range(d))
        if d == 0:
            results.append(AgentExcitation(
                agent=i, component_labels=(), window_starts=np.empty(0),
                grams=np.empty((0, 0, 0)), min_eigs=np.empty(0),
                min_eig_inf=float("inf"), pe_satisfied=True,
                component_infima=np.empty(0),
                component_excited=np.empty(0, dtype=bool),
                regressor_sup=0.0, regressor_bounded=True))
            continue
        comps = agent.basis.components
        x_i = trajectory.x[i]
        reg = np.empty((m, d))
        for k in range(m):
            xk = x_i[k]
            tk = t[k]
            for j, f in enumerate(comps):
                reg[k, j] = f(xk, tk)
        outer = reg[:, :, None] * reg[:, None, :]
        seg = 0.5 * (outer[1:] + outer[:-1]) * np.diff(t)[:, None, None]
        cum = np.zeros((m, d, d))
        np.cumsum(seg, axis=0, out=cum[1:])
        eligible = (t >= start - 1e-12) & (t + window <= t[-1] + 1e-9)
        starts = np.nonzero(eligible)[0]
        ends = t[starts] + window
        e_idx = np.searchsorted(t, ends + 1e-12, side="right") - 1
        e_idx = np.minimum(e_idx, m - 1)
        gram = cum[e_idx] - cum[starts]
        tau = ends - t[e_idx]
        frac = np.nonzero(tau > 1e-12)[0]
        if len(frac):
            ee = e_idx[frac]
            cell = (t[ee + 1] - t[ee])[:, None, None]
            tt = tau[frac][:, None, None]
            gram[frac] += tt * outer[ee] + (tt * tt / (2.0 * cell)) * (
                outer[ee + 1] - outer[ee])
        gram /= window
        min_eigs = np.linalg.eigvalsh(gram)[:, 0] if len(gram) else np.empty(0)
        diag = gram[:, np.arange(d), np.arange(d)]
        comp_inf = (diag.min(axis=0) if len(diag)
                    else np.full(d, float("inf")))
        sup = float(np.abs(reg).max())
        min_inf = float(min_eigs.min()) if len(min_eigs) else float("inf")
        results.append(AgentExcitation(
            agent=i, component_labels=labels, window_starts=t[starts],
            grams=gram, min_eigs=min_eigs, min_eig_inf=min_inf,
            pe_satisfied=bool(min_inf >= floor),
            component_infima=comp_inf,
            component_excited=comp_inf >= floor,
            regressor_sup=sup, regressor_bounded=bool(np.isfinite(sup))))
    return PEReport(floor=floor, window=window, start=start,
                    agents=tuple(results))


# --- summary metrics ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RunMetrics:
    """Flat summary of one non-diverged trajectory."""

    y_star: float
    final_time: float
    final_gap: np.ndarray
    final_gap_max: float
    consensus_spread_final: float
    tracking_error_final: np.ndarray
    tracking_error_final_max: float
    param_error_final: tuple
    param_error_final_max: float
    band: float
    time_to_band: Optional[float]
    lambda_drift_max: float

    def to_lines(self) -> list:
        lines = [
            f"y_star = {self.y_star!r}",
            f"final_time = {self.final_time!r}",
            f"final_gap_max = {self.final_gap_max!r}",
        ]
        for i, v in enumerate(self.final_gap):
            lines.append(f"final_gap_agent_{i + 1} = {float(v)!r}")
        lines.append(f"consensus_spread_final = {self.consensus_spread_final!r}")
        lines.append(
            f"tracking_error_final_max = {self.tracking_error_final_max!r}")
        for i, v in enumerate(self.tracking_error_final):
            lines.append(f"tracking_error_final_agent_{i + 1} = {float(v)!r}")
        lines.append(f"param_error_final_max = {self.param_error_final_max!r}")
        for i, errs in enumerate(self.param_error_final):
            for j, v in enumerate(errs):
                lines.append(
                    f"param_error_agent_{i + 1}_component_{j + 1} = {float(v)!r}")
        lines.append(f"band = {self.band!r}")
        if self.time_to_band is None:
            lines.append("time_to_band = never")
        else:
            lines.append(f"time_to_band = {self.time_to_band!r}")
        lines.append(f"lambda_drift_max = {self.lambda_drift_max!r}")
        return lines


def metrics(trajectory: Trajectory, band: float = 0.05) -> RunMetrics:
    """Final gaps, consensus spread, estimation errors, and conservation drift."""
    if not band > 0:
        raise ValueError("band must be positive")
    y_fin = trajectory.y[-1]
    gap_fin = trajectory.gap[-1]
    spread = float(y_fin.max() - y_fin.min())
    track_fin = trajectory.x_hat_norm[-1]
    perr = tuple(np.abs(th[-1] - th_true)
                 for th, th_true in zip(trajectory.theta_hat,
                                        trajectory.theta_true))
    perr_max = max((float(e.max()) for e in perr if e.size), default=0.0)
    ok = (trajectory.gap <= band).all(axis=1)
    ok_from = np.flip(np.cumprod(np.flip(ok.astype(int)))).astype(bool)
    hit = np.nonzero(ok_from)[0]
    time_to_band = float(trajectory.times[hit[0]]) if len(hit) else None
    lam_sum = trajectory.lam.sum(axis=1)
    drift = float(np.abs(lam_sum - lam_sum[0]).max())
    return RunMetrics(
        y_star=trajectory.y_star,
        final_time=float(trajectory.times[-1]),
        final_gap=gap_fin.copy(),
        final_gap_max=float(gap_fin.max()),
        consensus_spread_final=spread,
        tracking_error_final=track_fin.copy(),
        tracking_error_final_max=float(track_fin.max()),
        param_error_final=perr,
        param_error_final_max=perr_max,
        band=band,
        time_to_band=time_to_band,
        lambda_drift_max=drift,
    )


# --- trajectory CSV -----------------------------------------------------------


def _atomic_write_text(path: str, lines) -> None:
    """Write lines to path via a temp file and rename (atomic per file)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trajectory_csv(trajectory: Trajectory, path: str) -> None:
    """Emit one row per (time, agent): t, agent, x1..xn, y, r, lambda, u, theta_hat_*.

    Floats use repr (shortest round-trip), so a written-then-read trajectory
    reproduces metrics bit-identically.  With heterogeneous agents the header
    is sized by the largest order/parameter count and absent cells stay empty.
    """
    n_max = max(arr.shape[1] for arr in trajectory.x)
    d_max = max(arr.shape[1] for arr in trajectory.theta_hat)
    header = (["t", "agent"]
              + [f"x{j + 1}" for j in range(n_max)]
              + ["y", "r", "lambda", "u"]
              + [f"theta_hat_{j + 1}" for j in range(d_max)])
    rows = [",".join(header)]
    m = len(trajectory.times)
    n = trajectory.n_agents
    for k in range(m):
        t_repr = repr(float(trajectory.times[k]))
        for i in range(n):
            x_i = trajectory.x[i][k]
            th_i = trajectory.theta_hat[i][k]
            cells = [t_repr, str(i + 1)]
            cells += [repr(float(v)) for v in x_i]
            cells += [""] * (n_max - len(x_i))
            cells += [repr(float(trajectory.y[k, i])),
                      repr(float(trajectory.r[k, i])),
                      repr(float(trajectory.lam[k, i])),
                      repr(float(trajectory.u[k, i]))]
            cells += [repr(float(v)) for v in th_i]
            cells += [""] * (d_max - len(th_i))
            rows.append(",".join(cells))
    _atomic_write_text(path, rows)


def read_trajectory_csv(path: str, scenario: Scenario) -> Trajectory:
    """Rebuild a Trajectory written by write_trajectory_csv.

    Primary series come from the file; derived series are recomputed with the
    scenario's gains and true parameters, and y_star is recomputed from the
    scenario's costs (all deterministic, so the round trip is exact).
    """
    with open(path, "r") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path} is empty")
    header = lines[0].split(",")
    n_max = sum(1 for h in header if h.startswith("x"))
    col = {name: j for j, name in enumerate(header)}
    n = scenario.n_agents
    times = []
    per_agent = [[] for _ in range(n)]
    for ln in lines[1:]:
        cells = ln.split(",")
        agent = int(cells[col["agent"]]) - 1
        if agent == 0:
            times.append(float(cells[col["t"]]))
        per_agent[agent].append(cells)
    grid = np.array(times)
    m = len(grid)
    xs, th_hats = [], []
    rs = np.empty((m, n))
    lams = np.empty((m, n))
    u = np.empty((m, n))
    for i in range(n):
        rows = per_agent[i]
        if len(rows) != m:
            raise ValueError(f"agent {i + 1} has {len(rows)} rows, expected {m}")
        order = scenario.agents[i].order
        d = scenario.agents[i].basis.dim
        x_i = np.empty((m, order))
        th_i = np.empty((m, d))
        for k, cells in enumerate(rows):
            for j in range(order):
                x_i[k, j] = float(cells[col[f"x{j + 1}"]])
            rs[k, i] = float(cells[col["r"]])
            lams[k, i] = float(cells[col["lambda"]])
            u[k, i] = float(cells[col["u"]])
            for j in range(d):
                th_i[k, j] = float(cells[col[f"theta_hat_{j + 1}"]])
        xs.append(x_i)
        th_hats.append(th_i)
    y_star = minimize_global(scenario.costs, scenario.y_bracket, scenario.y_tol)
    return _build_trajectory(scenario, grid, xs, rs, lams, th_hats, y_star, u=u)
