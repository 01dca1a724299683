"""Distributed convex optimization over networks via embedded adaptive control.

Agents with uncertain integrator-chain dynamics cooperate over a graph to
drive every output to the minimizer of the sum of their local convex costs.
Each agent embeds a consensus-coupled signal generator (the optimizer) inside
a high-gain adaptive tracker (the regulator), estimating its unknown plant
parameters on the fly.
"""

from .control import (VARIANTS, AdaptiveLaw, ControllerState, GainSet,
                      adaptation_rhs, build_gains, companion, control_input,
                      design_gains, error_transform, generator_rhs,
                      solve_lyapunov)
from .costs import (BUILTIN_KINDS, CostSet, LocalCost, builtin_cost,
                    global_gradient, minimize_global,
                    sampled_curvature_bounds)
from .config import ConfigError, apply_overrides, build_scenario, load_raw, \
    load_scenario
from .graph import Topology, is_connected, laplacian, neighbors, \
    topology_from_edges
from .numerics import (DivergenceError, IntegratorConfig, OdeSystem,
                       integrate, is_hurwitz, min_eig_symmetric)
from .plant import (AgentModel, BasisVector, Exosystem, agent_rhs,
                    basis_from_names, vdp_preset)
from .sim import (PEReport, RunMetrics, Scenario, SimulationDiverged,
                  StiffnessWarning, Trajectory, assemble,
                  default_controller_states, initial_state, metrics,
                  pe_monitor, read_trajectory_csv, run, write_trajectory_csv)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_KINDS", "VARIANTS",
    "AdaptiveLaw", "AgentModel", "BasisVector", "ConfigError",
    "ControllerState", "CostSet", "DivergenceError", "Exosystem", "GainSet",
    "IntegratorConfig", "LocalCost", "OdeSystem", "PEReport", "RunMetrics",
    "Scenario", "SimulationDiverged", "StiffnessWarning", "Topology",
    "Trajectory", "adaptation_rhs", "agent_rhs", "apply_overrides",
    "assemble", "basis_from_names", "build_gains", "build_scenario",
    "builtin_cost", "companion", "control_input", "default_controller_states",
    "design_gains", "error_transform", "generator_rhs", "global_gradient",
    "initial_state", "integrate", "is_connected", "is_hurwitz", "laplacian",
    "load_raw", "load_scenario", "metrics", "min_eig_symmetric",
    "minimize_global", "neighbors", "pe_monitor", "read_trajectory_csv",
    "run", "sampled_curvature_bounds", "solve_lyapunov",
    "topology_from_edges", "vdp_preset", "write_trajectory_csv",
]
