"""Scenario configuration: strict, versioned, human-editable YAML files.

The schema is deliberately unforgiving: unknown keys are errors, not
warnings, because a silently ignored typo in a gain or weight would change
the experiment without anyone noticing.  Files declare ``format: 1``.
"""

from __future__ import annotations

import copy
import os
from importlib import resources

import numpy as np
import yaml

from .control import AdaptiveLaw, ControllerState, VARIANTS, build_gains
from .costs import BUILTIN_KINDS, CostSet, builtin_cost
from .graph import topology_from_edges
from .numerics import IntegratorConfig
from .plant import AgentModel, Exosystem, basis_from_names, vdp_preset
from .sim import (DEFAULT_PE_FLOOR, DEFAULT_PE_START, DEFAULT_PE_WINDOW,
                  Scenario, default_controller_states)

FORMAT_VERSION = 1


class ConfigError(Exception):
    """A scenario file failed to parse or validate."""


def _check_keys(mapping, path: str, allowed, required=()):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(
            f"{path}: unknown key(s) {unknown}; allowed keys: {sorted(allowed)}"
        )
    missing = [k for k in required if k not in mapping]
    if missing:
        raise ConfigError(f"{path}: missing required key(s) {missing}")


def _number(value, path: str, positive: bool = False,
            nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be positive, got {v}")
    if nonnegative and v < 0:
        raise ConfigError(f"{path}: must be nonnegative, got {v}")
    return v


def _integer(value, path: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _number_list(value, path: str):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: expected a list of numbers")
    return [_number(v, f"{path}[{j}]") for j, v in enumerate(value)]


def load_raw(spec: str) -> dict:
    """Read a scenario by bundled name or file path into a raw dictionary."""
    looks_like_path = (os.path.sep in spec or spec.endswith((".yaml", ".yml"))
                       or os.path.exists(spec))
    if looks_like_path:
        if not os.path.exists(spec):
            raise ConfigError(f"scenario file not found: {spec}")
        with open(spec, "r") as fh:
            text = fh.read()
        label = spec
    else:
        res = resources.files("embopt") / "scenarios" / f"{spec}.yaml"
        if not res.is_file():
            raise ConfigError(
                f"unknown scenario {spec!r}: not a file and not one of the "
                f"bundled scenarios {bundled_scenarios()}"
            )
        text = res.read_text()
        label = f"bundled scenario {spec!r}"
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error in {label}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{label}: scenario must be a mapping")
    return raw


def bundled_scenarios() -> list:
    """Names of the scenario files shipped inside the package."""
    folder = resources.files("embopt") / "scenarios"
    names = [entry.name[:-5] for entry in folder.iterdir()
             if entry.name.endswith(".yaml")]
    return sorted(names)


def apply_overrides(raw: dict, variant=None, epsilon=None, sigma=None,
                    step=None, t_end=None, lambda_gain=None) -> dict:
    """Return a deep copy of the raw scenario with CLI-style overrides applied."""
    out = copy.deepcopy(raw)
    controller = out.setdefault("controller", {})
    if variant is not None:
        controller["variant"] = variant
    if epsilon is not None:
        controller["epsilon"] = epsilon
    if sigma is not None:
        controller["sigma"] = sigma
    if lambda_gain is not None:
        controller["lambda_gain"] = lambda_gain
    integrator = out.setdefault("integrator", {})
    if step is not None:
        integrator["step"] = step
    if t_end is not None:
        integrator["t_end"] = t_end
    return out


def _build_topology(section):
    _check_keys(section, "graph", ("n_agents", "edges"),
                required=("n_agents", "edges"))
    n = _integer(section["n_agents"], "graph.n_agents")
    edges_raw = section["edges"]
    if not isinstance(edges_raw, (list, tuple)):
        raise ConfigError("graph.edges: expected a list of [i, j, weight]")
    edges = []
    for j, entry in enumerate(edges_raw):
        path = f"graph.edges[{j}]"
        if not isinstance(entry, (list, tuple)) or len(entry) != 3:
            raise ConfigError(f"{path}: expected [i, j, weight]")
        a = _integer(entry[0], f"{path}.i")
        b = _integer(entry[1], f"{path}.j")
        w = _number(entry[2], f"{path}.weight", positive=True)
        edges.append((a - 1, b - 1, w))
    try:
        return topology_from_edges(n, edges)
    except ValueError as exc:
        raise ConfigError(f"graph: {exc}") from exc


def _build_costs(section, n_agents: int) -> CostSet:
    if not isinstance(section, (list, tuple)):
        raise ConfigError("costs: expected a list with one entry per agent")
    if len(section) != n_agents:
        raise ConfigError(
            f"costs: expected {n_agents} entries, got {len(section)}"
        )
    costs = []
    for i, entry in enumerate(section):
        path = f"costs[{i}]"
        _check_keys(entry, path, ("kind", "params"), required=("kind",))
        kind = entry["kind"]
        if not isinstance(kind, str):
            raise ConfigError(f"{path}.kind: expected a string")
        params = _number_list(entry.get("params", []), f"{path}.params")
        try:
            costs.append(builtin_cost(kind, params))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return CostSet(costs=tuple(costs))


def _build_agent(entry, i: int) -> AgentModel:
    path = f"agents[{i}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{path}: expected a mapping")
    if "preset" in entry:
        _check_keys(entry, path, ("preset", "a", "b", "v0"),
                    required=("preset", "a", "b", "v0"))
        if entry["preset"] != "vdp":
            raise ConfigError(
                f"{path}.preset: unknown preset {entry['preset']!r}; "
                "only 'vdp' is available"
            )
        a = _number(entry["a"], f"{path}.a")
        b = _number(entry["b"], f"{path}.b")
        v0 = _number_list(entry["v0"], f"{path}.v0")
        if len(v0) != 2:
            raise ConfigError(f"{path}.v0: expected two numbers")
        exo = Exosystem(D=np.array([1.0, 0.0]),
                        S=np.array([[0.0, 1.0], [-1.0, 0.0]]),
                        v0=np.array(v0))
        try:
            return vdp_preset(a, b, exo)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    _check_keys(entry, path, ("order", "basis", "theta"),
                required=("order", "basis", "theta"))
    order = _integer(entry["order"], f"{path}.order")
    basis_names = entry["basis"]
    if not isinstance(basis_names, (list, tuple)) or not all(
            isinstance(s, str) for s in basis_names):
        raise ConfigError(f"{path}.basis: expected a list of component names")
    theta = _number_list(entry["theta"], f"{path}.theta")
    try:
        basis = basis_from_names(basis_names)
        return AgentModel(order=order, basis=basis,
                          true_theta=np.array(theta))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_controllers(section, agents):
    _check_keys(section, "controller",
                ("variant", "epsilon", "poles", "lambda_gain", "sigma"))
    variant = section.get("variant", "online")
    if variant not in VARIANTS:
        raise ConfigError(
            f"controller.variant: expected one of {list(VARIANTS)}, "
            f"got {variant!r}"
        )
    epsilon = _number(section.get("epsilon", 0.2), "controller.epsilon",
                      positive=True)
    poles = section.get("poles")
    if poles is not None:
        poles = _number_list(poles, "controller.poles")
        orders = {a.order for a in agents}
        if orders != {len(poles)}:
            raise ConfigError(
                "controller.poles: length must equal every agent's order; "
                "omit poles to place all roots at -2"
            )
    lambda_gain = _number(section.get("lambda_gain", 1.0),
                          "controller.lambda_gain", positive=True)
    sigma = _number(section.get("sigma", 0.05), "controller.sigma",
                    nonnegative=True)
    gains, laws = [], []
    for i, agent in enumerate(agents):
        try:
            gains.append(build_gains(agent.order, epsilon, poles))
            laws.append(AdaptiveLaw(
                variant=variant,
                Lambda=lambda_gain * np.eye(agent.basis.dim),
                sigma=sigma))
        except ValueError as exc:
            raise ConfigError(f"controller (agent {i + 1}): {exc}") from exc
    return tuple(gains), tuple(laws)


def _build_initial(section, agents):
    n = len(agents)
    if section is None:
        section = {}
    _check_keys(section, "initial", ("x", "r", "lambda", "theta_hat"))

    def per_agent_lists(key, expected_len):
        value = section.get(key)
        if value is None:
            return None
        if not isinstance(value, (list, tuple)) or len(value) != n:
            raise ConfigError(
                f"initial.{key}: expected a list with one entry per agent ({n})"
            )
        out = []
        for i, entry in enumerate(value):
            vec = _number_list(entry, f"initial.{key}[{i}]")
            if len(vec) != expected_len(i):
                raise ConfigError(
                    f"initial.{key}[{i}]: expected {expected_len(i)} numbers"
                )
            out.append(np.array(vec))
        return out

    xs = per_agent_lists("x", lambda i: agents[i].order)
    if xs is None:
        xs = [np.zeros(agent.order) for agent in agents]
    thetas = per_agent_lists("theta_hat", lambda i: agents[i].basis.dim)
    r_vals = section.get("r")
    if r_vals is not None:
        r_vals = _number_list(r_vals, "initial.r")
        if len(r_vals) != n:
            raise ConfigError(f"initial.r: expected {n} numbers")
    lam_vals = section.get("lambda")
    if lam_vals is not None:
        lam_vals = _number_list(lam_vals, "initial.lambda")
        if len(lam_vals) != n:
            raise ConfigError(f"initial.lambda: expected {n} numbers")
    states = list(default_controller_states(agents, xs))
    for i in range(n):
        if r_vals is not None:
            states[i].r = float(r_vals[i])
        if lam_vals is not None:
            states[i].lam = float(lam_vals[i])
        if thetas is not None:
            states[i].theta_hat = thetas[i]
    return tuple(xs), tuple(states)


def build_scenario(raw: dict) -> Scenario:
    """Validate a raw scenario dictionary and construct the Scenario."""
    _check_keys(raw, "scenario",
                ("format", "name", "graph", "costs", "agents", "controller",
                 "initial", "integrator", "pe"),
                required=("format", "graph", "costs", "agents", "controller"))
    if raw["format"] != FORMAT_VERSION:
        raise ConfigError(
            f"format: this build reads format {FORMAT_VERSION}, "
            f"got {raw['format']!r}"
        )
    name = raw.get("name", "scenario")
    if not isinstance(name, str):
        raise ConfigError("name: expected a string")
    topology = _build_topology(raw["graph"])
    agents_raw = raw["agents"]
    if not isinstance(agents_raw, (list, tuple)):
        raise ConfigError("agents: expected a list")
    if len(agents_raw) != topology.n_agents:
        raise ConfigError(
            f"agents: expected {topology.n_agents} entries to match "
            f"graph.n_agents, got {len(agents_raw)}"
        )
    agents = tuple(_build_agent(entry, i) for i, entry in enumerate(agents_raw))
    costs = _build_costs(raw["costs"], topology.n_agents)
    gains, laws = _build_controllers(raw["controller"], agents)
    initial_x, initial_ctrl = _build_initial(raw.get("initial"), agents)

    integ_raw = raw.get("integrator") or {}
    _check_keys(integ_raw, "integrator", ("step", "t_end", "decimation"))
    step = _number(integ_raw.get("step", 1e-3), "integrator.step",
                   positive=True)
    t_end = _number(integ_raw.get("t_end", 50.0), "integrator.t_end",
                    positive=True)
    decimation = _integer(integ_raw.get("decimation", 10),
                          "integrator.decimation")
    try:
        integrator = IntegratorConfig(step=step, t_end=t_end)
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from exc

    pe_raw = raw.get("pe") or {}
    _check_keys(pe_raw, "pe", ("window", "start", "floor"))
    pe_window = _number(pe_raw.get("window", DEFAULT_PE_WINDOW), "pe.window",
                        positive=True)
    pe_start = _number(pe_raw.get("start", DEFAULT_PE_START), "pe.start",
                       nonnegative=True)
    pe_floor = _number(pe_raw.get("floor", DEFAULT_PE_FLOOR), "pe.floor",
                       positive=True)

    try:
        return Scenario(topology=topology, costs=costs, agents=agents,
                        gains=gains, laws=laws, initial_x=initial_x,
                        initial_ctrl=initial_ctrl, integrator=integrator,
                        decimation=decimation, pe_window=pe_window,
                        pe_start=pe_start, pe_floor=pe_floor, name=name)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(spec: str, **overrides) -> Scenario:
    """Load by name/path, apply keyword overrides, validate, and build."""
    raw = load_raw(spec)
    if overrides:
        raw = apply_overrides(raw, **overrides)
    return build_scenario(raw)
