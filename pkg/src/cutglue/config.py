"""Declarative scenario configs: JSON in, validated objects out.

A config names a mesh, a cut, an operator, an interaction, a kernel shape,
a scale grid, boundary data, and the suites to run.  All cross-references
are checked here, before any numerics start.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .meshes import Mesh, MeshError, build_grid_mesh, build_interval_mesh, \
    cut_along_interface, lambda_one
from .operators import OperatorSpec
from .perturbation import InteractionSpec, PerturbationError


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated inputs of one batch run."""

    name: str
    mesh: Mesh
    cut: object
    operator: OperatorSpec
    interaction: InteractionSpec
    shape: str
    lambdas: tuple
    eta: np.ndarray
    max_order: float
    suites: tuple


def _build_mesh(spec: dict) -> Mesh:
    kind = spec.get("type")
    if kind == "interval":
        return build_interval_mesh(int(spec["n_interior"]), float(spec["spacing"]))
    if kind == "grid":
        return build_grid_mesh(int(spec["nx"]), int(spec["ny"]), float(spec["spacing"]))
    if kind == "file":
        with open(spec["path"], encoding="utf-8") as fh:
            return Mesh.from_text(fh.read())
    raise ConfigError(f"unknown mesh type {kind!r}")


def _build_cut(mesh: Mesh, spec: dict):
    axis, value = int(spec["axis"]), float(spec["value"])
    if axis < 0 or axis >= mesh.positions.shape[1]:
        raise ConfigError(f"cut axis {axis} out of range")
    return cut_along_interface(
        mesh, lambda n: abs(mesh.positions[n][axis] - value) < 1e-12
    )


def _build_eta(mesh: Mesh, spec) -> np.ndarray:
    nb = mesh.boundary.size
    if spec is None:
        return np.zeros(nb)
    if isinstance(spec, dict):
        pos = {int(n): k for k, n in enumerate(mesh.boundary)}
        eta = np.zeros(nb)
        for node, value in spec.items():
            if int(node) not in pos:
                raise ConfigError(f"eta node {node} is not a boundary node")
            eta[pos[int(node)]] = float(value)
        return eta
    eta = np.asarray(spec, dtype=float)
    if eta.size != nb:
        raise ConfigError(f"eta has {eta.size} entries, boundary has {nb}")
    return eta


def load_config(path: str, known_suites) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")

    required = {"name", "mesh", "cut", "operator", "interaction",
                "lambdas", "max_order"}
    missing = required - raw.keys()
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")

    try:
        mesh = _build_mesh(raw["mesh"])
        cut = _build_cut(mesh, raw["cut"])
    except (MeshError, KeyError, TypeError) as exc:
        raise ConfigError(f"bad mesh/cut spec: {exc}") from exc

    operator = OperatorSpec(mass_squared=float(raw["operator"].get("mass_squared", 0.0)))
    try:
        couplings = {int(k): v for k, v in raw["interaction"].items()}
        interaction = InteractionSpec(couplings)
    except (PerturbationError, ValueError) as exc:
        raise ConfigError(f"bad interaction spec: {exc}") from exc

    shape = raw.get("kernel", {}).get("shape", "uniform")
    from .kernels import SHAPES
    if shape not in SHAPES:
        raise ConfigError(f"unknown kernel shape {shape!r}")

    lambdas = tuple(float(x) for x in raw["lambdas"])
    if not lambdas:
        raise ConfigError("lambdas must be nonempty")
    lam1 = lambda_one(mesh, cut)
    for lam in lambdas:
        if lam <= lam1:
            raise ConfigError(f"lam below lambda_1: {lam} <= {lam1}")

    max_order = float(raw["max_order"])
    if round(2 * max_order) != 2 * max_order or max_order < 0:
        raise ConfigError("max_order must be a nonnegative half-integer")

    suites = tuple(raw.get("suites", sorted(known_suites)))
    unknown = [s for s in suites if s not in known_suites]
    if unknown:
        raise ConfigError(f"unknown suites: {unknown}")

    return ScenarioConfig(
        name=str(raw["name"]),
        mesh=mesh,
        cut=cut,
        operator=operator,
        interaction=interaction,
        shape=shape,
        lambdas=lambdas,
        eta=_build_eta(mesh, raw.get("eta")),
        max_order=max_order,
        suites=suites,
    )
