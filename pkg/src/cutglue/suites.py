"""Named verification suites runnable from a scenario config."""

from __future__ import annotations

from math import pi

import numpy as np

from . import euclidean as eu
from .config import ScenarioConfig
from .gluing import (GluingScenario, lambda_sweep, renormalization_commutes,
                     verify_gluing_theorem)
from .green import (green_bundle, interface_green, side_bundle,
                    verify_dtn_difference, verify_green_gluing,
                    verify_quadratic_decomposition)
from .kernels import (build_mesh_kernel, restrict_kernel_to_submesh,
                      verify_deformed_gluing, verify_regularization)
from .meshes import LEFT, RIGHT
from .reports import Check, Report


def _scenario(cfg: ScenarioConfig, lam: float) -> GluingScenario:
    return GluingScenario(
        mesh=cfg.mesh, cut=cfg.cut, operator=cfg.operator,
        interaction=cfg.interaction, lam=lam, shape=cfg.shape,
        eta=cfg.eta, max_order=cfg.max_order, name=cfg.name,
    )


def suite_green_identities(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("green-identities")
    left = side_bundle(cfg.mesh, cfg.operator, cfg.cut, LEFT)
    right = side_bundle(cfg.mesh, cfg.operator, cfg.cut, RIGHT)
    g_sigma = interface_green(left, right)
    k = left.dtn_sigma + right.dtn_sigma
    report.add(Check("interface-response-sum-inverse",
                     float(np.abs(k @ g_sigma - np.eye(k.shape[0])).max()), 1e-10))
    report.extend(verify_green_gluing(cfg.mesh, cfg.operator, cfg.cut).checks)
    report.extend(verify_dtn_difference(cfg.mesh, cfg.operator, cfg.cut).checks)
    bundle = green_bundle(cfg.mesh, cfg.operator)
    report.add(Check("green-symmetry",
                     float(np.abs(bundle.green - bundle.green.T).max()), 1e-12))
    if cfg.operator.mass_squared == 0.0:
        rows = bundle.poisson.sum(axis=1)
        report.add(Check("poisson-rows-sum-to-one",
                         float(np.abs(rows - 1.0).max()), 1e-12))
        report.add(Check("poisson-nonnegative",
                         float(max(0.0, -bundle.poisson.min())), 0.0))
    return report


def suite_quadratic_decomposition(cfg: ScenarioConfig, seed: int) -> Report:
    return verify_quadratic_decomposition(cfg.mesh, cfg.operator, cfg.cut,
                                          trials=120, seed=seed)


def suite_averaging_closed_form(cfg: ScenarioConfig, seed: int) -> Report:
    """Flat-space checks; independent of the configured mesh."""
    report = Report("averaging-closed-form")
    lam = 2.0
    one = eu.EuclideanKernelSpec(dim=3, alphas=(1.0,))
    outside = eu.sphere_average(3, [1.0, 0.0, 0.0], lam, one)
    report.add(Check("shell-outside-equals-g",
                     abs(outside - eu.fundamental_solution(3, 1.0)), 1e-8))
    inside = eu.sphere_average(3, [0.1, 0.0, 0.0], lam, one)
    report.add(Check("shell-inside-constant", abs(inside - lam / (4 * pi)), 1e-8))
    flat = eu.EuclideanKernelSpec(dim=2, alphas=(1.0,))
    inside2 = eu.sphere_average(2, [0.2, 0.0], lam, flat)
    report.add(Check("circle-inside-constant",
                     abs(inside2 - np.log(lam) / (2 * pi)), 1e-8))
    two = eu.EuclideanKernelSpec(dim=3, alphas=(0.5, 0.5))
    for spec, tag in ((one, "single"), (two, "double")):
        prof = eu.extract_profile_f(3, lam, spec, ts=(0.0, 0.25, 0.5, 1.0))
        report.add(Check(f"f-vanishes-at-one-{tag}", abs(prof(1.0)), 2e-8))
        prof_b = eu.extract_profile_f(3, 3.7, spec, ts=(0.0, 0.25, 0.5, 1.0))
        report.add(Check(f"f-scale-independent-{tag}",
                         float(np.abs(prof.values - prof_b.values).max()), 1e-8))
    composed = eu.compose_kernels(two)
    report.add(Check("composition-normalized",
                     abs(composed.total_mass() - 1.0), 1e-8))
    report.add(Check("composition-support",
                     max(0.0, composed.support - sum(two.alphas)), 1e-12))
    return report


def suite_kernel_properties(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("kernel-properties")
    d = cfg.mesh.distance_matrix()
    for lam in cfg.lambdas:
        kernel = build_mesh_kernel(cfg.mesh, lam, cfg.shape, cut=cfg.cut)
        report.add(Check(f"rows-stochastic-lam-{lam}",
                         float(np.abs(kernel.matrix.sum(axis=1) - 1.0).max()),
                         1e-12))
        off = kernel.matrix * (d > kernel.support_radius * (1 + 1e-9))
        report.add(Check(f"ball-support-lam-{lam}", float(np.abs(off).max()), 0.0))
        side = set(map(int, cfg.cut.left_nodes)) | set(map(int, cfg.cut.interface))
        side |= set(map(int, cfg.cut.side_outer_boundary(LEFT)))
        restricted = restrict_kernel_to_submesh(kernel, side)
        report.add(Check(f"restricted-rows-stochastic-lam-{lam}",
                         float(np.abs(restricted.matrix.sum(axis=1) - 1.0).max()),
                         1e-12))
        saturating = 1.0 / lam < float(cfg.mesh.edge_lengths.min())
        if saturating:
            exact = 0.0 if kernel.is_identity else 1.0
            report.add(Check(f"saturation-identity-lam-{lam}", exact, 0.0))
    return report


def suite_regularization(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("regularization")
    for lam in cfg.lambdas:
        sub = verify_regularization(cfg.mesh, cfg.operator, lam, cfg.shape)
        for c in sub.checks:
            c.details["lam"] = lam
        report.extend(sub.checks)
    return report


def suite_deformed_gluing(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("deformed-gluing")
    for lam in cfg.lambdas:
        sub = verify_deformed_gluing(cfg.mesh, cfg.operator, cfg.cut, lam,
                                     cfg.shape)
        for c in sub.checks:
            c.details["lam"] = lam
        report.extend(sub.checks)
    return report


def suite_gluing_theorem(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("gluing-theorem")
    for lam in cfg.lambdas:
        sub = verify_gluing_theorem(_scenario(cfg, lam), widen=True)
        for c in sub.checks:
            c.details["lam"] = lam
        report.extend(sub.checks)
    return report


def suite_renormalization(cfg: ScenarioConfig, seed: int) -> Report:
    report = Report("renormalization")
    lam = cfg.lambdas[0]
    scenario = _scenario(cfg, lam)
    shift = renormalization_commutes(
        scenario, lambda k, t: np.asarray(t) + 0.5 * lam if k == 4 else t)
    for c in shift.checks:
        c.details["redefinition"] = "quartic-scale-shift"
    report.extend(shift.checks)
    nodes = range(cfg.mesh.n_nodes)
    position_dependent = renormalization_commutes(
        scenario,
        lambda k, t: {p: 0.1 * (p + 1) for p in nodes} if k == 3 else t)
    for c in position_dependent.checks:
        c.details["redefinition"] = "cubic-position-dependent"
    report.extend(position_dependent.checks)
    return report


def suite_lambda_sweep(cfg: ScenarioConfig, seed: int) -> Report:
    return lambda_sweep(_scenario(cfg, cfg.lambdas[0]), cfg.lambdas)


SUITES = {
    "green-identities": (
        "interface response sum, Green gluing relations, boundary response difference",
        suite_green_identities,
    ),
    "quadratic-decomposition": (
        "additive split of the free action under background shifts, randomized",
        suite_quadratic_decomposition,
    ),
    "averaging-closed-form": (
        "flat-space sphere averaging: shell property, profile f, composition",
        suite_averaging_closed_form,
    ),
    "kernel-properties": (
        "row-stochasticity, ball support, restriction, saturation to identity",
        suite_kernel_properties,
    ),
    "regularization": (
        "finite averaged diagonal; matrix vs spectral routes agree",
        suite_regularization,
    ),
    "deformed-gluing": (
        "decomposition of the averaged propagator across the cut",
        suite_deformed_gluing,
    ),
    "gluing-theorem": (
        "glued vs whole series per order, with region widening",
        suite_gluing_theorem,
    ),
    "renormalization": (
        "gluing residuals unchanged under coupling redefinitions",
        suite_renormalization,
    ),
    "lambda-sweep": (
        "coefficients and residuals across the scale grid",
        suite_lambda_sweep,
    ),
}
