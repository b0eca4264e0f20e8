"""Green's matrices, harmonic extensions, and boundary response operators.

Everything a boundary-value problem contributes to the gluing algebra lives
here: the Dirichlet Green's matrix (inverse interior operator), the Poisson
operator mapping boundary data to its harmonic extension, and the
boundary-to-boundary response (Dirichlet-to-Neumann) realized as a Schur
complement.  Normal-derivative kernels are never formed pointwise; every
boundary operator is a finite matrix obtained by block elimination, which
keeps all gluing identities exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshes import LEFT, RIGHT, Cut, Mesh
from .operators import OperatorMatrix, OperatorSpec, assemble
from .reports import Check, Report


class GreenError(ValueError):
    pass


def full_matrix(mesh: Mesh, spec: OperatorSpec) -> np.ndarray:
    """Operator over all nodes: graph Laplacian plus interior mass term."""
    a = -mesh.adjacency()
    np.fill_diagonal(a, -a.sum(axis=1))
    mass = np.zeros(mesh.n_nodes)
    mass[mesh.interior] = spec.mass_squared * mesh.node_volumes[mesh.interior]
    return a + np.diag(mass)


def _inverse_spd(m: np.ndarray, what: str) -> np.ndarray:
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise GreenError(f"non-positive spectrum in {what}") from exc
    inv = np.linalg.inv(c)
    return inv.T @ inv


@dataclass(frozen=True)
class GreenBundle:
    """Green's matrix, Poisson operator, and boundary response of one mesh.

    green   : (I, I) inverse of the interior operator.
    poisson : (I, B); interior values of the harmonic extension of eta are
              poisson @ eta.
    dtn     : (B, B) Schur complement of the full operator onto the boundary;
              the energy of the harmonic extension is eta' dtn eta / 2.
    """

    mesh: Mesh
    spec: OperatorSpec
    interior: np.ndarray
    boundary: np.ndarray
    green: np.ndarray
    poisson: np.ndarray
    dtn: np.ndarray

    def extend(self, eta: np.ndarray) -> np.ndarray:
        """Full-node harmonic extension field of boundary data eta."""
        field = np.zeros(self.mesh.n_nodes)
        field[self.boundary] = eta
        field[self.interior] = self.poisson @ eta
        return field

    def dtn_block(self, ids_a: np.ndarray, ids_b: np.ndarray) -> np.ndarray:
        pos = {int(n): k for k, n in enumerate(self.boundary)}
        ia = [pos[int(n)] for n in ids_a]
        ib = [pos[int(n)] for n in ids_b]
        return self.dtn[np.ix_(ia, ib)]


def green_bundle(mesh: Mesh, spec: OperatorSpec, op: OperatorMatrix | None = None) -> GreenBundle:
    if op is None:
        op = assemble(mesh, spec)
    green = _inverse_spd(op.interior_matrix, "interior operator")
    poisson = -green @ op.boundary_coupling
    full = full_matrix(mesh, spec)
    a_bb = full[np.ix_(mesh.boundary, mesh.boundary)]
    dtn = a_bb - op.boundary_coupling.T @ green @ op.boundary_coupling
    return GreenBundle(
        mesh=mesh,
        spec=spec,
        interior=op.interior,
        boundary=op.boundary,
        green=green,
        poisson=poisson,
        dtn=dtn,
    )


@dataclass(frozen=True)
class SideBundle:
    """Green data of one side of a cut, with the cut surface as boundary.

    The side boundary is ordered [outer..., sigma...]; `outer` includes the
    shared nodes sitting on the cut line.  The surface block of the side
    operator uses the declared edge attribution of the cut, so the two sides'
    interface responses add up exactly to the inverse interface Green's
    matrix of the whole mesh.
    """

    side: str
    interior: np.ndarray
    outer: np.ndarray
    sigma: np.ndarray
    green: np.ndarray
    poisson: np.ndarray
    dtn: np.ndarray

    @property
    def n_outer(self) -> int:
        return self.outer.size

    @property
    def poisson_outer(self) -> np.ndarray:
        return self.poisson[:, : self.n_outer]

    @property
    def poisson_sigma(self) -> np.ndarray:
        return self.poisson[:, self.n_outer:]

    @property
    def dtn_sigma(self) -> np.ndarray:
        """Interface response D(Sigma, side)."""
        k = self.n_outer
        return self.dtn[k:, k:]

    @property
    def dtn_outer(self) -> np.ndarray:
        k = self.n_outer
        return self.dtn[:k, :k]

    @property
    def dtn_cross(self) -> np.ndarray:
        """Outer-to-interface block (rows outer, columns sigma)."""
        k = self.n_outer
        return self.dtn[:k, k:]

    def extend(self, n_nodes: int, eta_outer: np.ndarray, eta_sigma: np.ndarray) -> np.ndarray:
        """Side harmonic extension as a full-mesh field (zero off-side)."""
        field = np.zeros(n_nodes)
        field[self.outer] = eta_outer
        field[self.sigma] = eta_sigma
        field[self.interior] = self.poisson @ np.concatenate([eta_outer, eta_sigma])
        return field


def side_surface_matrix(mesh: Mesh, spec: OperatorSpec, cut: Cut, side: str,
                        surf: np.ndarray) -> np.ndarray:
    """Surface block of the side operator over the nodes `surf`.

    Edge conductances enter with the side's attribution fraction; interface
    nodes contribute half their mass term to each side, outer boundary nodes
    carry none.
    """
    pos = {int(n): k for k, n in enumerate(surf)}
    frac = cut.edge_fraction(side)
    m = np.zeros((surf.size, surf.size))
    for e, (i, j) in enumerate(mesh.edges):
        w = mesh.edge_weights[e] * frac[e]
        if w == 0.0:
            continue
        ii, jj = pos.get(int(i)), pos.get(int(j))
        if ii is not None:
            m[ii, ii] += w
        if jj is not None:
            m[jj, jj] += w
        if ii is not None and jj is not None:
            m[ii, jj] -= w
            m[jj, ii] -= w
    sigma_local = [pos[int(n)] for n in cut.interface if int(n) in pos]
    for k, n in zip(sigma_local, [n for n in cut.interface if int(n) in pos]):
        m[k, k] += 0.5 * spec.mass_squared * mesh.node_volumes[int(n)]
    return m


def side_bundle(mesh: Mesh, spec: OperatorSpec, cut: Cut, side: str) -> SideBundle:
    interior = cut.side_interior(side)
    outer = cut.side_outer_boundary(side)
    sigma = cut.interface
    surf = np.concatenate([outer, sigma])
    full = full_matrix(mesh, spec)
    a_ii = full[np.ix_(interior, interior)]
    a_is = full[np.ix_(interior, surf)]
    if interior.size:
        green = _inverse_spd(a_ii, f"{side} side operator")
        poisson = -green @ a_is
        elimination = a_is.T @ green @ a_is
    else:
        green = np.zeros((0, 0))
        poisson = np.zeros((0, surf.size))
        elimination = np.zeros((surf.size, surf.size))
    dtn = side_surface_matrix(mesh, spec, cut, side, surf) - elimination
    return SideBundle(
        side=side,
        interior=interior,
        outer=outer,
        sigma=sigma,
        green=green,
        poisson=poisson,
        dtn=dtn,
    )


def interface_green(left: SideBundle, right: SideBundle) -> np.ndarray:
    """Interface Green's matrix: inverse of the summed interface responses."""
    return _inverse_spd(left.dtn_sigma + right.dtn_sigma, "interface response sum")


def dtn(mesh: Mesh, spec: OperatorSpec, cut: Cut | None, side: str, target: str) -> np.ndarray:
    """Boundary response matrix for one side (or the whole mesh).

    side   : "left", "right", or "whole".
    target : "sigma" (cut surface) or "outer" (that side's outer boundary;
             for "whole", the full boundary).
    """
    if side == "whole":
        bundle = green_bundle(mesh, spec)
        if target == "outer":
            return bundle.dtn
        if cut is None:
            raise GreenError("interface target needs a cut")
        left = side_bundle(mesh, spec, cut, LEFT)
        right = side_bundle(mesh, spec, cut, RIGHT)
        return np.linalg.inv(interface_green(left, right))
    if cut is None:
        raise GreenError("side response needs a cut")
    sb = side_bundle(mesh, spec, cut, side)
    return sb.dtn_sigma if target == "sigma" else sb.dtn_outer


def quadratic_form_S0(mesh: Mesh, spec: OperatorSpec, field: np.ndarray) -> float:
    """Discrete free action: edge-difference energy plus interior mass term."""
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    grad = 0.5 * np.sum(mesh.edge_weights * (field[i] - field[j]) ** 2)
    interior = mesh.interior
    mass = 0.5 * spec.mass_squared * np.sum(
        mesh.node_volumes[interior] * field[interior] ** 2
    )
    return float(grad + mass)


def cross_form(bundle: GreenBundle, ids_a: np.ndarray, eta_a: np.ndarray,
               ids_b: np.ndarray, eta_b: np.ndarray) -> float:
    """Boundary cross term between data on two disjoint boundary subsets.

    Defined so that the energy of a summed extension decomposes as
    S0[a+b] = S0[a] + S0[b] - cross_form(a, b).
    """
    if set(map(int, ids_a)) & set(map(int, ids_b)):
        raise GreenError("overlapping boundary subsets")
    block = bundle.dtn_block(ids_a, ids_b)
    return float(-eta_a @ block @ eta_b)


def verify_quadratic_decomposition(mesh: Mesh, spec: OperatorSpec, cut: Cut,
                                   trials: int = 100, seed: int = 0,
                                   tolerance: float = 1e-12) -> Report:
    """Check the additive split of the free action under background shifts.

    For random interior fields phi (zero on the boundary) and random boundary
    data split across the two outer parts, the free action of phi plus the
    harmonic extension must decompose into the separate energies minus the
    boundary cross term.
    """
    rng = np.random.default_rng(seed)
    bundle = green_bundle(mesh, spec)
    ids_l = np.asarray(sorted(set(cut.left_boundary) | set(cut.shared_boundary)), dtype=int)
    ids_r = cut.right_boundary
    report = Report("quadratic-decomposition")
    scale = max(1.0, float(np.abs(bundle.green).max()))
    worst = 0.0
    for _ in range(trials):
        phi = np.zeros(mesh.n_nodes)
        phi[mesh.interior] = rng.standard_normal(mesh.interior.size)
        eta = rng.standard_normal(bundle.boundary.size)
        eta_l = np.zeros_like(eta)
        eta_r = np.zeros_like(eta)
        pos = {int(n): k for k, n in enumerate(bundle.boundary)}
        for n in ids_l:
            eta_l[pos[int(n)]] = eta[pos[int(n)]]
        for n in ids_r:
            eta_r[pos[int(n)]] = eta[pos[int(n)]]
        total = quadratic_form_S0(mesh, spec, phi + bundle.extend(eta))
        parts = (
            quadratic_form_S0(mesh, spec, phi)
            + quadratic_form_S0(mesh, spec, bundle.extend(eta_l))
            + quadratic_form_S0(mesh, spec, bundle.extend(eta_r))
            - cross_form(bundle, ids_l, eta_l[[pos[int(n)] for n in ids_l]],
                         ids_r, eta_r[[pos[int(n)] for n in ids_r]])
        )
        worst = max(worst, abs(total - parts) / scale)
    report.add(Check("free-action-split", worst, tolerance,
                     {"trials": trials, "mesh_nodes": mesh.n_nodes}))
    return report


def verify_green_gluing(mesh: Mesh, spec: OperatorSpec, cut: Cut,
                        tolerance: float = 1e-10) -> Report:
    """Entrywise check of the same-side and cross-side gluing relations.

    The whole-mesh Green's matrix must equal the side Green's matrix plus the
    interface round trip on one side, and the pure interface round trip
    across sides.  The interface Green's block is computed both as a block of
    the dense whole inverse and as the inverse summed side response; their
    agreement is part of the report.
    """
    bundle = green_bundle(mesh, spec)
    left = side_bundle(mesh, spec, cut, LEFT)
    right = side_bundle(mesh, spec, cut, RIGHT)
    g_sigma = interface_green(left, right)

    pos = {int(n): k for k, n in enumerate(bundle.interior)}
    loc = lambda ids: [pos[int(n)] for n in ids]
    g = bundle.green
    report = Report("green-gluing")

    block = g[np.ix_(loc(cut.interface), loc(cut.interface))]
    report.add(Check("interface-green-two-paths",
                     float(np.abs(block - g_sigma).max()), tolerance))
    report.add(Check("interface-response-inverse",
                     float(np.abs((left.dtn_sigma + right.dtn_sigma) @ block
                                  - np.eye(block.shape[0])).max()),
                     tolerance))

    for sb in (left, right):
        if sb.interior.size == 0:
            continue
        whole_block = g[np.ix_(loc(sb.interior), loc(sb.interior))]
        glued = g[np.ix_(loc(sb.interior), loc(sb.interior))] * 0
        glued += sb.poisson_sigma @ g_sigma @ sb.poisson_sigma.T
        sub = sb.green + glued
        report.add(Check(f"same-side-{sb.side}",
                         float(np.abs(whole_block - sub).max()), tolerance))
        mixed = g[np.ix_(loc(sb.interior), loc(cut.interface))]
        report.add(Check(f"side-to-interface-{sb.side}",
                         float(np.abs(mixed - sb.poisson_sigma @ g_sigma).max()),
                         tolerance))
    if left.interior.size and right.interior.size:
        across = g[np.ix_(loc(left.interior), loc(right.interior))]
        report.add(Check("cross-side",
                         float(np.abs(across - left.poisson_sigma @ g_sigma
                                      @ right.poisson_sigma.T).max()),
                         tolerance))
    return report


def verify_dtn_difference(mesh: Mesh, spec: OperatorSpec, cut: Cut, side: str = LEFT) -> Report:
    """Difference between whole-mesh and one-side outer boundary responses.

    The difference matrix is regular (finite entrywise); the report carries
    its max norm so refinement sweeps can confirm it stays bounded.
    """
    bundle = green_bundle(mesh, spec)
    sb = side_bundle(mesh, spec, cut, side)
    whole_block = bundle.dtn_block(sb.outer, sb.outer)
    diff = whole_block - sb.dtn_outer
    norm = float(np.abs(diff).max()) if diff.size else 0.0
    report = Report("outer-response-difference")
    report.add(Check(f"finite-difference-{side}", 0.0 if np.isfinite(norm) else np.inf,
                     0.0, {"max_entry": norm, "outer_nodes": sb.outer.size}))
    return report
