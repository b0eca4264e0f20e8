"""Interacting theory: vertices, Wick combinatorics, and the moment engine.

The partition function of a polynomial interaction under a Gaussian field is
computed exactly at each order of the coupling expansion: combinatorial
multiplicities in rational arithmetic, field contractions as dense tensor
sums.  A brute-force matching enumerator is kept alongside the counting
formulas as an independent route; the two must never be merged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .green import GreenBundle, green_bundle, quadratic_form_S0
from .kernels import KernelMatrix, regularized_green
from .meshes import Mesh
from .operators import OperatorSpec
from .series import PerturbationSeries, series_exp, series_log

#: hard ceiling on simultaneously contracted field legs
LEG_CAP = 12


class PerturbationError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionSpec:
    """Polynomial interaction sum_k t_k phi^k (no 1/k! normalization).

    couplings maps the power k to either a constant or a per-node array /
    mapping.  Powers below 3 may be recorded but must carry zero coupling:
    they would break the series grading of the expansion.
    """

    couplings: dict
    max_power: int = field(init=False)

    def __post_init__(self):
        if not self.couplings:
            object.__setattr__(self, "max_power", 0)
            return
        for k, t in self.couplings.items():
            if int(k) != k or k < 0:
                raise PerturbationError(f"bad interaction power {k}")
            if k < 3 and np.any(np.asarray(self._as_any(t)) != 0.0):
                raise PerturbationError(
                    f"power {k} coupling must be zero (breaks the series grading)"
                )
        object.__setattr__(self, "max_power", max(int(k) for k in self.couplings))

    @staticmethod
    def _as_any(t):
        return list(t.values()) if isinstance(t, dict) else t

    def coupling_at(self, k: int, nodes: np.ndarray) -> np.ndarray:
        """Per-node coupling values t_k(p) over the given nodes."""
        t = self.couplings.get(k, 0.0)
        if isinstance(t, dict):
            return np.array([float(t.get(int(p), 0.0)) for p in nodes])
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.full(nodes.size, float(t))
        return t[nodes]

    def powers(self) -> list[int]:
        return sorted(
            int(k) for k, t in self.couplings.items()
            if k >= 3 and np.any(np.asarray(self._as_any(t)) != 0.0)
        )

    def redefined(self, mapping) -> "InteractionSpec":
        """New spec with couplings replaced by mapping(k, t_k)."""
        return InteractionSpec(
            couplings={k: mapping(k, t) for k, t in self.couplings.items()}
        )


@dataclass(frozen=True)
class VertexType:
    """One interaction monomial summed over a vertex region.

    power  : number of field legs k.
    xpower : k - 2, the power of sqrt(hbar) the vertex carries.
    weights: t_k(p) vol(p) over the region nodes.
    """

    power: int
    xpower: int
    weights: np.ndarray


def vertex_terms(interaction: InteractionSpec, region: np.ndarray,
                 volumes: np.ndarray) -> list[VertexType]:
    """Vertex types of the interaction restricted to the region nodes."""
    region = np.asarray(region, dtype=int)
    out = []
    for k in interaction.powers():
        w = interaction.coupling_at(k, region) * volumes[region]
        out.append(VertexType(power=k, xpower=k - 2, weights=w))
    return out


def wick_pairings(legs):
    """All partial matchings of labeled legs: (pairs, unpaired) tuples.

    Brute-force enumerator; serves as the oracle against the counting
    formulas used in the moment engine.
    """
    legs = list(legs)
    if len(legs) > LEG_CAP:
        raise PerturbationError("order cap exceeded")
    if not legs:
        return [((), ())]
    first, rest = legs[0], legs[1:]
    out = []
    for pairs, unpaired in wick_pairings(rest):
        out.append((pairs, (first,) + unpaired))
    for i, other in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for pairs, unpaired in wick_pairings(remaining):
            out.append((((first, other),) + pairs, unpaired))
    return out


def _pair_matrices(residues):
    """Symmetric nonnegative integer matrices m with 2 m_aa + sum_b m_ab = r_a.

    m_ab counts propagators between instances a and b; m_aa counts self
    loops (each consuming two legs of instance a).
    """
    j = len(residues)
    slots = [(a, b) for a in range(j) for b in range(a, j)]

    def rec(idx, left):
        if idx == len(slots):
            yield {} if all(v == 0 for v in left) else None
            return
        a, b = slots[idx]
        cap = left[a] // 2 if a == b else min(left[a], left[b])
        for c in range(cap + 1):
            nxt = list(left)
            if a == b:
                nxt[a] -= 2 * c
            else:
                nxt[a] -= c
                nxt[b] -= c
            for tail in rec(idx + 1, nxt):
                if tail is not None:
                    out = dict(tail)
                    if c:
                        out[(a, b)] = c
                    yield out

    for m in rec(0, list(residues)):
        if m is not None:
            yield m


def _pairing_count(residues, m) -> Fraction:
    """Number of labeled-leg pairings realizing the pair-count matrix m."""
    count = Fraction(1)
    for r in residues:
        count *= factorial(r)
    for (a, b), c in m.items():
        if a == b:
            count /= Fraction(2**c * factorial(c))
        else:
            count /= factorial(c)
    return count


def gaussian_expectation(instances, mean: np.ndarray, cov: np.ndarray) -> float:
    """E[prod_i sum_p w_i(p) (mean(p) + g(p))^(k_i)] for centered Gaussian g.

    instances: list of (power k_i, weight vector over region nodes).
    mean, cov: background values and leg covariance over the same nodes.
    """
    j = len(instances)
    if sum(k for k, _ in instances) > LEG_CAP:
        raise PerturbationError("order cap exceeded")
    if j == 0:
        return 1.0
    letters = "abcdefghijkl"[:j]
    diag = np.diag(cov)
    total = 0.0
    for us in itertools.product(*[range(k + 1) for k, _ in instances]):
        residues = [k - u for (k, _), u in zip(instances, us)]
        if sum(residues) % 2:
            continue
        comb_u = 1
        for (k, _), u in zip(instances, us):
            comb_u *= comb(k, u)
        for m in _pair_matrices(residues):
            mult = comb_u * _pairing_count(residues, m)
            ops, subs = [], []
            vecs = [w * mean**u for (_, w), u in zip(instances, us)]
            for (a, b), c in m.items():
                if a == b:
                    vecs[a] = vecs[a] * diag**c
            for i, v in enumerate(vecs):
                ops.append(v)
                subs.append(letters[i])
            for (a, b), c in m.items():
                if a != b:
                    ops.append(cov**c)
                    subs.append(letters[a] + letters[b])
            value = float(np.einsum(",".join(subs) + "->", *ops))
            total += float(mult) * value
    return total


def interaction_z_series(vertices, mean: np.ndarray, cov: np.ndarray,
                         max_order: float) -> PerturbationSeries:
    """Series of E[exp(-V)] in x = sqrt(hbar), truncated at x^(2 max_order).

    Enumerates vertex-type multisets within the order and leg budgets; the
    1/n! of the exponential and the minus signs enter as exact rationals.
    """
    xmax = int(round(2 * max_order))
    coeffs = np.zeros(xmax + 1)
    coeffs[0] = 1.0

    def evaluate(counts, xpow):
        pref = Fraction((-1) ** sum(counts))
        for c in counts:
            pref /= factorial(c)
        instances = []
        for i, c in enumerate(counts):
            instances.extend([(vertices[i].power, vertices[i].weights)] * c)
        coeffs[xpow] += float(pref) * gaussian_expectation(instances, mean, cov)

    def rec(idx, counts, xpow, legs):
        if idx == len(vertices):
            if any(counts):
                evaluate(counts, xpow)
            return
        c = 0
        while True:
            nx = xpow + vertices[idx].xpower * c
            nl = legs + vertices[idx].power * c
            if nx > xmax:
                break
            if nl > LEG_CAP:
                raise PerturbationError("order cap exceeded")
            rec(idx + 1, counts + (c,), nx, nl)
            c += 1

    if vertices:
        rec(0, (), 0, 0)
    return PerturbationSeries.from_array(coeffs, max_order)


def effective_action_series(mesh: Mesh, spec: OperatorSpec, kernel: KernelMatrix,
                            interaction: InteractionSpec, eta: np.ndarray,
                            max_order: float, region: np.ndarray | None = None,
                            bundle: GreenBundle | None = None) -> PerturbationSeries:
    """Minus log of the regularized partition function, order by order.

    Order 0 is the free action of the harmonic extension of eta; higher
    orders come from the coupling expansion with averaged legs: background
    legs carry the averaged extension, contractions carry the averaged
    propagator, and vertices live on the trimmed node set (or the explicit
    region if one is given).
    """
    if bundle is None:
        bundle = green_bundle(mesh, spec)
    eta = np.zeros(bundle.boundary.size) if eta is None else np.asarray(eta, dtype=float)
    phi_bg = bundle.extend(eta)
    s0 = quadratic_form_S0(mesh, spec, phi_bg)
    if region is None:
        region = mesh.trim_to_deformed(kernel.lam)
    region = np.asarray(region, dtype=int)
    mean = (kernel.matrix @ phi_bg)[region]
    cov_nodes = regularized_green(kernel, kernel, bundle.green, bundle.interior)
    cov = cov_nodes[np.ix_(region, region)]
    vertices = vertex_terms(interaction, region, mesh.node_volumes)
    z = interaction_z_series(vertices, mean, cov, max_order)
    w = -series_log(z).to_array()
    w[0] += s0
    return PerturbationSeries.from_array(w, max_order)


def partition_series(mesh: Mesh, spec: OperatorSpec, kernel: KernelMatrix,
                     interaction: InteractionSpec, eta: np.ndarray,
                     max_order: float, region: np.ndarray | None = None,
                     bundle: GreenBundle | None = None) -> PerturbationSeries:
    """Regularized partition function as a series: exp of minus the action series."""
    w = effective_action_series(mesh, spec, kernel, interaction, eta,
                                max_order, region=region, bundle=bundle)
    return series_exp(-w)
