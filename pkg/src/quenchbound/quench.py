"""Quench scenarios and the dynamical quantities compared against the bounds.

Three evolution branches share one initial state: branch 0 evolves under the
unperturbed Hamiltonian, branch 1 under the perturbed one (Hamiltonian
quench), and branch 2 evolves the unitarily kicked state under the original
Hamiltonian (state quench).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .decay import DecayFunction
from .lattice import LatticeGraph, enlargement, region_distance
from .quantum import (
    HERMITICITY_TOL,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Interaction,
    ProductSpace,
    Propagator,
    build_hamiltonian,
    check_state,
    embed_operator,
    partial_trace,
    product_basis_state,
    spectral_norm,
    trace_norm,
    von_neumann_entropy,
)

def transverse_field_ising(graph: LatticeGraph, coupling: float = 1.0, field_strength: float = 1.0) -> Interaction:
    """sigma_z sigma_z bonds on every edge plus a sigma_x field on every site."""
    terms = []
    zz = np.kron(SIGMA_Z, SIGMA_Z)
    for u, v in sorted(graph.edges):
        terms.append(((u, v), coupling * zz))
    for i in graph.vertices:
        terms.append(((i,), field_strength * SIGMA_X))
    return Interaction.build((2,) * graph.n_vertices, terms)


def heisenberg(graph: LatticeGraph, coupling: float = 1.0) -> Interaction:
    """Isotropic exchange sigma.sigma on every edge."""
    exchange = np.kron(SIGMA_X, SIGMA_X) + np.kron(SIGMA_Y, SIGMA_Y) + np.kron(SIGMA_Z, SIGMA_Z)
    terms = [((u, v), coupling * exchange) for u, v in sorted(graph.edges)]
    return Interaction.build((2,) * graph.n_vertices, terms)


def on_site_field(graph: LatticeGraph, operator: np.ndarray, strength: float = 1.0) -> Interaction:
    """Decoupled system: one local term per site, nothing crossing any cut."""
    terms = [((i,), strength * np.asarray(operator, dtype=complex)) for i in graph.vertices]
    return Interaction.build((2,) * graph.n_vertices, terms)


def all_down_state(space: ProductSpace) -> np.ndarray:
    """Product state with every site in its highest-index (spin-down) level."""
    return product_basis_state(space, [d - 1 for d in space.site_dims])


class QuenchScenario:
    """Immutable bundle of lattice, dynamics, initial state, and quench.

    q = 1 perturbs the Hamiltonian by `w_matrix` on `x_region`; q = 2 applies
    the unitary `u_matrix` there at t = 0. Propagators are eigendecomposed
    once and shared across the whole time grid.
    """

    def __init__(
        self,
        graph: LatticeGraph,
        interaction: Interaction,
        psi0: np.ndarray,
        x_region: Iterable[int],
        q: int,
        quench_matrix: np.ndarray,
        quench_support: Sequence[int],
        mu: float,
        decay: DecayFunction,
    ):
        if q not in (1, 2):
            raise ValueError("branch q must be 1 (Hamiltonian quench) or 2 (state quench)")
        if mu <= 0:
            raise ValueError("mu must be positive")
        self.graph = graph
        self.interaction = interaction
        self.space = interaction.space
        self.psi0 = check_state(psi0, self.space)
        self.x_region = graph.check_subset(x_region)
        if not self.x_region:
            raise ValueError("quench region must be non-empty")
        self.q = q
        self.mu = float(mu)
        self.decay = decay
        self.quench_support = tuple(sorted(int(s) for s in quench_support))
        if not set(self.quench_support) <= self.x_region:
            raise ValueError("quench operator support must lie inside the quench region X")
        matrix = np.asarray(quench_matrix, dtype=complex)
        d_sup = self.space.dim_of(self.quench_support)
        if matrix.shape != (d_sup, d_sup):
            raise ValueError(f"quench operator shape {matrix.shape} does not match its support")
        if q == 1:
            if np.abs(matrix - matrix.conj().T).max() > HERMITICITY_TOL:
                raise ValueError("a Hamiltonian quench needs a Hermitian operator")
        else:
            identity = np.eye(d_sup)
            if np.abs(matrix.conj().T @ matrix - identity).max() > HERMITICITY_TOL:
                raise ValueError("a state quench needs a unitary operator")
        self.quench_matrix = matrix

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return build_hamiltonian(self.interaction, self.space)

    @cached_property
    def quench_full(self) -> np.ndarray:
        return embed_operator(self.quench_matrix, self.quench_support, self.space)

    @cached_property
    def base_propagator(self) -> Propagator:
        return Propagator(self.hamiltonian)

    @cached_property
    def perturbed_propagator(self) -> Propagator:
        return Propagator(self.hamiltonian + self.quench_full)

    @cached_property
    def kicked_state(self) -> np.ndarray:
        return self.quench_full @ self.psi0

    @property
    def norm_w(self) -> float:
        """Spectral norm of the perturbation (q = 1); zero for a state quench."""
        if self.q != 1:
            return 0.0
        return spectral_norm(self.quench_matrix)

    def evolve_branches(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(unquenched state, quenched state) at time t, both unit vectors."""
        psi0_t = self.base_propagator.evolve(self.psi0, t)
        if self.q == 1:
            psiq_t = self.perturbed_propagator.evolve(self.psi0, t)
        else:
            psiq_t = self.base_propagator.evolve(self.kicked_state, t)
        return psi0_t, psiq_t

    def reduced_pair(self, y_region: Iterable[int], t: float) -> tuple[np.ndarray, np.ndarray]:
        y_sorted = self._check_probe(y_region)
        psi0_t, psiq_t = self.evolve_branches(t)
        dims = self.space.site_dims
        return partial_trace(psi0_t, y_sorted, dims), partial_trace(psiq_t, y_sorted, dims)

    def _check_probe(self, y_region: Iterable[int]) -> list[int]:
        y_set = self.graph.check_subset(y_region)
        if not y_set:
            raise ValueError("probe region must be non-empty")
        if region_distance(self.graph, self.x_region, y_set) == 0:
            raise ValueError("probe region must satisfy d(X, Y) > 0")
        return sorted(y_set)


def reduced_distance(scenario: QuenchScenario, y_region: Iterable[int], t: float) -> float:
    """Trace distance between the two branches' reduced states on Y."""
    rho0, rhoq = scenario.reduced_pair(y_region, t)
    return trace_norm(rho0 - rhoq)


def entropy_variation(scenario: QuenchScenario, y_region: Iterable[int], t: float) -> float:
    """S(rho0_Y(t)) - S(rhoq_Y(t)) in bits."""
    rho0, rhoq = scenario.reduced_pair(y_region, t)
    return von_neumann_entropy(rho0) - von_neumann_entropy(rhoq)


@dataclass(frozen=True)
class EntropyProfile:
    """Bipartition entanglement over an (enlargement radius, time) grid."""

    q: int
    x_grid: tuple[int, ...]
    t_grid: tuple[float, ...]
    base: np.ndarray
    quenched: np.ndarray
    difference: np.ndarray
    cut_distances: tuple[int, ...] = field(default=())


def entanglement_profile(
    scenario: QuenchScenario,
    x_grid: Sequence[int],
    t_grid: Sequence[float],
) -> EntropyProfile:
    """E_q(x, t): entropy across the bipartition (X enlarged by x | rest).

    Rows follow x_grid, columns t_grid. Also records |E0 - Eq| and the true
    graph distance from X to the complement at each x.
    """
    graph = scenario.graph
    dims = scenario.space.site_dims
    n = scenario.space.n_sites
    x_grid = tuple(int(x) for x in x_grid)
    t_grid = tuple(float(t) for t in t_grid)
    regions = []
    cut_distances = []
    for x in x_grid:
        if x < 0:
            raise ValueError("enlargement radius must be >= 0")
        inside = enlargement(graph, scenario.x_region, x)
        if len(inside) == n:
            raise ValueError(f"enlargement radius {x} swallows the whole lattice; bipartition degenerate")
        regions.append(sorted(inside))
        complement = frozenset(graph.vertices) - inside
        cut_distances.append(region_distance(graph, scenario.x_region, complement))
    base = np.zeros((len(x_grid), len(t_grid)))
    quenched = np.zeros_like(base)
    for col, t in enumerate(t_grid):
        psi0_t, psiq_t = scenario.evolve_branches(t)
        for row, keep in enumerate(regions):
            base[row, col] = von_neumann_entropy(partial_trace(psi0_t, keep, dims))
            quenched[row, col] = von_neumann_entropy(partial_trace(psiq_t, keep, dims))
    return EntropyProfile(
        q=scenario.q,
        x_grid=x_grid,
        t_grid=t_grid,
        base=base,
        quenched=quenched,
        difference=np.abs(base - quenched),
        cut_distances=tuple(cut_distances),
    )
