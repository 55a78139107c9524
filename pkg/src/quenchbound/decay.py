"""Decay functions and the Lieb-Robinson constants they induce.

All suprema are taken over the finite instance: the simulated graph *is* the
model's metric space, so the resulting constants are exact for it. Reports
label them instance-truncated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lattice import LatticeGraph, phi_boundary, region_distance
from .quantum import Interaction, Propagator, build_hamiltonian, embed_operator, spectral_norm


@dataclass(frozen=True)
class DecayFunction:
    """Positive non-increasing decay profile F(x) for x >= 0."""

    form: str
    exponent: Optional[float] = None
    table: Optional[tuple[float, ...]] = None

    @classmethod
    def power_law(cls, nu: float = 2.0) -> "DecayFunction":
        if nu <= 0:
            raise ValueError("power-law exponent must be positive")
        return cls(form="power-law", exponent=nu)

    @classmethod
    def exponential(cls, eta: float) -> "DecayFunction":
        if eta <= 0:
            raise ValueError("exponential rate must be positive")
        return cls(form="exponential", exponent=eta)

    @classmethod
    def tabulated(cls, values: Sequence[float]) -> "DecayFunction":
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("table must be non-empty")
        if any(v <= 0 for v in values):
            raise ValueError("table values must be positive")
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("table must be non-increasing")
        return cls(form="tabulated", table=values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.form == "power-law":
            return (1.0 + x) ** (-self.exponent)
        if self.form == "exponential":
            return np.exp(-self.exponent * x)
        if self.form == "tabulated":
            idx = np.rint(x).astype(int)
            if (idx < 0).any() or (idx >= len(self.table)).any():
                raise ValueError(f"tabulated decay covers distances 0..{len(self.table) - 1} only")
            return np.asarray(self.table, dtype=float)[idx]
        raise ValueError(f"unknown decay form {self.form!r}")

    def describe(self) -> dict:
        out = {"form": self.form}
        if self.exponent is not None:
            out["exponent"] = self.exponent
        if self.table is not None:
            out["table"] = list(self.table)
        return out


@dataclass(frozen=True)
class LRConstants:
    """Instance-truncated constants entering the commutator bound."""

    f_norm: float
    c_mu: float
    phi_norm: float
    mu: float
    v_mu: float


def f_norm(graph: LatticeGraph, decay: DecayFunction) -> float:
    """Max over vertices of the summed decay profile to every other vertex."""
    values = decay(graph.dist)
    return float(values.sum(axis=1).max())


def c_mu(graph: LatticeGraph, decay: DecayFunction, mu: float) -> float:
    """Max over (i, j) of the mu-weighted convolution of F against itself.

    The summand's exponent d(i,k)+d(k,j)-d(i,j) is non-negative by the triangle
    inequality, so this is non-increasing in mu.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    values = decay(graph.dist)
    weighted = np.exp(-mu * graph.dist) * values
    convolved = weighted @ weighted
    ratios = convolved * np.exp(mu * graph.dist) / values
    return float(ratios.max())


def phi_norm(graph: LatticeGraph, interaction: Interaction, decay: DecayFunction, mu: float) -> float:
    """Max over (i, j) of the summed term norms against the decay envelope."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    n = graph.n_vertices
    summed = np.zeros((n, n))
    for (support, _), norm in zip(interaction.terms, interaction.term_norms()):
        for i in support:
            for j in support:
                summed[i, j] += norm
    mask = summed > 0
    if not mask.any():
        return 0.0
    values = decay(graph.dist)
    ratios = summed[mask] * np.exp(mu * graph.dist[mask]) / values[mask]
    return float(ratios.max())


def lr_velocity(phi_norm_value: float, c_mu_value: float, mu: float) -> float:
    """v_mu = 2 ||Phi||_mu C_mu / mu."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return 2.0 * phi_norm_value * c_mu_value / mu


def lr_constants(graph: LatticeGraph, interaction: Interaction, decay: DecayFunction, mu: float) -> LRConstants:
    fn = f_norm(graph, decay)
    cm = c_mu(graph, decay, mu)
    pn = phi_norm(graph, interaction, decay, mu)
    return LRConstants(f_norm=fn, c_mu=cm, phi_norm=pn, mu=mu, v_mu=lr_velocity(pn, cm, mu))


def lr_commutator_rhs(
    constants: LRConstants,
    norm_a: float,
    norm_b: float,
    boundary_a: int,
    boundary_b: int,
    d_xy: int,
    t: float,
) -> float:
    """Bound on ||[A(t), B]|| for observables separated by d_xy > 0."""
    if d_xy <= 0:
        raise ValueError("the commutator bound needs d(X, Y) > 0")
    prefactor = 2.0 * norm_a * norm_b * constants.f_norm / constants.c_mu
    prefactor *= min(boundary_a, boundary_b)
    return prefactor * float(np.exp(-constants.mu * (d_xy - constants.v_mu * abs(t))))


@dataclass(frozen=True)
class CommutatorCheckPoint:
    """One (t, distance) sample of the commutator bound."""

    d_xy: int
    t: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def check_lr_bound(
    graph: LatticeGraph,
    interaction: Interaction,
    decay: DecayFunction,
    mu: float,
    a_support: Sequence[int],
    a_matrix: np.ndarray,
    b_support: Sequence[int],
    b_matrix: np.ndarray,
    t_grid: Sequence[float],
    propagator: Optional[Propagator] = None,
) -> tuple[LRConstants, list[CommutatorCheckPoint]]:
    """Exact ||[A(t), B]|| against the commutator bound over a time grid."""
    space = interaction.space
    x_set = graph.check_subset(a_support)
    y_set = graph.check_subset(b_support)
    d_xy = region_distance(graph, x_set, y_set)
    if d_xy == 0:
        raise ValueError("observables must live on regions with d(X, Y) > 0")
    constants = lr_constants(graph, interaction, decay, mu)
    boundary_a = len(phi_boundary(graph, interaction, x_set))
    boundary_b = len(phi_boundary(graph, interaction, y_set))
    norm_a = spectral_norm(a_matrix)
    norm_b = spectral_norm(b_matrix)
    a_full = embed_operator(a_matrix, sorted(x_set), space)
    b_full = embed_operator(b_matrix, sorted(y_set), space)
    if propagator is None:
        propagator = Propagator(build_hamiltonian(interaction, space))
    points = []
    for t in t_grid:
        a_t = propagator.heisenberg(a_full, t)
        lhs = spectral_norm(a_t @ b_full - b_full @ a_t)
        rhs = lr_commutator_rhs(constants, norm_a, norm_b, boundary_a, boundary_b, d_xy, t)
        points.append(CommutatorCheckPoint(d_xy=d_xy, t=float(t), lhs=lhs, rhs=rhs))
    return constants, points
