"""Derived constants and right-hand sides of the quench bounds, plus the
certifiers that sweep them against exact dynamics.

Margins are rhs - lhs per grid point; a point fails only when it lies inside
the bound's validity region and its margin drops below -1e-9. The inequalities
are theorems for the simulated instance, so failures indicate implementation
bugs, never physics.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .decay import LRConstants, lr_constants
from .lattice import (
    GrowthConstants,
    LatticeGraph,
    boundary_and_interior,
    phi_boundary,
    region_distance,
    shell_decomposition,
)
from .quantum import (
    Interaction,
    Propagator,
    build_hamiltonian,
    check_state,
    embed_operator,
    partial_trace,
    spectral_norm,
    trace_norm,
    von_neumann_entropy,
)
from .quench import QuenchScenario
from .report import CertificationReport, GridPoint


class RegimeError(ValueError):
    """Raised when constants are requested outside a bound's stated regime."""


def _exp(x: float) -> float:
    if x > 709.0:
        return math.inf
    return math.exp(x)


def region_label(members: Iterable[int]) -> str:
    ids = sorted(members)
    if ids and ids == list(range(ids[0], ids[-1] + 1)) and len(ids) > 1:
        return f"{ids[0]}-{ids[-1]}"
    return ",".join(str(i) for i in ids)


def _map_ordered(fn, items, workers: int = 1):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class BoundConstants:
    """Every scalar feeding the reduced-state and entropy-variation right-hand sides."""

    lr: LRConstants
    c1: float
    c2: float
    gamma1: float
    gamma2: float
    v_prime: float
    growth: GrowthConstants
    boundary_x: int
    phi_boundary_min: int
    local_dim: int
    norm_w: float

    def c_q(self, q: int) -> float:
        return self.c1 if q == 1 else self.c2

    def gamma_q(self, q: int) -> float:
        return self.gamma1 if q == 1 else self.gamma2

    def describe(self) -> dict:
        return {
            "mu": self.lr.mu,
            "f_norm": self.lr.f_norm,
            "c_mu": self.lr.c_mu,
            "phi_norm": self.lr.phi_norm,
            "v_mu": self.lr.v_mu,
            "c1": self.c1,
            "c2": self.c2,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "v_prime": self.v_prime,
            "growth_family": self.growth.family,
            "growth_b": self.growth.b,
            "growth_alpha": self.growth.alpha,
            "boundary_x": self.boundary_x,
            "phi_boundary_min": self.phi_boundary_min,
            "local_dim": self.local_dim,
            "norm_w": self.norm_w,
            "truncation": "instance",
        }


def lemma1_constants(
    lr: LRConstants,
    norm_w: float,
    phi_boundary_x: int,
    phi_boundary_y: int,
) -> tuple[float, float]:
    """(c1, c2) prefactors of the reduced-state distance bound."""
    boundary_min = min(phi_boundary_x, phi_boundary_y)
    c2 = 2.0 * lr.f_norm / lr.c_mu * boundary_min
    if norm_w == 0.0 or boundary_min == 0:
        c1 = 0.0
    else:
        if lr.v_mu == 0.0:
            raise RegimeError("c1 is undefined for a perturbation with zero group velocity (v_mu = 0)")
        c1 = 2.0 * norm_w * lr.f_norm / (lr.mu * lr.v_mu * lr.c_mu) * boundary_min
    return c1, c2


def lemma1_rhs(c_q: float, mu: float, v_mu: float, d_xy: int, t: float) -> float:
    """c_q * exp(-mu * (d(X,Y) - v_mu |t|))."""
    if d_xy <= 0:
        raise ValueError("the bound needs d(X, Y) > 0")
    return c_q * _exp(-mu * (d_xy - v_mu * abs(t)))


def _gamma(c_q: float, mu: float, boundary_x: int, b: float, local_dim: int) -> float:
    root = math.sqrt(c_q)
    return 4.0 * root / (1.0 - math.exp(-mu / 2.0)) * (boundary_x * root * b * math.log2(local_dim) + 1.0)


def theorem_constants(
    lr: LRConstants,
    growth: GrowthConstants,
    c1: float,
    c2: float,
    boundary_x: int,
    local_dim: int,
) -> tuple[float, float, float]:
    """(gamma1, gamma2, v_prime) for the entropy-variation bound; needs mu > 2*alpha."""
    mu, alpha = lr.mu, growth.alpha
    if mu <= alpha:
        raise RegimeError(f"v_prime undefined: mu = {mu:g} must exceed alpha = {alpha:g}")
    if mu <= 2.0 * alpha:
        raise RegimeError(f"entropy bound regime needs mu > 2*alpha, got mu = {mu:g}, alpha = {alpha:g}")
    v_prime = mu / (mu - alpha) * lr.v_mu
    gamma1 = _gamma(c1, mu, boundary_x, growth.b, local_dim)
    gamma2 = _gamma(c2, mu, boundary_x, growth.b, local_dim)
    return gamma1, gamma2, v_prime


def theorem_rhs(gamma_q: float, mu: float, v_prime: float, d_xy: int, t: float) -> tuple[float, bool]:
    """(gamma_q * exp(-(mu/2)(d - v'|t|)), inside-validity-region flag)."""
    if d_xy <= 0:
        raise ValueError("the bound needs d(X, Y) > 0")
    rhs = gamma_q * _exp(-(mu / 2.0) * (d_xy - v_prime * abs(t)))
    return rhs, d_xy > v_prime * abs(t)


def bound_constants(scenario: QuenchScenario, y_region: Iterable[int], growth: GrowthConstants) -> BoundConstants:
    """Assemble every derived constant for one (scenario, probe region) pair."""
    graph = scenario.graph
    y_set = graph.check_subset(y_region)
    lr = lr_constants(graph, scenario.interaction, scenario.decay, scenario.mu)
    bx_phi = len(phi_boundary(graph, scenario.interaction, scenario.x_region))
    by_phi = len(phi_boundary(graph, scenario.interaction, y_set))
    _, bdry_x = boundary_and_interior(graph, scenario.x_region)
    norm_w = scenario.norm_w
    c1, c2 = lemma1_constants(lr, norm_w, bx_phi, by_phi)
    local_dim = scenario.space.max_local_dim
    gamma1, gamma2, v_prime = theorem_constants(lr, growth, c1, c2, len(bdry_x), local_dim)
    return BoundConstants(
        lr=lr,
        c1=c1,
        c2=c2,
        gamma1=gamma1,
        gamma2=gamma2,
        v_prime=v_prime,
        growth=growth,
        boundary_x=len(bdry_x),
        phi_boundary_min=min(bx_phi, by_phi),
        local_dim=local_dim,
        norm_w=norm_w,
    )


def _prepare_regions(scenario: QuenchScenario, y_regions: Sequence[Iterable[int]]):
    prepared = []
    for region in y_regions:
        y_set = scenario.graph.check_subset(region)
        d_xy = region_distance(scenario.graph, scenario.x_region, y_set)
        if d_xy == 0:
            raise ValueError(f"region {region_label(y_set)} touches the quench region")
        prepared.append((region_label(y_set), sorted(y_set), d_xy))
    return prepared


def certify_lemma1(
    scenario: QuenchScenario,
    y_regions: Sequence[Iterable[int]],
    t_grid: Sequence[float],
    growth: GrowthConstants,
    workers: int = 1,
) -> CertificationReport:
    """Reduced-state trace distance against its exponential bound, per (Y, t)."""
    regions = _prepare_regions(scenario, y_regions)
    constants = {label: bound_constants(scenario, y_set, growth) for label, y_set, _ in regions}
    dims = scenario.space.site_dims
    q = scenario.q

    def evaluate(t: float) -> list[float]:
        psi0_t, psiq_t = scenario.evolve_branches(t)
        out = []
        for _, y_sorted, _ in regions:
            rho0 = partial_trace(psi0_t, y_sorted, dims)
            rhoq = partial_trace(psiq_t, y_sorted, dims)
            out.append(trace_norm(rho0 - rhoq))
        return out

    per_t = _map_ordered(evaluate, list(t_grid), workers)
    points = []
    for r_idx, (label, _, d_xy) in enumerate(regions):
        cq = constants[label].c_q(q)
        lr = constants[label].lr
        for t_idx, t in enumerate(t_grid):
            lhs = per_t[t_idx][r_idx]
            rhs = lemma1_rhs(cq, lr.mu, lr.v_mu, d_xy, t)
            points.append(GridPoint(q=q, mu=lr.mu, region=label, d=d_xy, t=float(t), lhs=lhs, rhs=rhs))
    return CertificationReport(
        kind="lemma1",
        points=points,
        constants=[{"q": q, "region": label, **constants[label].describe()} for label, _, _ in regions],
    )


def certify_theorem(
    scenario: QuenchScenario,
    y_regions: Sequence[Iterable[int]],
    t_grid: Sequence[float],
    growth: GrowthConstants,
    workers: int = 1,
    gate_diagnostics: bool = True,
) -> CertificationReport:
    """|entropy variation| against its volume-independent bound, per (Y, t).

    Points outside d(X, Y) > v'_mu |t| are reported but never failed. With
    gate_diagnostics, each point also records whether every shell tail kept
    its trace distance below the conditional-entropy continuity gate.
    """
    regions = _prepare_regions(scenario, y_regions)
    constants = {label: bound_constants(scenario, y_set, growth) for label, y_set, _ in regions}
    dims = scenario.space.site_dims
    q = scenario.q
    shells_by_label = {}
    if gate_diagnostics:
        for label, y_sorted, _ in regions:
            decomp = shell_decomposition(scenario.graph, scenario.x_region, y_sorted)
            # the continuity gate applies to the tails entering conditional
            # entropies, i.e. all but the outermost shell
            shells_by_label[label] = [sorted(tail) for tail in decomp.tails[:-1]]

    def evaluate(t: float):
        psi0_t, psiq_t = scenario.evolve_branches(t)
        out = []
        for label, y_sorted, _ in regions:
            rho0 = partial_trace(psi0_t, y_sorted, dims)
            rhoq = partial_trace(psiq_t, y_sorted, dims)
            lhs = abs(von_neumann_entropy(rho0) - von_neumann_entropy(rhoq))
            gate_ok = None
            if gate_diagnostics:
                gate_ok = True
                for tail in shells_by_label[label]:
                    t_l = trace_norm(
                        partial_trace(psi0_t, tail, dims) - partial_trace(psiq_t, tail, dims)
                    )
                    if t_l >= 1.0:
                        gate_ok = False
                        break
            out.append((lhs, gate_ok))
        return out

    per_t = _map_ordered(evaluate, list(t_grid), workers)
    points = []
    for r_idx, (label, _, d_xy) in enumerate(regions):
        consts = constants[label]
        gq = consts.gamma_q(q)
        for t_idx, t in enumerate(t_grid):
            lhs, gate_ok = per_t[t_idx][r_idx]
            rhs, valid = theorem_rhs(gq, consts.lr.mu, consts.v_prime, d_xy, t)
            points.append(
                GridPoint(
                    q=q, mu=consts.lr.mu, region=label, d=d_xy, t=float(t),
                    lhs=lhs, rhs=rhs, valid=valid, gate_ok=gate_ok,
                )
            )
    return CertificationReport(
        kind="theorem1",
        points=points,
        constants=[{"q": q, "region": label, **constants[label].describe()} for label, _, _ in regions],
    )


def area_law_envelope(constants: BoundConstants, x0: int, t: float, c0: float) -> float:
    """Time-exponential entanglement ceiling c0 + gamma1 e^{-mu x0} e^{mu v |t|}.

    Valid for cuts at distance x >= x0 from the quench with x0 > v_mu |t|; the
    caller asserts an eigenstate initial condition so the unquenched branch is
    a constant bounded by c0.
    """
    lr = constants.lr
    if x0 <= lr.v_mu * abs(t):
        raise RegimeError(f"area-law envelope needs x0 > v_mu |t|, got x0 = {x0}, v_mu |t| = {lr.v_mu * abs(t):g}")
    return c0 + constants.gamma1 * _exp(-lr.mu * x0) * _exp(lr.mu * lr.v_mu * abs(t))


def certify_area_law(
    profile,
    constants: BoundConstants,
    x0: int,
    c0: Optional[float] = None,
) -> CertificationReport:
    """Check a quenched entanglement profile against the area-law envelope.

    `profile` is an EntropyProfile from a q = 1 scenario whose initial state is
    an eigenstate. c0 defaults to the largest unquenched entropy at x >= x0.
    """
    lr = constants.lr
    rows = [idx for idx, x in enumerate(profile.x_grid) if x >= x0]
    if not rows:
        raise ValueError(f"profile has no cuts at x >= {x0}")
    if c0 is None:
        c0 = float(max(profile.base[idx, col] for idx in rows for col in range(len(profile.t_grid))))
    points = []
    for idx in rows:
        x = profile.x_grid[idx]
        for col, t in enumerate(profile.t_grid):
            valid = x0 > lr.v_mu * abs(t)
            if valid:
                rhs = area_law_envelope(constants, x0, t, c0)
            else:
                rhs = math.inf
            points.append(
                GridPoint(
                    q=profile.q, mu=lr.mu, region=f"x>={x0}", d=int(x), t=float(t),
                    lhs=float(profile.quenched[idx, col]), rhs=rhs, valid=valid,
                )
            )
    return CertificationReport(
        kind="arealaw",
        points=points,
        constants=[{"q": profile.q, "c0": c0, "x0": x0, **constants.describe()}],
    )


@dataclass(frozen=True)
class EnsembleLetter:
    """One letter of a quench-encoded alphabet, applied on the quench region."""

    probability: float
    support: tuple[int, ...]
    matrix: np.ndarray
    kind: str  # unitary | perturbation


class QuenchEnsemble:
    """Alphabet of local quenches driving a channel from X to distant probes."""

    def __init__(
        self,
        graph: LatticeGraph,
        interaction: Interaction,
        psi0: np.ndarray,
        x_region: Iterable[int],
        letters: Sequence[EnsembleLetter],
        mu: float,
        decay,
    ):
        if not letters:
            raise ValueError("ensemble needs at least one letter")
        total = sum(letter.probability for letter in letters)
        if any(letter.probability < 0 for letter in letters) or abs(total - 1.0) > 1e-10:
            raise ValueError("letter probabilities must be non-negative and sum to 1")
        kinds = {letter.kind for letter in letters}
        if not kinds <= {"unitary", "perturbation"}:
            raise ValueError(f"unknown letter kind in {sorted(kinds)}")
        if len(kinds) > 1:
            raise ValueError("mixing unitary and perturbation letters is not supported")
        self.graph = graph
        self.interaction = interaction
        self.space = interaction.space
        self.psi0 = check_state(psi0, self.space)
        self.x_region = graph.check_subset(x_region)
        self.letters = tuple(letters)
        self.kind = next(iter(kinds))
        self.mu = float(mu)
        self.decay = decay
        for letter in letters:
            if not set(letter.support) <= self.x_region:
                raise ValueError("every letter must be supported inside the quench region X")
        self._hamiltonian = build_hamiltonian(interaction, self.space)
        self._base = Propagator(self._hamiltonian)
        self._letter_propagators: list[Propagator] = []
        self._letter_states: list[np.ndarray] = []
        for letter in letters:
            full = embed_operator(letter.matrix, letter.support, self.space)
            if letter.kind == "unitary":
                self._letter_states.append(full @ self.psi0)
                self._letter_propagators.append(self._base)
            else:
                self._letter_states.append(self.psi0)
                self._letter_propagators.append(Propagator(self._hamiltonian + full))

    @property
    def max_norm_w(self) -> float:
        if self.kind == "unitary":
            return 0.0
        return max(spectral_norm(letter.matrix) for letter in self.letters)

    def letter_reduced_states(self, y_sorted: Sequence[int], t: float) -> list[np.ndarray]:
        dims = self.space.site_dims
        out = []
        for prop, state in zip(self._letter_propagators, self._letter_states):
            out.append(partial_trace(prop.evolve(state, t), y_sorted, dims))
        return out


def holevo_capacity(ensemble: QuenchEnsemble, y_region: Iterable[int], t: float) -> float:
    """S(mixture) - sum p_i S(letter state) on the probe region, in bits."""
    y_set = ensemble.graph.check_subset(y_region)
    if not y_set:
        raise ValueError("probe region must be non-empty")
    y_sorted = sorted(y_set)
    reduced = ensemble.letter_reduced_states(y_sorted, t)
    probs = [letter.probability for letter in ensemble.letters]
    mixture = sum(p * rho for p, rho in zip(probs, reduced))
    mixed_entropy = von_neumann_entropy(mixture)
    return mixed_entropy - sum(p * von_neumann_entropy(rho) for p, rho in zip(probs, reduced))


def holevo_rhs(constants: BoundConstants, kind: str, d_xy: int, t: float) -> tuple[float, bool]:
    """Capacity ceiling 2 gamma_q e^{-(mu/2)(d - v'|t|)}.

    Each letter branch and the mixture sit within gamma_q of the unquenched
    entropy, so the capacity is at most twice that variation bound.
    """
    gamma = constants.gamma2 if kind == "unitary" else constants.gamma1
    rhs, valid = theorem_rhs(gamma, constants.lr.mu, constants.v_prime, d_xy, t)
    return 2.0 * rhs, valid


def certify_holevo(
    ensemble: QuenchEnsemble,
    y_region: Iterable[int],
    t_grid: Sequence[float],
    growth: GrowthConstants,
    workers: int = 1,
) -> CertificationReport:
    """Holevo capacity against the entropy-variation ceiling over a time grid."""
    graph = ensemble.graph
    y_set = graph.check_subset(y_region)
    d_xy = region_distance(graph, ensemble.x_region, y_set)
    if d_xy == 0:
        raise ValueError("probe region touches the quench region")
    lr = lr_constants(graph, ensemble.interaction, ensemble.decay, ensemble.mu)
    bx_phi = len(phi_boundary(graph, ensemble.interaction, ensemble.x_region))
    by_phi = len(phi_boundary(graph, ensemble.interaction, y_set))
    _, bdry_x = boundary_and_interior(graph, ensemble.x_region)
    c1, c2 = lemma1_constants(lr, ensemble.max_norm_w, bx_phi, by_phi)
    local_dim = ensemble.space.max_local_dim
    gamma1, gamma2, v_prime = theorem_constants(lr, growth, c1, c2, len(bdry_x), local_dim)
    constants = BoundConstants(
        lr=lr, c1=c1, c2=c2, gamma1=gamma1, gamma2=gamma2, v_prime=v_prime,
        growth=growth, boundary_x=len(bdry_x), phi_boundary_min=min(bx_phi, by_phi),
        local_dim=local_dim, norm_w=ensemble.max_norm_w,
    )
    q = 2 if ensemble.kind == "unitary" else 1
    label = region_label(y_set)

    capacities = _map_ordered(lambda t: holevo_capacity(ensemble, y_set, t), list(t_grid), workers)
    points = []
    for t, capacity in zip(t_grid, capacities):
        rhs, valid = holevo_rhs(constants, ensemble.kind, d_xy, t)
        points.append(
            GridPoint(q=q, mu=lr.mu, region=label, d=d_xy, t=float(t), lhs=capacity, rhs=rhs, valid=valid)
        )
    return CertificationReport(
        kind="holevo",
        points=points,
        constants=[{
            "q": q, "region": label, "letters": len(ensemble.letters),
            "capacity_cap_bits": math.log2(len(ensemble.letters)),
            **constants.describe(),
        }],
        metadata={"letter_kind": ensemble.kind},
    )
