"""Dense linear-algebra core: tensor-product spaces, Hamiltonians, evolution,
partial traces, trace norms, and entropy continuity bounds.

Index convention, used everywhere: vertex 0 is the most significant tensor
factor, so a basis index decomposes big-endian over the site dimensions. This
is the ordering produced by chained ``np.kron`` and by reshaping a state to
one axis per site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10
EIGENVALUE_CLAMP = 1e-12
EIGENVALUE_REJECT = -1e-8

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

PAULI = {"id": IDENTITY_2, "sx": SIGMA_X, "sy": SIGMA_Y, "sz": SIGMA_Z}


class InvalidStateError(ValueError):
    """Raised when a matrix fails the density-operator checks."""


@dataclass(frozen=True)
class ProductSpace:
    """Ordered local dimensions, one per vertex."""

    site_dims: tuple[int, ...]

    def __post_init__(self):
        if not self.site_dims or any(d < 1 for d in self.site_dims):
            raise ValueError("site dimensions must be positive")

    @classmethod
    def qubits(cls, n: int) -> "ProductSpace":
        return cls((2,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.site_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.site_dims)

    @property
    def max_local_dim(self) -> int:
        return max(self.site_dims)

    def dim_of(self, sites: Iterable[int]) -> int:
        return math.prod(self.site_dims[s] for s in sites)


@dataclass(frozen=True)
class Interaction:
    """Map from vertex subsets to Hermitian term matrices.

    Each term is a (support, matrix) pair; the matrix's tensor factors follow
    the order of the support tuple.
    """

    site_dims: tuple[int, ...]
    terms: tuple[tuple[tuple[int, ...], np.ndarray], ...]

    @classmethod
    def build(cls, site_dims: Sequence[int], terms: Iterable[tuple[Sequence[int], np.ndarray]]) -> "Interaction":
        site_dims = tuple(site_dims)
        normalized = []
        for support, matrix in terms:
            support = tuple(int(s) for s in support)
            if len(set(support)) != len(support):
                raise ValueError(f"term support {support} repeats a site")
            for s in support:
                if not (0 <= s < len(site_dims)):
                    raise ValueError(f"term site {s} is outside the system")
            matrix = np.asarray(matrix, dtype=complex)
            expected = math.prod(site_dims[s] for s in support)
            if matrix.shape != (expected, expected):
                raise ValueError(
                    f"term on {support} has shape {matrix.shape}, expected ({expected}, {expected})"
                )
            if np.abs(matrix - matrix.conj().T).max() > HERMITICITY_TOL:
                raise ValueError(f"term on {support} is not Hermitian")
            matrix = matrix.copy()
            matrix.setflags(write=False)
            normalized.append((support, matrix))
        return cls(site_dims, tuple(normalized))

    @property
    def space(self) -> ProductSpace:
        return ProductSpace(self.site_dims)

    def term_norms(self) -> list[float]:
        """Spectral norm of every term matrix."""
        return [spectral_norm(matrix) for _, matrix in self.terms]


def spectral_norm(matrix: np.ndarray) -> float:
    """Operator 2-norm; uses the Hermitian eigensolver when applicable."""
    matrix = np.asarray(matrix, dtype=complex)
    if np.abs(matrix - matrix.conj().T).max() <= HERMITICITY_TOL:
        return float(np.abs(np.linalg.eigvalsh(matrix)).max())
    return float(np.linalg.svd(matrix, compute_uv=False)[0])


def check_state(psi: np.ndarray, space: ProductSpace | None = None, tol: float = 1e-10) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if space is not None and psi.size != space.total_dim:
        raise ValueError(f"state has dimension {psi.size}, space wants {space.total_dim}")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise InvalidStateError(f"state norm {np.linalg.norm(psi):.12g} deviates from 1")
    return psi


def check_density_matrix(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidStateError(f"density matrix trace {np.trace(rho).real:.12g} deviates from 1")
    return rho


def basis_index(site_dims: Sequence[int], occupations: Sequence[int]) -> int:
    """Big-endian index of a product basis state (vertex 0 most significant)."""
    idx = 0
    for d, occ in zip(site_dims, occupations):
        if not (0 <= occ < d):
            raise ValueError(f"occupation {occ} outside local dimension {d}")
        idx = idx * d + occ
    return idx


def product_basis_state(space: ProductSpace, occupations: Sequence[int]) -> np.ndarray:
    psi = np.zeros(space.total_dim, dtype=complex)
    psi[basis_index(space.site_dims, occupations)] = 1.0
    return psi


def embed_operator(matrix: np.ndarray, support: Sequence[int], space: ProductSpace) -> np.ndarray:
    """Tensor a local operator with identities, permuted to vertex-id order."""
    support = tuple(int(s) for s in support)
    matrix = np.asarray(matrix, dtype=complex)
    d_sup = space.dim_of(support)
    if matrix.shape != (d_sup, d_sup):
        raise ValueError(f"operator shape {matrix.shape} does not match support dims ({d_sup}, {d_sup})")
    rest = [i for i in range(space.n_sites) if i not in support]
    full = np.kron(matrix, np.eye(space.dim_of(rest), dtype=complex))
    order = list(support) + rest
    axis_dims = [space.site_dims[v] for v in order]
    tensor = full.reshape(axis_dims + axis_dims)
    perm = list(np.argsort(order))
    n = space.n_sites
    tensor = tensor.transpose(perm + [n + p for p in perm])
    return np.ascontiguousarray(tensor.reshape(space.total_dim, space.total_dim))


def build_hamiltonian(interaction: Interaction, space: ProductSpace) -> np.ndarray:
    """Sum of all interaction terms embedded in the full space."""
    if interaction.site_dims != space.site_dims:
        raise ValueError("interaction and space disagree on local dimensions")
    h = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for support, matrix in interaction.terms:
        h += embed_operator(matrix, support, space)
    return h


class Propagator:
    """Cached Hermitian eigendecomposition driving exact time evolution.

    One O(dim^3) factorization serves every requested time; states evolve by
    two matrix-vector products and operators by two matrix products.
    """

    def __init__(self, hamiltonian: np.ndarray):
        hamiltonian = np.asarray(hamiltonian, dtype=complex)
        if np.abs(hamiltonian - hamiltonian.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("propagator needs a Hermitian matrix")
        self.energies, self.basis = np.linalg.eigh(hamiltonian)
        self.dim = hamiltonian.shape[0]

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        if psi.size != self.dim:
            raise ValueError(f"state dimension {psi.size} does not match propagator dimension {self.dim}")
        phases = np.exp(-1j * self.energies * t)
        return self.basis @ (phases * (self.basis.conj().T @ psi))

    def heisenberg(self, operator: np.ndarray, t: float) -> np.ndarray:
        """A(t) = exp(iHt) A exp(-iHt)."""
        operator = np.asarray(operator, dtype=complex)
        if operator.shape != (self.dim, self.dim):
            raise ValueError("operator dimension does not match propagator dimension")
        in_eig = self.basis.conj().T @ operator @ self.basis
        phases = np.exp(1j * self.energies * t)
        rotated = (phases[:, None] * in_eig) * phases.conj()[None, :]
        return self.basis @ rotated @ self.basis.conj().T

    def ground_state(self) -> np.ndarray:
        return np.ascontiguousarray(self.basis[:, 0])


def evolve(hamiltonian: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    """One-shot evolution; prefer a shared Propagator over a time grid."""
    return Propagator(hamiltonian).evolve(psi, t)


def partial_trace(state: np.ndarray, keep: Iterable[int], site_dims: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on `keep` (sorted), from a state vector or matrix."""
    site_dims = tuple(site_dims)
    n = len(site_dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("partial trace needs a non-empty keep set")
    for k in keep:
        if not (0 <= k < n):
            raise ValueError(f"keep site {k} is outside the system")
    rest = [i for i in range(n) if i not in keep]
    d_keep = math.prod(site_dims[k] for k in keep)
    d_rest = math.prod(site_dims[r] for r in rest)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        m = state.reshape(site_dims).transpose(keep + rest).reshape(d_keep, d_rest)
        return m @ m.conj().T
    if state.ndim == 2:
        perm = keep + rest
        tensor = state.reshape(site_dims + site_dims)
        tensor = tensor.transpose(perm + [n + p for p in perm])
        tensor = tensor.reshape(d_keep, d_rest, d_keep, d_rest)
        return np.einsum("arbr->ab", tensor)
    raise ValueError("state must be a vector or a square matrix")


def trace_norm(matrix: np.ndarray) -> float:
    """Sum of singular values; absolute eigenvalue sum for Hermitian input."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("trace norm is defined for square matrices")
    if np.abs(matrix - matrix.conj().T).max() <= HERMITICITY_TOL:
        return float(np.abs(np.linalg.eigvalsh(matrix)).sum())
    return float(np.linalg.svd(matrix, compute_uv=False).sum())


def _entropy_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    low = eigenvalues.min()
    if low < EIGENVALUE_REJECT:
        raise InvalidStateError(f"density matrix has eigenvalue {low:.3e} below {EIGENVALUE_REJECT}")
    lam = eigenvalues[eigenvalues > EIGENVALUE_CLAMP]
    return float(-(lam * np.log2(lam)).sum())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits; eigenvalues at or below the clamp contribute zero."""
    rho = np.asarray(rho, dtype=complex)
    return _entropy_from_eigenvalues(np.linalg.eigvalsh(rho))


def conditional_entropy(
    rho: np.ndarray,
    site_dims: Sequence[int],
    x_part: Iterable[int],
    y_part: Iterable[int],
) -> float:
    """S(XY) - S(Y) in bits for a bipartition of rho's sites; may be negative."""
    site_dims = tuple(site_dims)
    x_part = sorted(set(x_part))
    y_part = sorted(set(y_part))
    if sorted(x_part + y_part) != list(range(len(site_dims))):
        raise ValueError("partition must cover the state's sites disjointly")
    rho_y = partial_trace(rho, y_part, site_dims)
    return von_neumann_entropy(rho) - von_neumann_entropy(rho_y)


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2(1-x) with h(0) = h(1) = 0."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    total = 0.0
    if x > 0.0:
        total -= x * math.log2(x)
    if x < 1.0:
        total -= (1.0 - x) * math.log2(1.0 - x)
    return total


def audenaert_rhs(trace_distance: float, dim: int) -> float:
    """Entropy-continuity bound (T/2) log2(dim - 1) + h(T/2)."""
    if not (0.0 <= trace_distance <= 2.0 + 1e-12):
        raise ValueError(f"trace distance {trace_distance} outside [0, 2]")
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    half = min(trace_distance / 2.0, 1.0)
    return half * math.log2(dim - 1) + binary_entropy(half)


class ValidityError(ValueError):
    """Raised when a bound is evaluated outside its stated regime."""


def alicki_rhs(trace_distance: float, dim_x: int) -> float:
    """Conditional-entropy continuity bound 4T log2(dim_x) + 2h(T), gated at T < 1."""
    if trace_distance < 0.0:
        raise ValueError(f"trace distance {trace_distance} is negative")
    if dim_x < 2:
        raise ValueError("dimension must be >= 2")
    if trace_distance >= 1.0:
        raise ValidityError(f"conditional-entropy continuity needs trace distance < 1, got {trace_distance}")
    return 4.0 * trace_distance * math.log2(dim_x) + 2.0 * binary_entropy(trace_distance)


def telescoping_entropy(
    rho_y: np.ndarray,
    site_dims: Sequence[int],
    shells: Sequence[Iterable[int]],
) -> tuple[float, list[float]]:
    """Entropy of rho_y as a telescoping sum of shell conditional entropies.

    `shells` lists site positions (within rho_y's own space) per shell, innermost
    first; they must partition the sites. Returns (S(rho_y), parts) where parts
    holds the N conditional entropies followed by the outermost marginal entropy,
    summing to the total.
    """
    site_dims = tuple(site_dims)
    shells = [sorted(set(int(s) for s in shell)) for shell in shells]
    flat = [s for shell in shells for s in shell]
    if sorted(flat) != list(range(len(site_dims))) or len(flat) != len(set(flat)):
        raise ValueError("shells must partition the sites of rho_y")
    tail_entropies = []
    tail: list[int] = []
    for shell in reversed(shells):
        tail = sorted(tail + shell)
        if len(tail) == len(site_dims):
            tail_entropies.append(von_neumann_entropy(rho_y))
        else:
            tail_entropies.append(von_neumann_entropy(partial_trace(rho_y, tail, site_dims)))
    tail_entropies.reverse()
    total = tail_entropies[0]
    parts = [tail_entropies[l] - tail_entropies[l + 1] for l in range(len(shells) - 1)]
    parts.append(tail_entropies[-1])
    if abs(sum(parts) - total) > 1e-9:
        raise ArithmeticError("telescoping identity failed beyond tolerance")
    return total, parts
