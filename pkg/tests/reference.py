"""Independent reference implementations used as test oracles.

Everything here deliberately avoids the production code paths: Hamiltonians
are assembled element by element from basis-index digits, evolution goes
through scipy's Pade expm instead of an eigendecomposition, partial traces run
explicit index loops, and entropies come from singular values.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg


def digits(index: int, dims) -> tuple[int, ...]:
    out = []
    for d in reversed(dims):
        out.append(index % d)
        index //= d
    return tuple(reversed(out))


def hamiltonian_elementwise(site_dims, terms) -> np.ndarray:
    """H[a, b] from matching digit patterns, one term at a time."""
    total = math.prod(site_dims)
    h = np.zeros((total, total), dtype=complex)
    for support, matrix in terms:
        support = list(support)
        sup_dims = [site_dims[s] for s in support]
        rest = [i for i in range(len(site_dims)) if i not in support]
        for a in range(total):
            da = digits(a, site_dims)
            for b in range(total):
                db = digits(b, site_dims)
                if any(da[r] != db[r] for r in rest):
                    continue
                row = 0
                col = 0
                for s, d in zip(support, sup_dims):
                    row = row * d + da[s]
                    col = col * d + db[s]
                h[a, b] += matrix[row, col]
    return h


def expm_evolve(hamiltonian: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * hamiltonian * t) @ psi


def partial_trace_loops(state: np.ndarray, keep, site_dims) -> np.ndarray:
    """Reduced density matrix by explicit summation over traced-out digits."""
    keep = sorted(keep)
    rest = [i for i in range(len(site_dims)) if i not in keep]
    keep_dims = [site_dims[k] for k in keep]
    rest_dims = [site_dims[r] for r in rest]
    d_keep = math.prod(keep_dims) if keep_dims else 1
    state = np.asarray(state, dtype=complex)
    rho_full = np.outer(state, state.conj()) if state.ndim == 1 else state

    def full_index(keep_digits, rest_digits):
        occ = [0] * len(site_dims)
        for pos, value in zip(keep, keep_digits):
            occ[pos] = value
        for pos, value in zip(rest, rest_digits):
            occ[pos] = value
        idx = 0
        for d, value in zip(site_dims, occ):
            idx = idx * d + value
        return idx

    rest_space = list(np.ndindex(*rest_dims)) if rest_dims else [()]
    out = np.zeros((d_keep, d_keep), dtype=complex)
    for r_idx, row_digits in enumerate(np.ndindex(*keep_dims)):
        for c_idx, col_digits in enumerate(np.ndindex(*keep_dims)):
            total = 0.0 + 0.0j
            for rest_digits in rest_space:
                total += rho_full[full_index(row_digits, rest_digits), full_index(col_digits, rest_digits)]
            out[r_idx, c_idx] = total
    return out


def entropy_svd(rho: np.ndarray) -> float:
    """Entropy in bits from singular values (= eigenvalues for PSD input)."""
    s = np.linalg.svd(rho, compute_uv=False)
    s = s[s > 1e-12]
    return float(-(s * np.log2(s)).sum())


def floyd_warshall(n_vertices: int, edges) -> np.ndarray:
    dist = np.full((n_vertices, n_vertices), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v in edges:
        dist[u, v] = dist[v, u] = 1.0
    for k in range(n_vertices):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    return dist


def random_connected_graph(rng: np.random.Generator, n_vertices: int, extra_edge_prob: float = 0.15):
    """Uniform random spanning tree attachment plus Bernoulli extra edges."""
    edges = set()
    for v in range(1, n_vertices):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    for u in range(n_vertices):
        for v in range(u + 1, n_vertices):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges.add((u, v))
    return sorted(edges)


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
