"""Finite graph metric spaces and the set geometry built on them.

Vertices are dense integers 0..n-1. Distances are hop counts computed by
breadth-first search from every vertex and stored as a dense integer matrix,
so every lookup is O(1) and exact. All set-valued operations iterate vertices
in sorted order, which keeps downstream reports deterministic.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class DisconnectedGraphError(ValueError):
    """Raised when a graph has an unreachable vertex pair."""


class GrowthBoundError(ValueError):
    """Raised when |R_l(i)| <= b*exp(alpha*l) fails on the instance."""


def _bfs_levels(adjacency: Sequence[Sequence[int]], source: int) -> np.ndarray:
    n = len(adjacency)
    level = np.full(n, -1, dtype=np.int64)
    level[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    return level


@dataclass(frozen=True)
class LatticeGraph:
    """Connected graph with a precomputed hop-distance matrix."""

    n_vertices: int
    edges: frozenset[tuple[int, int]]
    dist: np.ndarray

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]]) -> "LatticeGraph":
        if n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        normalized = set()
        adjacency: list[list[int]] = [[] for _ in range(n_vertices)]
        for u, v in edges:
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"edge ({u}, {v}) references a vertex outside 0..{n_vertices - 1}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key not in normalized:
                normalized.add(key)
                adjacency[u].append(v)
                adjacency[v].append(u)
        dist = np.empty((n_vertices, n_vertices), dtype=np.int64)
        for i in range(n_vertices):
            level = _bfs_levels(adjacency, i)
            if (level < 0).any():
                j = int(np.argmax(level < 0))
                raise DisconnectedGraphError(f"vertices {i} and {j} are not connected")
            dist[i] = level
        dist.setflags(write=False)
        return cls(n_vertices, frozenset(normalized), dist)

    @classmethod
    def from_edge_list_text(cls, text: str) -> "LatticeGraph":
        """Parse a `u v` pair per line; vertex count is 1 + max id seen."""
        edges = []
        max_id = 0
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'u v', got {raw!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: non-integer vertex id in {raw!r}") from exc
            if u < 0 or v < 0:
                raise ValueError(f"line {lineno}: negative vertex id in {raw!r}")
            edges.append((u, v))
            max_id = max(max_id, u, v)
        if not edges:
            raise ValueError("edge list is empty")
        return cls.from_edges(max_id + 1, edges)

    @classmethod
    def chain(cls, length: int) -> "LatticeGraph":
        if length < 1:
            raise ValueError("chain length must be >= 1")
        return cls.from_edges(length, [(i, i + 1) for i in range(length - 1)])

    @classmethod
    def grid(cls, ndim: int, side: int) -> "LatticeGraph":
        """Hypercubic grid with `side` vertices along each of `ndim` axes."""
        if ndim < 1 or side < 1:
            raise ValueError("grid needs ndim >= 1 and side >= 1")
        n = side**ndim
        strides = [side**k for k in range(ndim)]
        edges = []
        for idx in range(n):
            coords = [(idx // strides[k]) % side for k in range(ndim)]
            for k in range(ndim):
                if coords[k] + 1 < side:
                    edges.append((idx, idx + strides[k]))
        return cls.from_edges(n, edges)

    @classmethod
    def tree(cls, branches: int, depth: int) -> "LatticeGraph":
        """Rooted tree: the root and every internal vertex have `branches` children."""
        if branches < 1 or depth < 0:
            raise ValueError("tree needs branches >= 1 and depth >= 0")
        edges = []
        next_id = 1
        frontier = [0]
        for _ in range(depth):
            new_frontier = []
            for parent in frontier:
                for _ in range(branches):
                    edges.append((parent, next_id))
                    new_frontier.append(next_id)
                    next_id += 1
            frontier = new_frontier
        return cls.from_edges(next_id, edges)

    @classmethod
    def from_generator(cls, spec: str) -> "LatticeGraph":
        """Build from a `name:size` string: chain:L, grid:n:L, or tree:n:depth."""
        parts = spec.split(":")
        try:
            if parts[0] == "chain" and len(parts) == 2:
                return cls.chain(int(parts[1]))
            if parts[0] == "grid" and len(parts) == 3:
                return cls.grid(int(parts[1]), int(parts[2]))
            if parts[0] == "tree" and len(parts) == 3:
                return cls.tree(int(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise ValueError(f"bad generator spec {spec!r}: {exc}") from exc
        raise ValueError(f"unknown generator spec {spec!r} (expected chain:L, grid:n:L, or tree:n:depth)")

    @property
    def vertices(self) -> range:
        return range(self.n_vertices)

    @property
    def diameter(self) -> int:
        return int(self.dist.max())

    def neighbors(self, i: int) -> list[int]:
        return [j for j in self.vertices if self.dist[i, j] == 1]

    def check_subset(self, members: Iterable[int]) -> frozenset[int]:
        members = frozenset(members)
        for i in members:
            if not (0 <= i < self.n_vertices):
                raise ValueError(f"vertex {i} is outside the graph (0..{self.n_vertices - 1})")
        return members


def distance_matrix(graph: LatticeGraph) -> np.ndarray:
    """Hop-distance matrix; entry (i, j) is the minimal edge count of an i-j path."""
    return graph.dist


def sphere(graph: LatticeGraph, i: int, radius: int) -> frozenset[int]:
    """R_l(i): vertices at hop distance exactly `radius` from i."""
    graph.check_subset([i])
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return frozenset(int(j) for j in np.flatnonzero(graph.dist[i] == radius))


def sphere_sizes(graph: LatticeGraph) -> np.ndarray:
    """Matrix of |R_l(i)|, shape (n_vertices, diameter + 1)."""
    n = graph.n_vertices
    sizes = np.zeros((n, graph.diameter + 1), dtype=np.int64)
    for i in range(n):
        counts = np.bincount(graph.dist[i], minlength=graph.diameter + 1)
        sizes[i] = counts
    return sizes


def set_distance(graph: LatticeGraph, members: Iterable[int], j: int) -> int:
    """d(j, X) = min over x in X of d(j, x)."""
    members = graph.check_subset(members)
    if not members:
        raise ValueError("distance to an empty set is undefined")
    return int(graph.dist[sorted(members), j].min())


def region_distance(graph: LatticeGraph, x_set: Iterable[int], y_set: Iterable[int]) -> int:
    """d(X, Y) = min over pairs."""
    x_set = graph.check_subset(x_set)
    y_set = graph.check_subset(y_set)
    if not x_set or not y_set:
        raise ValueError("region distance needs two non-empty sets")
    sub = graph.dist[np.ix_(sorted(x_set), sorted(y_set))]
    return int(sub.min())


def shell_set(graph: LatticeGraph, x_set: Iterable[int], level: int) -> frozenset[int]:
    """X_l: vertices whose distance to the set X is exactly `level`; X_0 = X."""
    x_set = graph.check_subset(x_set)
    if not x_set:
        raise ValueError("shell of an empty set is undefined")
    if level < 0:
        raise ValueError("level must be >= 0")
    d_to_x = graph.dist[sorted(x_set)].min(axis=0)
    return frozenset(int(j) for j in np.flatnonzero(d_to_x == level))


def boundary_and_interior(graph: LatticeGraph, x_set: Iterable[int]) -> tuple[frozenset[int], frozenset[int]]:
    """(Int(X), boundary): interior keeps all unit-sphere neighbors inside X."""
    x_set = graph.check_subset(x_set)
    if not x_set:
        raise ValueError("boundary of an empty set is undefined")
    interior = frozenset(i for i in sorted(x_set) if sphere(graph, i, 1) <= x_set)
    return interior, x_set - interior


def phi_boundary(graph: LatticeGraph, interaction, x_set: Iterable[int]) -> frozenset[int]:
    """Sites of X touched by a non-zero interaction term crossing into the complement."""
    x_set = graph.check_subset(x_set)
    out = set()
    for support, matrix in interaction.terms:
        support = frozenset(support)
        if not support <= frozenset(graph.vertices):
            raise ValueError(f"term support {sorted(support)} is outside the graph")
        if not np.any(matrix):
            continue
        if support - x_set:
            out.update(support & x_set)
    return frozenset(out)


def enlargement(graph: LatticeGraph, x_set: Iterable[int], radius: int) -> frozenset[int]:
    """Union of the shells X_0..X_radius: every vertex within `radius` of X."""
    x_set = graph.check_subset(x_set)
    if not x_set:
        raise ValueError("enlargement of an empty set is undefined")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    d_to_x = graph.dist[sorted(x_set)].min(axis=0)
    return frozenset(int(j) for j in np.flatnonzero(d_to_x <= radius))


@dataclass(frozen=True)
class ShellDecomposition:
    """Probe region Y stratified by distance to X.

    shells[l] = Y intersected with the set at distance base_distance + l from X;
    tails[l] is the union of shells l..N. tails[0] is Y itself.
    """

    base_distance: int
    shells: tuple[frozenset[int], ...]
    tails: tuple[frozenset[int], ...]

    @property
    def depth(self) -> int:
        return len(self.shells) - 1


def shell_decomposition(graph: LatticeGraph, x_set: Iterable[int], y_set: Iterable[int]) -> ShellDecomposition:
    x_set = graph.check_subset(x_set)
    y_set = graph.check_subset(y_set)
    d_xy = region_distance(graph, x_set, y_set)
    if d_xy == 0:
        raise ValueError("shell decomposition needs d(X, Y) > 0")
    d_to_x = graph.dist[sorted(x_set)].min(axis=0)
    by_level: dict[int, set[int]] = {}
    for j in sorted(y_set):
        by_level.setdefault(int(d_to_x[j]) - d_xy, set()).add(j)
    depth = max(by_level)
    shells = tuple(frozenset(by_level.get(l, set())) for l in range(depth + 1))
    tails = []
    running: frozenset[int] = frozenset()
    for shell in reversed(shells):
        running = running | shell
        tails.append(running)
    return ShellDecomposition(d_xy, shells, tuple(reversed(tails)))


def verify_shell_cover(graph: LatticeGraph, x_set: Iterable[int], level: int) -> tuple[bool, Optional[int]]:
    """Check X_l is covered by spheres of radius l around the boundary of X.

    Returns (True, None) or (False, witness_vertex). The inclusion is a proved
    property of graph metrics, so a witness indicates an implementation bug.
    """
    x_set = graph.check_subset(x_set)
    if level <= 0:
        raise ValueError("cover check needs level > 0")
    _, bdry = boundary_and_interior(graph, x_set)
    target = shell_set(graph, x_set, level)
    cover: set[int] = set()
    for i in sorted(bdry):
        cover |= sphere(graph, i, level)
    for j in sorted(target):
        if j not in cover:
            return False, j
    return True, None


@dataclass(frozen=True)
class GrowthConstants:
    """Constants (b, alpha) with |R_l(i)| <= b * exp(alpha * l) on the instance."""

    b: float
    alpha: float
    family: str
    a: Optional[float] = None
    n: Optional[int] = None


def _verify_growth(graph: LatticeGraph, b: float, alpha: float) -> None:
    sizes = sphere_sizes(graph)
    radii = np.arange(sizes.shape[1], dtype=float)
    bound = b * np.exp(alpha * radii)
    bad = sizes > bound + 1e-9
    if bad.any():
        i, l = np.argwhere(bad)[0]
        raise GrowthBoundError(
            f"|R_{l}({i})| = {sizes[i, l]} exceeds b*exp(alpha*l) = {bound[l]:.6g} "
            f"(b={b:.6g}, alpha={alpha:.6g})"
        )


def fit_growth_constants(
    graph: LatticeGraph,
    family: str,
    alpha: Optional[float] = None,
    n: Optional[int] = None,
    a: Optional[float] = None,
) -> GrowthConstants:
    """Sphere-growth constants for a lattice family, verified exhaustively.

    chain   -> b=2, alpha=0
    tree-n  -> b=2, alpha=ln(n) for n branches
    grid-n  -> b = a*(n-1)!/alpha**(n-1) at the caller's alpha > 0; `a` is the
               fractal coefficient |R_l(i)| <= a*l**(n-1), fitted from the
               instance when not supplied
    generic -> smallest b with |R_l(i)| <= b*exp(alpha*l) at the caller's alpha
    """
    if family == "chain":
        constants = GrowthConstants(b=2.0, alpha=0.0, family=family)
    elif family == "tree-n":
        if n is None or n < 1:
            raise ValueError("family tree-n needs a branch count n >= 1")
        constants = GrowthConstants(b=2.0, alpha=math.log(n), family=family, n=n)
    elif family == "grid-n":
        if n is None or n < 1:
            raise ValueError("family grid-n needs a fractal dimension n >= 1")
        if alpha is None or alpha <= 0:
            raise ValueError("family grid-n needs alpha > 0")
        if a is None:
            sizes = sphere_sizes(graph)
            a = 1.0
            for l in range(1, sizes.shape[1]):
                a = max(a, float(sizes[:, l].max()) / l ** (n - 1))
        b = float(a) * math.factorial(n - 1) / alpha ** (n - 1)
        constants = GrowthConstants(b=b, alpha=alpha, family=family, a=a, n=n)
    elif family == "generic":
        if alpha is None or alpha < 0:
            raise ValueError("family generic needs alpha >= 0")
        sizes = sphere_sizes(graph)
        radii = np.arange(sizes.shape[1], dtype=float)
        b = float((sizes * np.exp(-alpha * radii)[None, :]).max())
        constants = GrowthConstants(b=b, alpha=alpha, family=family)
    else:
        raise ValueError(f"unknown growth family {family!r}")
    _verify_growth(graph, constants.b, constants.alpha)
    return constants
