"""Adjacency matrices, the edge-flip noise model and exact subgraph counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroTwoStars


class AdjacencyMatrix:
    """Symmetric 0/1 matrix with zero diagonal, read-only once built.

    Stored densely as ``uint8``; ``values`` is a non-writeable view.
    """

    __slots__ = ("_a",)

    def __init__(self, entries, *, check: bool = True):
        a = np.array(entries, dtype=np.uint8, copy=True)
        if check:
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise DimensionMismatch(f"adjacency matrix must be square, got shape {a.shape}")
            if a.shape[0] < 2:
                raise ValueError("need at least 2 vertices")
            if np.any(a > 1):
                raise ValueError("entries must be 0 or 1")
            if np.any(np.diag(a)):
                raise ValueError("diagonal must be zero (no self-loops)")
            if not np.array_equal(a, a.T):
                raise ValueError("matrix must be symmetric")
        a.setflags(write=False)
        self._a = a

    @classmethod
    def empty(cls, p: int) -> "AdjacencyMatrix":
        return cls(np.zeros((p, p), dtype=np.uint8), check=False)

    @classmethod
    def complete(cls, p: int) -> "AdjacencyMatrix":
        a = np.ones((p, p), dtype=np.uint8)
        np.fill_diagonal(a, 0)
        return cls(a, check=False)

    @classmethod
    def from_edges(cls, p: int, edges) -> "AdjacencyMatrix":
        a = np.zeros((p, p), dtype=np.uint8)
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            a[u, v] = a[v, u] = 1
        return cls(a, check=False)

    @classmethod
    def from_upper(cls, p: int, upper) -> "AdjacencyMatrix":
        """Build from the flattened strict upper triangle (row-major, i<j)."""
        a = np.zeros((p, p), dtype=np.uint8)
        iu = np.triu_indices(p, 1)
        a[iu] = upper
        a = a + a.T
        return cls(a, check=False)

    @property
    def values(self) -> np.ndarray:
        return self._a

    @property
    def p(self) -> int:
        return self._a.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.p * (self.p - 1) // 2

    def upper(self) -> np.ndarray:
        return self._a[np.triu_indices(self.p, 1)]

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self._a, 1))
        return list(zip(i.tolist(), j.tolist()))

    def edge_count(self) -> int:
        return int(self._a.sum()) // 2

    def degrees(self) -> np.ndarray:
        return self._a.sum(axis=1, dtype=np.int64)

    def complement(self) -> "AdjacencyMatrix":
        c = 1 - self._a
        np.fill_diagonal(c, 0)
        return AdjacencyMatrix(c, check=False)

    def permute(self, perm) -> "AdjacencyMatrix":
        perm = np.asarray(perm)
        return AdjacencyMatrix(self._a[np.ix_(perm, perm)], check=False)

    def __eq__(self, other):
        if not isinstance(other, AdjacencyMatrix):
            return NotImplemented
        return np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash((self.p, self._a.tobytes()))

    def __repr__(self):
        return f"AdjacencyMatrix(p={self.p}, edges={self.edge_count()})"


def as_matrix(graph) -> np.ndarray:
    if isinstance(graph, AdjacencyMatrix):
        return graph.values
    return np.asarray(graph)


@dataclass(frozen=True)
class NoiseModel:
    """Edge-flip rates: alpha = P(observe edge | no edge), beta = P(miss edge | edge)."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def identifiable(self) -> bool:
        return self.alpha + self.beta < 1.0

    def edge_probability(self, a_ij):
        """P(Y_ij = 1) given the true entry(ies)."""
        a_ij = np.asarray(a_ij, dtype=float)
        return a_ij * (1.0 - self.beta) + (1.0 - a_ij) * self.alpha


@dataclass(frozen=True)
class GraphTargets:
    p: int
    edge_count: int
    two_star_count: int
    triangle_count: int

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("p must be at least 2")
        if not 0 <= self.edge_count <= self.p * (self.p - 1) // 2:
            raise ValueError(f"edge_count {self.edge_count} out of range for p={self.p}")
        if self.triangle_count < 0:
            raise ValueError("triangle_count must be non-negative")
        if self.two_star_count < 3 * self.triangle_count:
            raise ValueError("every triangle holds three two-stars: need two_star_count >= 3*triangle_count")

    @classmethod
    def from_density(cls, p: int, delta: float, two_star_count: int, triangle_count: int) -> "GraphTargets":
        # guard against 0.2*30*29/2 -> 86.999...
        edges = math.floor(delta * p * (p - 1) / 2 + 1e-9)
        return cls(p, edges, two_star_count, triangle_count)

    @property
    def clustering(self) -> float:
        return 3 * self.triangle_count / self.two_star_count


def edge_density(graph) -> float:
    a = as_matrix(graph)
    p = a.shape[0]
    return float(np.triu(a, 1).sum()) * 2.0 / (p * (p - 1))


def count_two_stars(graph) -> int:
    d = as_matrix(graph).sum(axis=1, dtype=np.int64)
    return int((d * (d - 1) // 2).sum())


def count_triangles(graph) -> int:
    a = as_matrix(graph).astype(np.int64)
    # trace(A^3)/6 in exact integer arithmetic
    return int(np.einsum("ij,ji->", a @ a, a)) // 6


def clustering_coefficient(graph) -> float:
    n2 = count_two_stars(graph)
    if n2 == 0:
        raise ZeroTwoStars("graph has no two-stars; clustering coefficient undefined")
    return 3.0 * count_triangles(graph) / n2


def sample_noisy(graph: AdjacencyMatrix, noise: NoiseModel, rng_seed) -> AdjacencyMatrix:
    """Draw one observed network Y from the truth under independent edge flips."""
    rng = np.random.default_rng(rng_seed)
    a_up = graph.upper()
    u = rng.random(a_up.shape[0])
    y_up = np.where(a_up == 1, u >= noise.beta, u < noise.alpha).astype(np.uint8)
    return AdjacencyMatrix.from_upper(graph.p, y_up)


def sample_replicates(graph: AdjacencyMatrix, noise: NoiseModel, rng_seed, n: int) -> list[AdjacencyMatrix]:
    seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    seeds = seq.spawn(n)
    return [sample_noisy(graph, noise, s) for s in seeds]


def dual_model(graph: AdjacencyMatrix, noise: NoiseModel) -> tuple[AdjacencyMatrix, NoiseModel]:
    """Complement graph with swapped, reflected rates; indistinguishable from one Y."""
    return graph.complement(), NoiseModel(1.0 - noise.beta, 1.0 - noise.alpha)
