"""Ground-truth graphs with prescribed edge, two-star and triangle counts.

Stochastic local search over single-edge relocations: delete one present
edge, insert one absent pair.  The edge count is invariant; degrees (and so
the two-star count) are free to move, which degree-preserving double swaps
cannot do.  Moves are scored on the lexicographic distance
``(|N2* - target|, |Ntri - target|)`` with annealed escapes.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .errors import TargetNotReached
from .graph import AdjacencyMatrix, GraphTargets, count_triangles, count_two_stars

DEFAULT_MAX_ITERS = 5_000_000
T0 = 5.0
COOLING = 0.995
# proposals without a new best before the temperature is reset to T0
REHEAT_AFTER = 20_000


class _State:
    """Mutable bitset graph with incrementally maintained counts."""

    def __init__(self, p: int, edges: list[tuple[int, int]]):
        self.p = p
        self.adj = [0] * p
        self.deg = [0] * p
        self.edges = []
        self.pos = {}
        self.n2 = 0
        self.ntri = 0
        for u, v in edges:
            self.add(u, v)

    def common(self, u: int, v: int) -> int:
        return (self.adj[u] & self.adj[v]).bit_count()

    def add(self, u: int, v: int) -> None:
        if u > v:
            u, v = v, u
        self.ntri += self.common(u, v)
        self.n2 += self.deg[u] + self.deg[v]
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u
        self.deg[u] += 1
        self.deg[v] += 1
        self.pos[(u, v)] = len(self.edges)
        self.edges.append((u, v))

    def remove(self, u: int, v: int) -> None:
        if u > v:
            u, v = v, u
        self.adj[u] &= ~(1 << v)
        self.adj[v] &= ~(1 << u)
        self.deg[u] -= 1
        self.deg[v] -= 1
        self.n2 -= self.deg[u] + self.deg[v]
        self.ntri -= self.common(u, v)
        i = self.pos.pop((u, v))
        last = self.edges.pop()
        if i < len(self.edges):
            self.edges[i] = last
            self.pos[last] = i

    def has(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def to_matrix(self) -> AdjacencyMatrix:
        return AdjacencyMatrix.from_edges(self.p, self.edges)


def _distance(state: _State, targets: GraphTargets) -> tuple[int, int]:
    return abs(state.n2 - targets.two_star_count), abs(state.ntri - targets.triangle_count)


def generate_constrained(targets: GraphTargets, rng_seed=0, max_iters: int = DEFAULT_MAX_ITERS) -> AdjacencyMatrix:
    """Random graph hitting ``targets`` exactly, or raise :class:`TargetNotReached`.

    Deterministic given ``rng_seed``.  ``TargetNotReached.best_distance`` is the
    closest ``(two-star, triangle)`` miss seen, so callers can retry with a new seed.
    """
    p, m = targets.p, targets.edge_count
    rng = random.Random(rng_seed)
    n_pairs = p * (p - 1) // 2
    iu, ju = np.triu_indices(p, 1)
    chosen = rng.sample(range(n_pairs), m)
    state = _State(p, [(int(iu[c]), int(ju[c])) for c in chosen])

    dist = _distance(state, targets)
    best = dist
    if dist == (0, 0):
        return _checked(state, targets)
    if m == 0 or m == n_pairs:
        raise TargetNotReached(best, 0)

    temp = T0
    since_best = 0
    for it in range(1, max_iters + 1):
        u, v = state.edges[rng.randrange(m)]
        while True:
            x = rng.randrange(p)
            y = rng.randrange(p)
            if x != y and not state.has(x, y) and {x, y} != {u, v}:
                break
        state.remove(u, v)
        state.add(x, y)
        new = _distance(state, targets)
        if new <= dist:
            accept = True
        else:
            worsening = (new[0] + new[1]) - (dist[0] + dist[1])
            accept = worsening <= 0 or rng.random() < math.exp(-worsening / temp)
        if accept:
            dist = new
            if dist < best:
                best = dist
                since_best = 0
                if best == (0, 0):
                    return _checked(state, targets)
        else:
            state.remove(x, y)
            state.add(u, v)
        temp *= COOLING
        since_best += 1
        if since_best >= REHEAT_AFTER:
            temp = T0
            since_best = 0
    raise TargetNotReached(best, max_iters)


def _checked(state: _State, targets: GraphTargets) -> AdjacencyMatrix:
    a = state.to_matrix()
    # recount from scratch rather than trusting the incremental bookkeeping
    got = (a.edge_count(), count_two_stars(a), count_triangles(a))
    want = (targets.edge_count, targets.two_star_count, targets.triangle_count)
    if got != want:
        raise AssertionError(f"generator bookkeeping drifted: got {got}, wanted {want}")
    return a
