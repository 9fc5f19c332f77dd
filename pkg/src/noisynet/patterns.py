"""Subgraph patterns and the injective-map summation kernel.

A pattern is a list of k slots, each an unordered pair of abstract vertex
labels, plus a flag per slot (1 = edge factor, 0 = non-edge factor).  Its
index set V is every injective assignment of the m labels to vertices, so
|V| = p!/(p-m)!.  Everything downstream (true densities, corrected
estimates, bootstrap statistics, leave-one-out sums) reduces to

    pattern_sum(pattern, mats) = sum over injective f of prod_l M_l[f(i_l), f(i'_l)]

for symmetric p x p matrices M_l with zero diagonal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from .errors import PatternTooLarge, WorkBudgetExceeded

WORK_BUDGET = 10**9

KINDS = ("edge", "two_star", "open_triple", "triangle", "path", "cycle", "custom")


@dataclass(frozen=True)
class SubgraphPattern:
    slots: tuple[tuple[int, int], ...]
    taus: tuple[int, ...]
    kind: str = "custom"
    name: str = ""

    def __post_init__(self):
        slots = tuple(tuple(int(v) for v in s) for s in self.slots)
        taus = tuple(int(t) for t in self.taus)
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "taus", taus)
        if not slots:
            raise ValueError("pattern needs at least one slot")
        if len(taus) != len(slots):
            raise ValueError(f"{len(slots)} slots but {len(taus)} tau flags")
        if any(t not in (0, 1) for t in taus):
            raise ValueError("tau flags must be 0 or 1")
        for s in slots:
            if len(s) != 2 or s[0] == s[1]:
                raise ValueError(f"slot {s} must join two distinct labels")
        for s, t in combinations(slots, 2):
            if len(set(s) & set(t)) > 1:
                raise ValueError(f"slots {s} and {t} share both labels")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def k(self) -> int:
        return len(self.slots)

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({v for s in self.slots for v in s}))

    @property
    def m(self) -> int:
        return len(self.labels)

    def cardinality(self, p: int) -> int:
        """|V| for a p-vertex graph: ordered injective label assignments."""
        if p < self.m:
            raise PatternTooLarge(f"pattern {self.name} needs {self.m} vertices, graph has {p}")
        return math.perm(p, self.m)

    def with_taus(self, taus) -> "SubgraphPattern":
        return SubgraphPattern(self.slots, tuple(taus), "custom", f"{self.name}{list(taus)}")


def edge() -> SubgraphPattern:
    return SubgraphPattern(((0, 1),), (1,), "edge", "edge")


def two_star() -> SubgraphPattern:
    return SubgraphPattern(((0, 1), (1, 2)), (1, 1), "two_star", "two-star")


def triangle() -> SubgraphPattern:
    return SubgraphPattern(((0, 1), (1, 2), (0, 2)), (1, 1, 1), "triangle", "triangle")


def open_triple() -> SubgraphPattern:
    return SubgraphPattern(((0, 1), (1, 2), (0, 2)), (1, 1, 0), "open_triple", "open-triple")


def path(k: int) -> SubgraphPattern:
    """Simple path with k edges (k+1 vertices); path(2) has the two-star's index set."""
    if k < 1:
        raise ValueError("path needs at least one edge")
    return SubgraphPattern(tuple((i, i + 1) for i in range(k)), (1,) * k, "path", f"path:{k}")


def cycle(k: int) -> SubgraphPattern:
    """Cycle on k vertices; cycle(3) has the triangle's index set."""
    if k < 3:
        raise ValueError("cycle needs at least three vertices")
    slots = tuple((i, i + 1) for i in range(k - 1)) + ((0, k - 1),)
    return SubgraphPattern(slots, (1,) * k, "cycle", f"cycle:{k}")


_FIXED = {"edge": edge, "two-star": two_star, "triangle": triangle, "open-triple": open_triple}


def parse_pattern(name: str) -> SubgraphPattern:
    key = name.strip().lower().replace("_", "-")
    if key in _FIXED:
        return _FIXED[key]()
    m = re.fullmatch(r"(path|cycle):(\d+)", key)
    if m:
        return path(int(m.group(2))) if m.group(1) == "path" else cycle(int(m.group(2)))
    raise ValueError(f"unknown pattern {name!r}; expected edge, two-star, triangle, open-triple, path:k or cycle:k")


def parse_patterns(spec: str) -> list[SubgraphPattern]:
    return [parse_pattern(s) for s in spec.split(",") if s.strip()]


# summation kernel

def _shape(pattern: SubgraphPattern) -> str:
    if pattern.k == 1:
        return "single"
    if pattern.k == 2 and pattern.m == 3:
        return "wedge"
    if pattern.k == 3 and pattern.m == 3:
        return "triangle"
    return "generic"


def pattern_sum(pattern: SubgraphPattern, mats, budget: int = WORK_BUDGET) -> float:
    """Sum over injective label maps of the product of slot matrix entries.

    ``mats`` holds one symmetric zero-diagonal matrix per slot.  One-slot,
    wedge and triangle shapes use matrix identities; anything else goes
    through :func:`enumerate_sum`.
    """
    mats = [np.asarray(x, dtype=float) for x in mats]
    if len(mats) != pattern.k:
        raise ValueError(f"pattern has {pattern.k} slots, got {len(mats)} matrices")
    p = mats[0].shape[0]
    pattern.cardinality(p)
    shape = _shape(pattern)
    if shape == "single":
        return float(mats[0].sum())
    if shape == "wedge":
        m1, m2 = mats
        return float(m1.sum(axis=1) @ m2.sum(axis=1) - (m1 * m2).sum())
    if shape == "triangle":
        # each slot is a different label pair, so with symmetric inputs the
        # labelling does not matter; zero diagonals enforce distinctness
        m1, m2, m3 = mats
        return float(((m1 @ m2) * m3).sum())
    return enumerate_sum(pattern, mats, budget)


def enumerate_sum(pattern: SubgraphPattern, mats, budget: int = WORK_BUDGET) -> float:
    """Explicit enumeration: loop over all but two labels, vectorise the last two.

    Work is O(p^(m-2) * p^2); raises :class:`WorkBudgetExceeded` beforehand if
    that exceeds ``budget``.
    """
    mats = [np.asarray(x, dtype=float) for x in mats]
    p = mats[0].shape[0]
    labels = pattern.labels
    m = len(labels)
    pattern.cardinality(p)
    outer = math.perm(p, m - 2) if m > 2 else 1
    if outer * p * p * pattern.k > budget:
        raise WorkBudgetExceeded(
            f"enumerating {pattern.name} at p={p} needs ~{outer * p * p * pattern.k:.3g} visits (budget {budget:.3g})")
    pos = {lab: i for i, lab in enumerate(labels)}
    x, y = m - 2, m - 1
    slots = [(pos[a], pos[b]) for a, b in pattern.slots]
    offdiag = 1.0 - np.eye(p)
    total = 0.0
    for fixed in permutations(range(p), m - 2):
        scalar = 1.0
        vx = np.ones(p)
        vy = np.ones(p)
        mxy = offdiag.copy()
        for (a, b), mat in zip(slots, mats):
            ia, ib = a < x, b < x
            if ia and ib:
                scalar *= mat[fixed[a], fixed[b]]
            elif ia:
                (vx if b == x else vy)[:] *= mat[fixed[a]]
            elif ib:
                (vx if a == x else vy)[:] *= mat[:, fixed[b]]
            else:
                mxy *= mat if a == x else mat.T
            if scalar == 0.0:
                break
        if scalar == 0.0:
            continue
        if fixed:
            idx = list(fixed)
            vx[idx] = 0.0
            vy[idx] = 0.0
        total += scalar * float(vx @ mxy @ vy)
    return total
