"""True and noise-corrected subgraph densities.

For a pattern with flags tau, the corrected statistic replaces each slot
factor by phi(Y) = (Y - alpha)^tau (1 - beta - Y)^(1 - tau), whose mean given
A is (1 - alpha - beta) A^tau (1 - A)^(1 - tau).  Averaging the product over V
and dividing by (1 - alpha - beta)^k gives an unbiased density estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, UnsupportedKind, ZeroTwoStars
from .graph import as_matrix, count_triangles, count_two_stars, edge_density
from .patterns import SubgraphPattern, pattern_sum

DENOM_TOL = 1e-10


def _offdiag(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=float)
    np.fill_diagonal(m, 0.0)
    return m


def phi_matrix(y, tau: int, alpha: float, beta: float) -> np.ndarray:
    """Slot factor matrix with zero diagonal; tau=1 gives Y - alpha, tau=0 gives 1 - beta - Y."""
    y = np.asarray(as_matrix(y), dtype=float)
    return _offdiag(y - alpha if tau else 1.0 - beta - y)


def phi_matrices(y, pattern: SubgraphPattern, alpha: float, beta: float) -> list[np.ndarray]:
    cache = {t: phi_matrix(y, t, alpha, beta) for t in set(pattern.taus)}
    return [cache[t] for t in pattern.taus]


def kappa3(alpha: float, beta: float) -> float:
    k3 = 1.0 - alpha - beta
    if abs(k3) < DENOM_TOL:
        raise DegenerateDenominator("1 - alpha - beta", k3)
    return k3


def density_true(a, pattern: SubgraphPattern) -> float:
    """C_V: fraction of index-set members whose slots match the tau flags in A (0^0 = 1)."""
    a = as_matrix(a)
    p = a.shape[0]
    card = pattern.cardinality(p)
    if pattern.kind == "edge":
        return edge_density(a)
    if pattern.kind == "two_star":
        return 2.0 * count_two_stars(a) / card
    if pattern.kind == "triangle":
        return 6.0 * count_triangles(a) / card
    return phi_sum(a, pattern, 0.0, 0.0) / card


def phi_sum(y, pattern: SubgraphPattern, alpha: float, beta: float) -> float:
    return pattern_sum(pattern, phi_matrices(y, pattern, alpha, beta))


@dataclass(frozen=True)
class DensityEstimate:
    pattern: SubgraphPattern
    c_hat: float
    t_hat: float
    alpha_used: float
    beta_used: float
    cardinality_V: int
    p: int

    @property
    def implied_count(self) -> float | None:
        try:
            return implied_counts(self, self.p)
        except UnsupportedKind:
            return None


def c_hat(y, pattern: SubgraphPattern, alpha: float, beta: float) -> DensityEstimate:
    k3 = kappa3(alpha, beta)
    p = as_matrix(y).shape[0]
    card = pattern.cardinality(p)
    t = phi_sum(y, pattern, alpha, beta) / card
    return DensityEstimate(pattern, t / k3**pattern.k, t, alpha, beta, card, p)


_COUNT_DIVISOR = {"two_star": 2, "triangle": 6}


def implied_counts(est: DensityEstimate, p: int) -> float:
    """Subgraph count implied by a density: C p(p-1)(p-2)/2 for two-stars, /6 for triangles."""
    div = _COUNT_DIVISOR.get(est.pattern.kind)
    if div is None:
        raise UnsupportedKind(f"no count conversion for pattern kind {est.pattern.kind!r}")
    return est.c_hat * p * (p - 1) * (p - 2) / div


def clustering_estimate(two_star: DensityEstimate, triangle: DensityEstimate) -> float:
    if two_star.c_hat == 0:
        raise ZeroTwoStars("estimated two-star density is zero")
    return triangle.c_hat / two_star.c_hat
