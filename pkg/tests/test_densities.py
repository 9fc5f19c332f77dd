import math

import numpy as np
import pytest

from noisynet.densities import c_hat, clustering_estimate, density_true, implied_counts
from noisynet.errors import (DegenerateDenominator, PatternTooLarge, UnsupportedKind, WorkBudgetExceeded,
                             ZeroTwoStars)
from noisynet.generator import generate_constrained
from noisynet.graph import AdjacencyMatrix, GraphTargets, NoiseModel, count_triangles, sample_noisy
from noisynet.moments import u1_hat
from noisynet.patterns import (SubgraphPattern, cycle, edge, enumerate_sum, open_triple, parse_pattern,
                               parse_patterns, path, pattern_sum, triangle, two_star)

from oracles import brute_c_hat, brute_density, brute_pattern_sum, random_graph

CATALOG = [edge(), two_star(), triangle(), open_triple(), path(3), cycle(4)]
CUSTOM = [
    SubgraphPattern(((0, 2), (1, 2)), (1, 0)),                  # wedge centred on the last label
    SubgraphPattern(((0, 1), (2, 3)), (1, 1)),                  # two disjoint edges
    SubgraphPattern(((0, 1), (0, 2), (0, 3)), (1, 1, 0)),       # three-leaf star
    SubgraphPattern(((0, 1), (1, 2), (2, 0)), (0, 1, 0)),       # triangle slots, reversed pair
    SubgraphPattern(((1, 0), (2, 1), (3, 2), (0, 3), (0, 2)), (1, 0, 1, 1, 0)),  # chorded square
]


# patterns

def test_pattern_validation():
    with pytest.raises(ValueError):
        SubgraphPattern(((0, 0),), (1,))
    with pytest.raises(ValueError):
        SubgraphPattern(((0, 1), (1, 0)), (1, 1))
    with pytest.raises(ValueError):
        SubgraphPattern(((0, 1),), (2,))
    with pytest.raises(ValueError):
        SubgraphPattern(((0, 1), (1, 2)), (1,))
    with pytest.raises(ValueError):
        path(0)
    with pytest.raises(ValueError):
        cycle(2)


def test_catalog_shapes():
    assert (two_star().k, two_star().m) == (2, 3)
    assert (triangle().k, triangle().m) == (3, 3)
    assert (path(3).k, path(3).m) == (3, 4)
    assert (cycle(5).k, cycle(5).m) == (5, 5)
    assert open_triple().taus == (1, 1, 0)
    assert two_star().cardinality(30) == 30 * 29 * 28
    with pytest.raises(PatternTooLarge):
        cycle(5).cardinality(4)


def test_parse_patterns():
    assert parse_pattern("two-star") == two_star()
    assert parse_pattern("TWO_STAR") == two_star()
    assert parse_pattern("path:3") == path(3)
    assert parse_pattern("cycle:4") == cycle(4)
    assert [p.kind for p in parse_patterns("edge, triangle,open-triple")] == ["edge", "triangle", "open_triple"]
    with pytest.raises(ValueError):
        parse_pattern("square")


@pytest.mark.parametrize("pattern", CATALOG + CUSTOM, ids=lambda p: p.name)
@pytest.mark.parametrize("p", [5, 7])
def test_pattern_sum_matches_enumeration(pattern, p):
    rng = np.random.default_rng(p * 31 + pattern.k)
    mats = []
    for _ in range(pattern.k):
        m = rng.normal(size=(p, p))
        m = m + m.T
        np.fill_diagonal(m, 0.0)
        mats.append(m)
    want = brute_pattern_sum(pattern.slots, mats, p)
    assert pattern_sum(pattern, mats) == pytest.approx(want, rel=1e-10, abs=1e-10)
    assert enumerate_sum(pattern, mats) == pytest.approx(want, rel=1e-10, abs=1e-10)


def test_work_budget():
    mats = [np.ones((30, 30)) - np.eye(30)] * 4
    with pytest.raises(WorkBudgetExceeded):
        pattern_sum(cycle(4), mats, budget=1000)


# true densities

def test_density_true_examples():
    k4 = AdjacencyMatrix.complete(4)
    assert density_true(k4, triangle()) == 1.0
    assert density_true(AdjacencyMatrix.complete(6), open_triple()) == 0.0
    a = generate_constrained(GraphTargets(30, 43, 100, 15), 1)
    assert density_true(a, two_star()) == pytest.approx(200 / (30 * 29 * 28))
    with pytest.raises(PatternTooLarge):
        density_true(AdjacencyMatrix.complete(3), cycle(4))


@pytest.mark.parametrize("pattern", CATALOG + CUSTOM, ids=lambda p: p.name)
def test_density_true_matches_enumeration(pattern):
    rng = np.random.default_rng(pattern.k)
    for p in (5, 6):
        a = random_graph(rng, p, 0.5)
        assert density_true(a, pattern) == pytest.approx(brute_density(a, pattern.slots, pattern.taus), abs=1e-12)


def test_triangle_density_gives_integer_count():
    rng = np.random.default_rng(0)
    for p in (5, 8, 13):
        a = random_graph(rng, p, 0.4)
        n = density_true(a, triangle()) * p * (p - 1) * (p - 2) / 6
        assert n == pytest.approx(round(n), abs=1e-9)
        assert round(n) == count_triangles(a)


def test_density_relabel_invariant():
    rng = np.random.default_rng(3)
    a = AdjacencyMatrix(random_graph(rng, 9))
    perm = rng.permutation(9)
    for pattern in CATALOG:
        assert density_true(a.permute(perm), pattern) == pytest.approx(density_true(a, pattern), abs=1e-12)
        assert c_hat(a.permute(perm), pattern, 0.1, 0.2).c_hat == pytest.approx(
            c_hat(a, pattern, 0.1, 0.2).c_hat, abs=1e-12)


# corrected estimates

@pytest.mark.parametrize("pattern", CATALOG + CUSTOM, ids=lambda p: p.name)
def test_c_hat_matches_enumeration(pattern):
    rng = np.random.default_rng(100 + pattern.k)
    for p in (5, 6):
        y = random_graph(rng, p, 0.5)
        a, b = rng.uniform(0, 0.4, 2)
        est = c_hat(y, pattern, a, b)
        assert est.c_hat == pytest.approx(brute_c_hat(y, pattern.slots, pattern.taus, a, b), abs=1e-10)
        assert est.c_hat == est.t_hat / (1 - a - b) ** pattern.k
        assert est.cardinality_V == math.perm(p, pattern.m)


def test_c_hat_noiseless_is_true_density():
    rng = np.random.default_rng(1)
    a = random_graph(rng, 8)
    for pattern in CATALOG:
        assert c_hat(a, pattern, 0.0, 0.0).c_hat == pytest.approx(density_true(a, pattern), abs=1e-12)


def test_edge_pattern_is_corrected_mean():
    rng = np.random.default_rng(2)
    y = AdjacencyMatrix(random_graph(rng, 20, 0.3))
    assert c_hat(y, edge(), 0.05, 0.15).c_hat == pytest.approx((u1_hat(y) - 0.05) / 0.8, abs=1e-15)


def test_c_hat_degenerate():
    with pytest.raises(DegenerateDenominator):
        c_hat(AdjacencyMatrix.complete(4), edge(), 0.5, 0.5)


def test_implied_counts():
    p = 30
    two = c_hat(AdjacencyMatrix.complete(p), two_star(), 0.0, 0.0)
    assert implied_counts(two, p) == pytest.approx(p * (p - 1) * (p - 2) / 2)
    a = generate_constrained(GraphTargets(30, 43, 100, 15), 1)
    assert implied_counts(c_hat(a, two_star(), 0, 0), p) == pytest.approx(100)
    assert implied_counts(c_hat(a, triangle(), 0, 0), p) == pytest.approx(15)
    assert implied_counts(c_hat(AdjacencyMatrix.empty(p), triangle(), 0, 0), p) == 0
    with pytest.raises(UnsupportedKind):
        implied_counts(c_hat(a, edge(), 0, 0), p)
    assert c_hat(a, edge(), 0, 0).implied_count is None


def test_clustering_estimate():
    a = generate_constrained(GraphTargets(30, 43, 100, 15), 1)
    assert clustering_estimate(c_hat(a, two_star(), 0, 0), c_hat(a, triangle(), 0, 0)) == pytest.approx(0.45)
    k5 = AdjacencyMatrix.complete(5)
    assert clustering_estimate(c_hat(k5, two_star(), 0, 0), c_hat(k5, triangle(), 0, 0)) == pytest.approx(1.0)
    e = AdjacencyMatrix.empty(5)
    with pytest.raises(ZeroTwoStars):
        clustering_estimate(c_hat(e, two_star(), 0, 0), c_hat(e, triangle(), 0, 0))


@pytest.mark.slow
def test_unbiased_at_known_rates():
    a = generate_constrained(GraphTargets(30, 87, 430, 40), 0)
    nm = NoiseModel(0.05, 0.15)
    draws = np.array([
        [c_hat(y, pat, nm.alpha, nm.beta).c_hat for pat in (two_star(), triangle())]
        for y in (sample_noisy(a, nm, s) for s in range(10_000))
    ])
    se = draws.std(axis=0, ddof=1) / math.sqrt(len(draws))
    truth = [density_true(a, two_star()), density_true(a, triangle())]
    assert np.all(np.abs(draws.mean(axis=0) - truth) < 4 * se)
