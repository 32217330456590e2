import math
from fractions import Fraction

import numpy as np
import pytest

from unicell import oracle
from unicell.core import QuotientGraph


def test_plane_tree_counts():
    assert len(oracle.enumerate_plane_trees(1)) == 1
    assert len(oracle.enumerate_plane_trees(3)) == 5
    assert len(oracle.enumerate_plane_trees(5)) == 42
    words = [t.to_contour() for t in oracle.enumerate_plane_trees(3)]
    assert words == sorted(words) and len(set(words)) == 5
    with pytest.raises(ValueError):
        oracle.enumerate_plane_trees(13)


def test_odd_compositions_and_pmf():
    assert [c.parts for c in oracle.enumerate_odd_compositions(2, 1)] == [(3,)]
    pmf = oracle.exact_lambda_pmf(3, 2)
    assert {c.parts: p for c, p in pmf.items()} == {
        (1, 3): Fraction(1, 2), (3, 1): Fraction(1, 2)}
    pmf43 = oracle.exact_lambda_pmf(4, 3)
    assert set(p for p in pmf43.values()) == {Fraction(1, 3)}
    with pytest.raises(ValueError):
        oracle.enumerate_odd_compositions(3, 3)     # parity


def test_unicellular_counts():
    assert oracle.count_unicellular_maps(2, 1)[0] == 1
    assert oracle.count_unicellular_maps(3, 1)[0] == 10
    assert oracle.count_unicellular_maps(2, 0)[0] == 2
    # genus-0 slice equals the plane-tree count
    for n in range(1, 6):
        assert oracle.count_unicellular_maps(n, 0)[0] == oracle.catalan(n)
    # total over genus: (2n-1)!! polygon gluings
    for n in range(1, 5):
        total = sum(oracle.count_unicellular_maps(n, g)[0] for g in range(n // 2 + 1))
        assert total == math.prod(range(1, 2 * n, 2))


def test_c_decorated_counts():
    assert oracle.count_c_decorated(2, 1) == 8
    assert oracle.count_c_decorated(3, 1) == 160


def test_bijection_identity_small():
    for n in range(1, 5):
        for g in range(0, n // 2 + 1):
            assert oracle.count_c_decorated(n, g) == \
                2 ** (n + 1) * oracle.count_unicellular_maps(n, g)[0]


def test_forest_formula():
    assert oracle.count_forests(2, 1) == 2
    for n in range(0, 7):
        assert oracle.count_forests(1, n) == oracle.catalan(n)
    for sigma in range(1, 9):
        assert oracle.count_forests(sigma, 0) == 1
    assert oracle.count_forests(3, 2) == oracle.forests_by_generation(3, 2)


def test_root_degree_pmf_examples():
    assert oracle.root_degree_pmf(1, 1) == {1: Fraction(1)}
    assert oracle.root_degree_pmf(2, 1) == {0: Fraction(1, 2), 1: Fraction(1, 2)}
    for sigma in range(1, 8):
        for e in range(0, (14 - sigma) // 2 + 1):
            pmf = oracle.root_degree_pmf(sigma, e)
            assert sum(pmf.values()) == 1
            assert oracle.check_degree_bounds(sigma, e)


def test_marked_tree_distribution_examples():
    # n=2 g=1: point mass on the double loop
    d = oracle.marked_tree_distribution(2, 1)
    assert len(d) == 1 and next(iter(d.values())) == 1
    # n=3 g=0: identity gluing, uniform over the abstract rooted trees
    d0 = oracle.marked_tree_distribution(3, 0)
    u0 = oracle.uniform_unicellular_graph_distribution(3, 0)
    assert d0 == u0
    # n=3 g=1: exact rational equality
    assert oracle.marked_tree_distribution(3, 1) == \
        oracle.uniform_unicellular_graph_distribution(3, 1)


def test_canonical_form_isomorphism_invariant():
    rng = np.random.default_rng(0)
    from unicell.sample import sample_unicellular_graph
    for _ in range(60):
        n = int(rng.integers(2, 8))
        g = int(rng.integers(0, n // 2 + 1))
        gq, _ = sample_unicellular_graph(n, g, rng)
        if gq.v > 8:
            continue
        key = oracle.canonical_rooted_graph(gq)
        # relabel by a random permutation fixing the root
        perm = np.arange(1, gq.v + 1)
        others = [i for i in range(gq.v) if i != gq.root - 1]
        rng.shuffle(others)
        positions = [i for i in range(gq.v) if i != gq.root - 1]
        for pos, val in zip(positions, others):
            perm[pos] = val + 1
        edges = [(int(perm[a - 1]), int(perm[b - 1])) for a, b in gq.edges()]
        gq2 = QuotientGraph(gq.v, edges, root=int(perm[gq.root - 1]), genus=gq.genus)
        assert oracle.canonical_rooted_graph(gq2) == key


def test_canonical_form_separates_roots():
    # path rooted at the end vs rooted in the middle
    a = QuotientGraph(3, [(1, 2), (2, 3)], root=1, genus=0)
    b = QuotientGraph(3, [(1, 2), (2, 3)], root=2, genus=0)
    assert oracle.canonical_rooted_graph(a) != oracle.canonical_rooted_graph(b)


def test_caps_enforced():
    with pytest.raises(ValueError):
        oracle.count_unicellular_maps(7, 1)
    with pytest.raises(ValueError):
        oracle.marked_tree_distribution(6, 1)
    with pytest.raises(ValueError):
        oracle.forests_by_generation(3, 7)
