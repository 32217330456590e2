import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from unicell.core import (CPermutation, MarkedTree, OddComposition, QuotientGraph,
                          RootedPlaneTree, canonical_numbering, genus_of_cpermutation)
from unicell.sample import sample_plane_tree


def test_single_edge_tree():
    t = RootedPlaneTree.from_contour("()")
    assert t.n == 1 and t.root == 1 and t.parent(2) == 1


def test_path_of_three_ids_along_path():
    t = RootedPlaneTree.from_contour("(())")
    assert list(t.parent_array[1:]) == [0, 1, 2]
    assert t.depths.tolist() == [0, 0, 1, 2]


def test_cherry_contour_order():
    t = RootedPlaneTree.from_contour("()()")
    assert t.children[1] == (2, 3)


def test_contour_roundtrip():
    for w in ("()", "(())", "()()", "(()())", "((())())()"):
        assert RootedPlaneTree.from_contour(w).to_contour() == w


def test_non_canonical_parent_array_rejected():
    # vertex 4 hangs under 2 but 3 is a sibling visited later
    with pytest.raises(ValueError):
        RootedPlaneTree([0, 0, 1, 1, 2])


def test_canonical_numbering_relabels_and_is_idempotent():
    children = {"r": ["a", "b"], "a": ["c"], "b": [], "c": []}
    mapping = canonical_numbering(children, "r")
    assert mapping == {"r": 1, "a": 2, "c": 3, "b": 4}
    t = RootedPlaneTree.from_children(children, "r")
    again = canonical_numbering(t)
    assert again == {v: v for v in t.vertices()}


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2 ** 32))
def test_random_trees_canonical(n, seed):
    t = sample_plane_tree(n, np.random.default_rng(seed))
    RootedPlaneTree(t.parent_array)          # validation accepts the sampler output
    mapping = canonical_numbering(t)
    assert all(mapping[v] == v for v in t.vertices())


def test_tree_distance_and_lca():
    t = RootedPlaneTree.from_contour("(()())(())")
    assert t.children[1] == (2, 5) and t.children[2] == (3, 4)
    assert t.distance(3, 4) == 2
    assert t.lca(3, 4) == 2
    assert t.distance(4, 6) == 4
    assert t.lca(4, 6) == 1
    assert t.distance(1, 1) == 0


def test_odd_composition_validation():
    oc = OddComposition([1, 3, 1])
    assert oc.n == 4 and oc.N == 3 and oc.genus == 1
    with pytest.raises(ValueError):
        OddComposition([2, 2])
    with pytest.raises(ValueError):
        OddComposition([0, 5])
    with pytest.raises(ValueError):
        OddComposition([])


def test_genus_of_cpermutation_examples():
    # order 9 with 5 odd cycles
    p = CPermutation([(1, 2, 3), (4, 5, 6), (7,), (8,), (9,)], [1, 1, -1, 1, -1])
    assert genus_of_cpermutation(p) == 2
    ident = CPermutation([(i,) for i in range(1, 6)], [1] * 5)
    assert genus_of_cpermutation(ident) == 0
    tri = CPermutation([(1, 2, 3)], [-1])
    assert genus_of_cpermutation(tri) == 1


def test_cpermutation_rejects_even_cycles_and_bad_partitions():
    with pytest.raises(ValueError):
        CPermutation([(1, 2), (3,)], [1, 1])
    with pytest.raises(ValueError):
        CPermutation([(1, 2, 3), (3,)], [1, 1])
    with pytest.raises(ValueError):
        CPermutation([(1, 2, 3)], [2])


def test_marked_tree_histogram_must_match():
    t = RootedPlaneTree.from_contour("(())")
    mt = MarkedTree(t, [1, 1, 1])
    assert mt.lam.parts == (3,)
    with pytest.raises(ValueError):
        MarkedTree(t, [1, 2, 1])      # mark 1 used twice: even part
    with pytest.raises(ValueError):
        MarkedTree(t, [1, 1, 1], OddComposition([1, 1, 1]))


def test_marked_tree_text_roundtrip():
    t = RootedPlaneTree.from_contour("(()())")
    mt = MarkedTree(t, [1, 2, 1, 1])
    assert MarkedTree.from_text(mt.to_text()).marks.tolist() == mt.marks.tolist()


def test_quotient_graph_euler_and_roundtrip():
    q = QuotientGraph(1, [(1, 1), (1, 1)], 1)
    assert q.genus == 1 and q.n == 2
    assert QuotientGraph.from_text(q.to_text()).edge_multiset() == q.edge_multiset()
    with pytest.raises(ValueError):
        QuotientGraph(3, [(1, 2), (2, 3), (2, 3)], 1, genus=0)
    with pytest.raises(ValueError):
        QuotientGraph(4, [(1, 2), (3, 4), (3, 4), (1, 2)], 1, genus=1)  # disconnected


def test_quotient_degrees_count_loops_twice():
    q = QuotientGraph(2, [(1, 1), (1, 2), (1, 2)], 1)
    assert q.degrees()[1] == 4 and q.degrees()[2] == 2
