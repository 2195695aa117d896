import random

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from pulseforge.topology import (
    EQUAL,
    GREATER,
    LESS,
    BadTokenError,
    CycleError,
    DisconnectedError,
    DuplicateEdgeError,
    ParensError,
    TreeTopology,
    compare_subtrees,
    decode_parens,
    encode_parens,
    enumerate_subtrees,
    is_edge_symmetric,
    layer_decomposition,
    parse_edge_list,
)
from pulseforge.harness import random_tree, mirrored_tree


def c5():
    return TreeTopology(5, [(1, 2), (2, 3), (3, 4), (2, 0)])


def path(n):
    return TreeTopology(n, [(i, i + 1) for i in range(n - 1)])


def test_parse_edge_list_basic():
    t = parse_edge_list("0 1\n1 2\n")
    assert t.n == 3
    assert t.edges() == [(0, 1), (1, 2)]


def test_parse_edge_list_empty_is_single_vertex():
    t = parse_edge_list("")
    assert t.n == 1
    assert t.edges() == []


def test_parse_edge_list_errors():
    with pytest.raises(BadTokenError):
        parse_edge_list("0 1 2")
    with pytest.raises(BadTokenError):
        parse_edge_list("0 x")
    with pytest.raises(BadTokenError):
        parse_edge_list("0 -1")
    with pytest.raises(CycleError):
        parse_edge_list("0 0")
    with pytest.raises(DuplicateEdgeError):
        parse_edge_list("0 1 1 0")
    with pytest.raises(CycleError):
        parse_edge_list("0 1 1 2 2 0")
    with pytest.raises(DisconnectedError):
        parse_edge_list("0 1 3 4")


def test_ports_are_stable_and_invertible():
    t = c5()
    for v in range(t.n):
        for p in range(t.degree(v)):
            u = t.neighbor_on(v, p)
            assert t.port_to(v, u) == p
    assert t.degree(2) == 3
    assert t.edges() == [(0, 2), (1, 2), (2, 3), (3, 4)]


def test_directed_edges_grouped_by_source():
    t = path(3)
    assert t.directed_edges() == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_layering_path5():
    lay = layer_decomposition(path(5))
    assert lay.layers == (frozenset({0, 4}), frozenset({1, 3}),
                          frozenset({2}))
    assert lay.radius == 2
    assert lay.diameter == 4
    assert lay.root == 2
    assert lay.co_root is None


def test_layering_c5():
    lay = layer_decomposition(c5())
    assert lay.layers == (frozenset({0, 1, 4}), frozenset({2, 3}))
    assert (lay.diameter, lay.radius) == (3, 1)
    assert (lay.root, lay.co_root) == (2, 3)
    assert lay.parent_of[3] == 2
    assert not lay.arbitrary_root
    assert 3 in lay.children_of[2]


def test_layering_single_vertex():
    lay = layer_decomposition(TreeTopology(1, []))
    assert lay.layers == (frozenset({0}),)
    assert (lay.root, lay.radius, lay.diameter) == (0, 0, 0)


def test_layering_symmetric_tree_flags_arbitrary_root():
    lay = layer_decomposition(path(4))
    assert lay.diameter == 3
    assert lay.arbitrary_root
    assert {lay.root, lay.co_root} == {1, 2}


def test_layering_matches_peeling_oracle_on_all_small_shapes():
    for n in range(1, 9):
        for edges in oracles.nonisomorphic_trees(n):
            t = TreeTopology(n, edges)
            lay = layer_decomposition(t)
            assert list(lay.layer_of) == oracles.peel_layers(t)
            g = oracles.to_nx(t)
            assert lay.diameter == (nx.diameter(g) if n > 1 else 0)
            assert lay.root in nx.center(g)
            # unique parent one layer up, for every non-root vertex
            for v in range(n):
                if v in (lay.root, lay.co_root):
                    continue
                p = lay.parent_of[v]
                assert p in t.neighbors[v]
                assert lay.layer_of[p] > lay.layer_of[v]
            top = lay.layers[-1]
            assert len(top) in (1, 2)
            assert lay.diameter % 2 == (1 if len(top) == 2 else 0)
            assert lay.diameter == 2 * lay.radius + (len(top) - 1)


def test_compare_subtrees_c5_examples():
    t = c5()
    lay = layer_decomposition(t)
    # fewer children first: the 2-chain side loses to the 2-leaf side
    assert compare_subtrees(t, lay, 3, 2) == LESS
    assert compare_subtrees(t, lay, 2, 3) == GREATER
    # lower layer first
    assert compare_subtrees(t, lay, 0, 3) == LESS
    # two leaves are the same shape
    assert compare_subtrees(t, lay, 0, 4) == EQUAL


def test_compare_subtrees_matches_recursive_oracle():
    for i in range(60):
        n = random.Random(i).randint(2, 10)
        t = random_tree(n, i)
        lay = layer_decomposition(t)
        layer_of = oracles.peel_layers(t)
        for a in range(n):
            for b in range(n):
                assert compare_subtrees(t, lay, a, b) == \
                    oracles.subtree_compare(t, layer_of, a, b)


def test_enumerate_subtrees_c5():
    t = c5()
    idx = enumerate_subtrees(t, layer_decomposition(t))
    assert idx.count == 3
    assert [idx.class_of[v] for v in range(5)] == [1, 1, 3, 2, 1]
    assert [idx.quota_of(v) for v in range(5)] == [2, 2, 0, 1, 2]


def test_enumerate_subtrees_p3_and_p5():
    t3 = path(3)
    idx3 = enumerate_subtrees(t3, layer_decomposition(t3))
    assert idx3.count == 2
    assert [idx3.class_of[v] for v in range(3)] == [1, 2, 1]
    t5 = path(5)
    idx5 = enumerate_subtrees(t5, layer_decomposition(t5))
    assert idx5.count == 3


def test_class_of_root_is_highest():
    for i in range(40):
        t = random_tree(random.Random(100 + i).randint(1, 12), 100 + i)
        lay = layer_decomposition(t)
        idx = enumerate_subtrees(t, lay)
        assert idx.class_of[lay.root] == idx.count
        assert idx.quota_of(lay.root) == 0


def test_encode_parens_examples():
    assert encode_parens(path(3), 1) == "(()())"
    assert encode_parens(TreeTopology(1, []), 0) == "()"
    assert encode_parens(c5(), 2) == "((())()())"


def test_decode_parens_roundtrip_examples():
    for text in ("()", "(()())", "((())()())", "((((()))))"):
        t = decode_parens(text)
        assert encode_parens(t, 0) == text


def test_decode_parens_errors():
    for bad in ("", "(", "(()", "())", "()()", "(a)", "() ", "(())x"):
        with pytest.raises(ParensError):
            decode_parens(bad)


def test_encoding_is_label_invariant():
    rng = random.Random(7)
    for i in range(30):
        n = rng.randint(2, 10)
        t = random_tree(n, rng.randrange(10 ** 6))
        perm = list(range(n))
        rng.shuffle(perm)
        relabeled = TreeTopology(
            n, [(perm[u], perm[v]) for u, v in t.edges()])
        for v in range(n):
            assert encode_parens(t, v) == encode_parens(relabeled, perm[v])


@settings(max_examples=80, deadline=None)
@given(st.integers(min_value=1, max_value=14), st.randoms())
def test_encode_decode_roundtrip_random(n, rnd):
    t = random_tree(n, rnd.randrange(10 ** 9))
    root = rnd.randrange(n)
    text = encode_parens(t, root)
    back = decode_parens(text)
    assert back.n == n
    assert encode_parens(back, 0) == text


def test_is_edge_symmetric_known_cases():
    assert is_edge_symmetric(path(2)).witness_edge == (0, 1)
    assert is_edge_symmetric(path(4)).witness_edge == (1, 2)
    assert not is_edge_symmetric(path(3)).symmetric
    assert not is_edge_symmetric(path(5)).symmetric
    assert not is_edge_symmetric(c5()).symmetric
    assert not is_edge_symmetric(TreeTopology(1, [])).symmetric


def test_is_edge_symmetric_matches_bijection_oracle():
    for n in range(1, 9):
        for edges in oracles.nonisomorphic_trees(n):
            t = TreeTopology(n, edges)
            rep = is_edge_symmetric(t)
            witness = oracles.brute_force_symmetric(t)
            assert rep.symmetric == (witness is not None), (n, edges)
            if rep.symmetric:
                assert oracles.brute_force_symmetric_about(
                    t, *rep.witness_edge)


def test_mirrored_trees_are_symmetric():
    for i in range(25):
        half = random.Random(i).randint(1, 6)
        t = mirrored_tree(half, seed=i)
        rep = is_edge_symmetric(t)
        assert rep.symmetric
        assert oracles.brute_force_symmetric_about(t, *rep.witness_edge)


def test_symmetric_implies_odd_diameter():
    for i in range(25):
        t = mirrored_tree(random.Random(50 + i).randint(1, 6), seed=50 + i)
        assert layer_decomposition(t).diameter % 2 == 1
