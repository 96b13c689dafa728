import itertools
import json

import numpy as np
import pytest

from rcmexp.graphcore import (CapError, MarginError, PreconditionError, SpecError,
                              build_template, cut_set_function, diameter, distance,
                              edge_boundary, edge_distance, enumerate_connected_vertex_sets,
                              enumerate_r_connected_edge_sets, explicit_graph, is_r_connected,
                              load_graph_file, parse_scalar, regular_tree, saw_counts,
                              scalar_mode, tree_distance, vertex_boundaries, zd_box)
from rcmexp.corpus import corpus
from fractions import Fraction


def V(g, s):
    return g.vertex(s)


def test_zd_box_counts():
    g = zd_box([5, 5], 0)
    assert len(g.names) == 25 and len(g.edges) == 40


def test_zd_window_is_centered_subbox():
    g = zd_box([7, 7], 2)
    names = {g.names[v] for v in g.window}
    assert names == {(i, j) for i in range(2, 5) for j in range(2, 5)}


def test_regular_tree_counts():
    g = regular_tree(3, 2)
    assert len(g.names) == 10 and len(g.edges) == 9


def test_explicit_path():
    g = explicit_graph("abc", ["ab", "bc"])
    assert g.max_degree == 2


def test_template_errors():
    with pytest.raises(SpecError):
        explicit_graph("abcd", ["ab", "cd"])
    with pytest.raises(MarginError):
        zd_box([4, 4], 2)
    with pytest.raises(SpecError):
        explicit_graph("abc", ["ab"])
    with pytest.raises(SpecError):
        explicit_graph("ab", ["ab", "ba"])


def test_graph_file(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"template": "edges", "vertices": ["a", "b", "c"],
                                "edges": [["a", "b"], ["b", "c"]]}))
    g = load_graph_file(path)
    assert len(g.edges) == 2
    assert build_template({"template": "tree", "degree": 3, "depth": 1}).max_degree == 3


def test_scalars():
    assert parse_scalar("0.95") == Fraction(19, 20)
    assert parse_scalar("3/4", exact=False) == 0.75
    with pytest.raises(PreconditionError):
        scalar_mode(Fraction(1, 2), 0.5)
    with pytest.raises(SpecError):
        parse_scalar("abc")


def test_distance():
    g = zd_box([3, 3])
    assert distance(g, V(g, "0,0"), V(g, "0,1")) == 1
    assert distance(g, V(g, "1,1"), V(g, "1,1")) == 0
    assert distance(g, V(g, "0,0"), V(g, "2,2")) == 4


def _tree_weight_brute(g, X):
    # all labelled trees on the vertex set via Pruefer sequences
    X = list(X)
    n = len(X)
    if n == 1:
        return 0
    best = None
    for seq in itertools.product(range(n), repeat=n - 2):
        deg = [1] * n
        for s in seq:
            deg[s] += 1
        edges = []
        seq = list(seq)
        for s in seq:
            leaf = min(i for i in range(n) if deg[i] == 1)
            edges.append((leaf, s))
            deg[leaf] -= 1
            deg[s] -= 1
        u, w = [i for i in range(n) if deg[i] == 1]
        edges.append((u, w))
        total = sum(distance(g, X[a], X[b]) for a, b in edges)
        best = total if best is None else min(best, total)
    return best


def test_tree_distance():
    g = zd_box([4, 4])
    assert tree_distance(g, [V(g, "1,1"), V(g, "1,2"), V(g, "2,2")]) == 2
    assert tree_distance(g, [V(g, "0,0"), V(g, "3,2")]) == 5
    corners = [V(g, "0,0"), V(g, "0,3"), V(g, "3,0")]
    assert tree_distance(g, corners) == _tree_weight_brute(g, corners) == 6
    assert tree_distance(g, [V(g, "2,2")]) == 0


def test_edge_and_vertex_boundaries():
    g = zd_box([7, 7], 2)
    c = V(g, "3,3")
    assert len(edge_boundary(g, [c])) == 4
    assert edge_boundary(g, range(len(g.names))) == frozenset()
    assert len(edge_boundary(g, [c, V(g, "3,4")])) == 6
    ext, internal = vertex_boundaries(g, [c])
    assert len(ext) == 4 and internal == {c}
    block = [V(g, s) for s in ("3,3", "3,4", "4,3", "4,4")]
    ext, internal = vertex_boundaries(g, block)
    assert len(ext) == 8
    assert vertex_boundaries(g, range(len(g.names))) == (frozenset(), frozenset())
    # every boundary edge joins the internal and external boundaries
    R = block + [V(g, "2,3")]
    ext, internal = vertex_boundaries(g, R)
    for e in edge_boundary(g, R):
        a, b = g.edges[e]
        assert (a in internal and b in ext) or (b in internal and a in ext)


def test_connected_sets_small():
    g = zd_box([7, 7], 2)
    c = V(g, "3,3")
    assert len(enumerate_connected_vertex_sets(g, c, 2, 2)) == 4
    p = explicit_graph("abc", ["ab", "bc"])
    got = enumerate_connected_vertex_sets(p, p.vertex("b"), 2, 3)
    assert sorted(sorted(p.name_of(v) for v in s) for s in got) == [
        ["a", "b"], ["a", "b", "c"], ["b", "c"]]


def test_connected_sets_size4_bruteforce():
    g = zd_box([7, 7], 0)
    x = V(g, "3,3")
    ball = [v for v in range(len(g.names)) if distance(g, x, v) <= 3]
    brute = 0
    for S in itertools.combinations(ball, 4):
        if x in S and g.is_connected_set(S):
            brute += 1
    got = enumerate_connected_vertex_sets(g, x, 4, 4)
    assert len(got) == brute == 76
    assert all(g.is_connected_set(S) for S in got)
    assert len(set(got)) == len(got)


def test_enumeration_matches_subsets_on_corpus():
    for nm, g in corpus():
        for root in g.window_vertices:
            fast = set(enumerate_connected_vertex_sets(g, root, 1, len(g.window), cap=12))
            others = [v for v in g.window_vertices if v != root]
            slow = {frozenset((root,) + rest) for k in range(len(others) + 1)
                    for rest in itertools.combinations(others, k)
                    if g.is_connected_set((root,) + rest)}
            assert fast == slow, nm


def test_enumeration_cap_and_order():
    g = zd_box([7, 7], 0)
    with pytest.raises(CapError):
        enumerate_connected_vertex_sets(g, 0, 2, 11)
    a = enumerate_connected_vertex_sets(g, V(g, "3,3"), 2, 5)
    b = enumerate_connected_vertex_sets(g, V(g, "3,3"), 2, 5)
    assert a == b
    assert [tuple(sorted(s)) for s in a] == sorted(tuple(sorted(s)) for s in a)


def test_r_connected_edge_sets():
    g = zd_box([11, 11], 0)
    e = g.edge_between(V(g, "5,5"), V(g, "5,6"))
    assert enumerate_r_connected_edge_sets(g, e, 1, 1, 1) == [frozenset([e])]
    # a chain of two R-steps can reach edge distance 2R + 1, so use radius 6
    ball = [f for f in range(len(g.edges)) if edge_distance(g, e, f) <= 6]
    brute = {frozenset((e,) + rest) for rest in itertools.combinations(
        [f for f in ball if f != e], 2) if is_r_connected(g, (e,) + rest, 2)}
    got = enumerate_r_connected_edge_sets(g, e, 2, 3, 3, region=range(len(g.edges)))
    assert set(got) == brute and len(got) == len(brute)


def test_two_edges_at_distance_r():
    g = zd_box([9, 9], 0)
    e = g.edge_between(V(g, "4,4"), V(g, "4,5"))
    f = g.edge_between(V(g, "4,7"), V(g, "4,8"))
    assert edge_distance(g, e, f) == 2
    assert is_r_connected(g, [e, f], 2) and not is_r_connected(g, [e, f], 1)


def test_diameter():
    g = zd_box([5, 5])
    c = V(g, "2,2")
    assert diameter(g, [c]) == 0
    assert diameter(g, [c, V(g, "2,3")]) == 1
    assert diameter(g, [c, V(g, "2,3"), V(g, "3,3")]) == 2


def test_cut_set_function():
    g = zd_box([15, 15], 0)
    assert cut_set_function(g, 0) == 4
    assert cut_set_function(g, 1) == 6
    t = regular_tree(3, 6)
    assert cut_set_function(t, 0) == 3
    with pytest.raises(MarginError):
        cut_set_function(zd_box([5, 5], 0), 3)


def test_cut_set_function_bound_on_enumerated_sets():
    g = zd_box([15, 15], 0)
    f = {n: cut_set_function(g, n) for n in range(4)}
    for W in enumerate_connected_vertex_sets(g, g.center(), 1, 4, region=range(len(g.names))):
        assert len(edge_boundary(g, W)) >= f[diameter(g, W)]


def test_saw_counts():
    g = zd_box([25, 25], 0)
    c, roots = saw_counts(g, g.center(), 10)
    assert c == [4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100]
    assert all(a > b for a, b in zip(roots, roots[1:]))
    assert roots[-1] > 2.62
    t = regular_tree(3, 8)
    c, roots = saw_counts(t, t.vertex("r"), 6)
    assert c == [3 * 2 ** (n - 1) for n in range(1, 7)]
    with pytest.raises(MarginError):
        saw_counts(zd_box([5, 5], 0), 12, 4)


def test_distances_symmetric():
    g = zd_box([4, 5], 1)
    D = g.distances
    assert np.array_equal(D, D.T)
